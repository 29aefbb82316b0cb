#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bethe/bounds.hpp"
#include "bethe/mesh.hpp"
#include "bethe/model.hpp"

namespace bethe {

enum class BoundsMethod { Sigmoid, Bbp, File };
enum class MeshChoice { Simple, MinSum, AdaptiveSimple, AdaptiveMinSum, SecondDerivative, Auto };
enum class SolverChoice { GraphCut, BruteForce, LocalSearch, Auto };

struct PipelineConfig {
  double epsilon = 0.1;
  BoundsMethod bounds = BoundsMethod::Bbp;
  MeshChoice mesh = MeshChoice::Auto;
  SolverChoice solver = SolverChoice::Auto;
  RangeMode range_mode = RangeMode::Refined;
  uint64_t seed = 0;
  long long brute_cap = 1'000'000;   // max state-space product for brute force
  int width_cap = 20;                // elimination width cap (exact compare)
  int restarts = 8;                  // local-search restarts
  bool exact_compare = false;
  bool collect_timing = true;
  std::string bounds_file_text;      // consulted only when bounds == File
  std::string mesh_dump_path;        // when set, write the materialized mesh here
  std::string problem_dump_path;     // when set, write the discrete cost tables here
};

// Mesh size bookkeeping for one method, aggregated over components.
// materialized marks the method whose mesh the solve actually used.
struct MeshStat {
  std::string method;
  long long total = 0;     // N = sum_i N_i
  double sum_log = 0.0;    // log of the label-space product
  bool materialized = false;
};

struct ExactBlock {
  bool present = false;
  std::string method;      // "enumerate" or "eliminate"
  double logZ = 0.0;       // exact log Z, input convention
  double gap = 0.0;        // logZ - logZB_estimate
  double mean_l1 = 0.0;    // mean |exact marginal - q*_i|
};

struct Report {
  int n = 0;
  long long edge_count = 0;
  int components = 0;
  long long dropped_zero_edges = 0;
  double epsilon = 0.0;
  uint64_t seed = 0;
  std::string bounds_method, mesh_method, solver_method;

  double logZB_estimate = 0.0;  // -F(q*) mapped back to the input convention
  bool certified = false;
  std::string guarantee;        // "within epsilon below log Z_B" | "lower bound only"
  Eigen::VectorXd q_star;

  std::vector<std::vector<double>> mesh_points_by_var;  // materialized, input order
  Eigen::VectorXd box_lo, box_hi;
  double box_width_min = 0.0, box_width_mean = 0.0, box_width_max = 0.0;
  std::vector<MeshStat> mesh_stats;

  ExactBlock exact;
  bool has_timing = false;
  std::vector<std::pair<std::string, double>> timings;  // (stage, seconds)
  std::vector<std::string> notes;
};

// Full run: parse, reparameterize, split into connected components, bound the
// box, mesh (auto mode sizes every method and materializes the smallest),
// build cost tables, solve the discrete problem, assemble the report.
// epsilon splits across components in proportion to each one's sum of |w|.
Report run_pipeline(const PipelineConfig& cfg, const std::string& model_text);

// Bounds + mesh stages only: per-method aggregated mesh sizes, nothing solved.
std::vector<MeshStat> mesh_statistics(const PipelineConfig& cfg, const std::string& model_text);

std::string report_text(const Report& r);
std::string report_csv(const Report& r);

struct GenerateParams {
  std::string kind = "random";  // pref-attach | tree | grid | random
  int n = 10;
  double mean_degree = 2.0;     // random kind only
  double theta_lo = 0.0, theta_hi = 0.0;  // equal endpoints = constant
  double w_lo = 1.0, w_hi = 1.0;          // coupling magnitude
  bool mixed_signs = false;     // flip each edge sign with probability 1/2
  uint64_t seed = 0;
};

// Deterministic synthetic model in the model-file format. Draw order: graph
// structure, then thetas (only when the range is non-degenerate), then
// coupling magnitudes (likewise), then signs when mixed.
std::string generate_model(const GenerateParams& p);

}  // namespace bethe
