#pragma once
#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bethe {

// Energy conventions.
//
// Input convention:    E_in(x)  = -sum_i theta_in_i x_i
//                                 -sum_(ij) [ (w_ij/2) x_i x_j + (w_ij/2)(1-x_i)(1-x_j) ]
// Analysis convention: E(x)     = -sum_i theta_i x_i - sum_(ij) w_ij x_i x_j
//
// Model::energy_offset satisfies, for every configuration x,
//     E(x) + energy_offset = E_in(x),
// hence log Z_in = log Z_analysis - energy_offset. All reported log-partition
// values refer to the input convention. The sign was calibrated once against
// the two-variable enumeration check in the tests.

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_no, const std::string& what)
      : std::runtime_error("parse error at line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
};

struct Edge {
  int i = 0, j = 0;  // i < j
  double w = 0.0;    // never 0 in a finalized Model
};

struct InputModel {
  int n = 0;
  std::vector<Edge> edges;
  Eigen::VectorXd theta;        // input convention
  int dropped_zero_edges = 0;   // zero-weight edges removed at parse time
};

struct Model {
  int n = 0;
  std::vector<Edge> edges;      // sorted by (i,j), i < j
  Eigen::VectorXd theta;        // analysis convention
  double energy_offset = 0.0;

  // Derived (filled by finalize()).
  std::vector<std::vector<std::pair<int, double>>> adj;  // i -> (neighbor, w)
  Eigen::VectorXi deg;
  Eigen::VectorXd w_pos;        // W_i = sum of positive incident couplings
  Eigen::VectorXd v_neg;        // V_i = -(sum of negative incident couplings)
  double max_abs_w = 0.0;
  double max_abs_theta_in = 0.0;

  void finalize();
  int degree(int i) const { return deg[i]; }
  double sum_abs_w() const;
};

// Model file: line 1 "n m"; n lines "i theta_i"; m lines "i j w_ij" (input
// convention). '#'-prefixed comment lines and blank lines are skipped.
InputModel parse_model(const std::string& text);
std::string to_model_text(const InputModel& m);

Model reparameterize(const InputModel& in);

// Substitute X_i' = 1 - X_i for all i (flip_all) or for i in R (flip_subset);
// energies are preserved through energy_offset.
Model flip_all(const Model& m);
Model flip_subset(const Model& m, const std::vector<int>& flip_set);

struct Component {
  Model model;
  std::vector<int> vars;  // original variable index per local index
  bool isolated = false;  // single variable, no edges
};

// Connected components as independent models. Energy offsets are distributed
// so that the per-component values sum exactly to the whole-model offset.
std::vector<Component> split_components(const Model& m);

double model_energy(const Model& m, const std::vector<int>& x);
double input_energy(const InputModel& m, const std::vector<int>& x);

}  // namespace bethe
