#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bethe/mesh.hpp"
#include "bethe/model.hpp"

namespace bethe {

// The discretized Bethe minimization as a multi-label MAP problem over mesh
// indices: unary[i][a] = -theta_i q + (d_i - 1) S_i(q) at q = points[i][a],
// pairwise[e](a,b) = f_ij at the mesh points. The cost of a labeling equals
// free_energy at the corresponding q exactly.
struct DiscreteProblem {
  int n = 0;
  std::vector<Edge> edges;                   // same topology as the model
  std::vector<std::vector<double>> unary;    // [i][a]
  std::vector<Eigen::MatrixXd> pairwise;     // per edge; rows: labels of i, cols: labels of j
  std::vector<std::vector<double>> points;   // mesh points backing each label
  Eigen::VectorXd theta;                     // kept for deterministic search starts
  double sum_log_states() const;             // log of prod_i N_i
  bool states_within(long long cap) const;   // prod_i N_i <= cap, overflow-safe
};

struct Labeling {
  std::vector<int> label;
  double cost = 0.0;
  bool certified_optimal = false;
};

struct NotSubmodularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

DiscreteProblem build_cost_tables(const Model& m, const Mesh& mesh);

double labeling_cost(const DiscreteProblem& p, const std::vector<int>& label);
Eigen::VectorXd labeling_to_beliefs(const DiscreteProblem& p, const std::vector<int>& label);

// Submodularity of each pairwise table over ordered labels, via all adjacent
// 2x2 minors: table(a,b) + table(a+1,b+1) <= table(a,b+1) + table(a+1,b) with
// 1e-12 slack. Single-point dimensions are vacuously submodular.
std::vector<char> is_submodular(const DiscreteProblem& p);
bool all_submodular(const DiscreteProblem& p);

// Exact MAP for fully submodular instances via the threshold-chain graph
// construction solved by max-flow. One chain node per (variable, label >= a)
// indicator; infinite reverse arcs force monotone cuts; unary costs sit on
// chain arcs; cross arcs carry the negated second differences of the pairwise
// tables. fixed_point switches the flow solver to scaled int64 arithmetic.
Labeling solve_graphcut(const DiscreteProblem& p, bool fixed_point = false);

// Exact minimum by depth-first enumeration (ties: lexicographically smallest
// label vector); refuses when prod_i N_i exceeds `cap`.
Labeling solve_bruteforce(const DiscreteProblem& p, long long cap = 1'000'000);

// Iterated conditional modes from `restarts` starts: the first start is the
// mesh point nearest sigma(theta_i) per variable, later starts are uniform
// from the seeded generator. Never certified.
Labeling solve_localsearch(const DiscreteProblem& p, int restarts, uint64_t seed);

// Line-based dump: per-variable unary blocks, then per-edge pairwise blocks.
std::string problem_dump(const DiscreteProblem& p);

}  // namespace bethe
