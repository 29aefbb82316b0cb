#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bethe/bounds.hpp"
#include "bethe/model.hpp"

namespace bethe {

// Exact inference output. logZ is reported in the input-file convention
// (the model's stored energy offset is folded back in); marginals are
// p(X_i = 1), which the offset does not affect.
struct ExactResult {
  double logZ = 0.0;
  Eigen::VectorXd marginals;
};

// Exact logZ and marginals by summing all 2^n states in log-space.
// Refuses n > 25.
ExactResult enumerate_exact(const Model& m);

// Exact logZ and marginals by variable elimination with a min-fill ordering
// (ties broken toward the smallest variable index), log-space tables
// throughout. Marginals come from n additional runs with one variable clamped
// to 1 each. Refuses (naming the offending width) when the induced width
// exceeds width_cap.
ExactResult eliminate(const Model& m, int width_cap = 20);

// Induced width of the min-fill elimination ordering for the model's graph.
int minfill_width(const Model& m);

struct GridMin {
  double f_min = 0.0;
  Eigen::VectorXd argmin;
};

// Minimum of the Bethe free energy over the cartesian grid of the given
// per-variable point lists (every list nonempty, entries in (0,1) or at the
// box ends). Shared engine for the dense oracle below and for evaluating the
// best point of an already-built mesh.
GridMin grid_min_over(const Model& m, const std::vector<std::vector<double>>& points);

// Dense-grid oracle: minimizes the Bethe free energy over an axis-aligned
// grid of the box [A_i, 1-B_i] with the given step, endpoints included.
// Refuses n > 3 or step < 1e-3 (the grid would be enormous).
GridMin dense_grid_min(const Model& m, const Bounds& b, double step);

// Damped parallel loopy belief propagation from random message starts.
// Returns the pseudo-marginal vectors of the runs whose beliefs converged
// (max belief change < 1e-10) and that are genuine stationary points
// (sup-norm of the free-energy gradient <= 1e-6). Validation helper only;
// the pipeline never uses it as a solver.
std::vector<Eigen::VectorXd> lbp_fixed_points(const Model& m, int starts, int max_iters,
                                              double damping, uint64_t seed);

}  // namespace bethe
