#pragma once
#include <Eigen/Dense>
#include <string>

#include "bethe/model.hpp"

namespace bethe {

// Per-variable box [A_i, 1-B_i] certified to contain every minimum of the
// Bethe free energy, plus the per-variable envelope constants log L_i, log U_i
// entering the monotone derivative envelopes
//   f_i^L(q) = cL_i + log(q/(1-q)),   f_i^U(q) = cU_i + log(q/(1-q)),
//   cL_i = -theta_i - W_i + log U_i,  cU_i = -theta_i + V_i - log L_i,
// which sandwich dF/dq_i everywhere inside the box.
struct Bounds {
  Eigen::VectorXd A;     // lower bound on q_i
  Eigen::VectorXd B;     // lower bound on 1 - q_i
  Eigen::VectorXd logL;  // >= 0
  Eigen::VectorXd logU;  // >= 0
  double width(int i) const { return 1.0 - B[i] - A[i]; }
};

struct Envelope {
  double cL = 0.0, cU = 0.0;
  double lower(double q) const { return cL + std::log(q / (1.0 - q)); }
  double upper(double q) const { return cU + std::log(q / (1.0 - q)); }
};

double stable_sigmoid(double x);

// Initial box from the sigmoid bounds A_i = sigma(theta_i - V_i),
// 1 - B_i = sigma(theta_i + W_i); envelope constants start at zero.
Bounds sigmoid_bounds(const Model& m);

// Recompute logL/logU for the current box. Attractive edges use
// alpha = e^w - 1 directly; repulsive edges use alpha_eff = e^|w| - 1 with the
// neighbor's A/B swapped (equivalent to flipping the neighbor), keeping both
// constants >= 1 so the envelope logs stay nonnegative.
void refresh_envelope_logs(const Model& m, Bounds& b);

Envelope envelope_constants(const Model& m, const Bounds& b, int i);

// Iteratively tighten the box via the interior-zero necessary conditions
//   A_i <- max(A_i, sigma(theta_i - V_i + log L_i)),
//   1-B_i <- min(1-B_i, sigma(theta_i + W_i - log U_i)),
// with Jacobi sweeps (all updates read the previous sweep's box). Monotone:
// the box never widens.
Bounds bbp_refine(const Model& m, const Bounds& b, int max_iters = 1000, double tol = 1e-12);

enum class RangeMode { Simple, Refined };

// Bound D_i on the derivative magnitude over the box.
//   Simple:  V_i + W_i - log L_i - log U_i  (= cU_i - cL_i exactly)
//   Refined: min( max{ f_i^U(1-B_i), -f_i^L(A_i) }, simple )
double derivative_range(const Model& m, const Bounds& b, int i, RangeMode mode);

// Bounds file: n lines "i A_i B_i". The parsed box is intersected with the
// sigmoid box (an externally supplied box may only tighten it) and validated.
Bounds parse_bounds_file(const std::string& text, const Model& m);

}  // namespace bethe
