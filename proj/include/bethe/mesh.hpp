#pragma once
#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bethe/bounds.hpp"
#include "bethe/model.hpp"

namespace bethe {

enum class MeshMethod { Simple, MinSum, AdaptiveSimple, AdaptiveMinSum, SecondDerivative };

const char* mesh_method_name(MeshMethod m);

// A sufficient mesh: per variable a strictly increasing list of candidate
// beliefs inside the box such that some joint mesh point comes within epsilon
// of the global Bethe minimum.
struct Mesh {
  MeshMethod method = MeshMethod::Simple;
  double epsilon = 0.0;
  std::vector<std::vector<double>> points;
  long long total_points() const;   // N = sum_i N_i
  double sum_log_points() const;    // log of the state-space product
};

// Integral of C + log(s/(1-s)) over [a,b]:
// [C s + s log s + (1-s) log(1-s)] from a to b, with 0 log 0 = 0.
double entropy_integral(double a, double b, double C);

// Uniform covering of [lo,hi] with spacing 2*gamma: points lo+gamma,
// lo+3*gamma, ... plus a final point hi-gamma when needed; if the interval is
// narrower than 2*gamma, its single midpoint. Every x in [lo,hi] lies within
// gamma of a point.
std::vector<double> uniform_points(double lo, double hi, double gamma);
// Exactly uniform_points(...).size() without materializing.
long long uniform_count(double lo, double hi, double gamma);

// gamma_i = eps / (n D_i). Satisfies N <= 2n + (n/eps) sum|w| when D uses the
// worst-case constants, and a fortiori with refined ones.
Mesh build_simple(const Model& m, const Bounds& b, double eps,
                  RangeMode mode = RangeMode::Refined);

// gamma_i = eps sqrt(S_i/D_i) / sum_j sqrt(S_j D_j) (the N-optimal Lagrangian
// choice under sum gamma_i D_i <= eps). Falls back to the simple-method gamma
// when per-dimension rounding makes the Lagrangian count larger, so
// N(minsum) <= N(simple) holds unconditionally.
Mesh build_minsum(const Model& m, const Bounds& b, double eps,
                  RangeMode mode = RangeMode::Refined);

// Greedy envelope-integral sweep: each point p is placed so the upper-envelope
// integral from the uncovered left end to p equals k_i*eps, and covers to the
// right up to its reach r with integral of -f^L from p to r equal to k_i*eps.
// Weights k_i must be positive and sum to 1; they are renormalized over the
// dimensions that do not degenerate to a single point.
Mesh build_adaptive(const Model& m, const Bounds& b, double eps, const Eigen::VectorXd& k,
                    MeshMethod tag = MeshMethod::AdaptiveSimple);

// k_i = 1/n (Simple) or k_i proportional to sqrt(S_i D_i) (MinSum).
Eigen::VectorXd adaptive_weights(const Model& m, const Bounds& b, MeshMethod flavor,
                                 RangeMode mode = RangeMode::Refined);

// Hessian magnitude bounds over the box, feeding the curvature-based mesh.
struct SecondOrderBounds {
  double a_tilde = 0.0;  // max over attractive edges of the |H_ij| bound
  double a_rep = 0.0;    // max over repulsive edges (via the flip relation)
  double b = 0.0;        // max over i of the H_ii bound
  double omega = 0.0;    // max of the above
  double sigma = 0.0;    // fraction of structurally nonzero Hessian entries
  double lambda = 0.0;   // n * omega * sqrt(sigma), spectral-norm surrogate
};
SecondOrderBounds second_order_bounds(const Model& m, const Bounds& b);

// Per-edge |H_ij| bound used by second_order_bounds (exposed for validation).
double edge_hessian_bound(const Model& m, const Bounds& b, const Edge& e);

// Constant gamma = sqrt(2 eps / (n Lambda)) in every dimension. Counts can be
// astronomically larger than the envelope methods; materialization refuses
// above `cap` points (count it instead).
Mesh build_second_derivative(const Model& m, const Bounds& b, double eps,
                             long long cap = 50'000'000);
long long second_derivative_count(const Model& m, const Bounds& b, double eps);
std::vector<long long> second_derivative_dim_counts(const Model& m, const Bounds& b, double eps);

// Per variable one line: "i N_i p_1 ... p_{N_i}".
std::string mesh_dump(const Mesh& mesh);

}  // namespace bethe
