#include "bethe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bethe {

namespace {

double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

constexpr double kIntegralTol = 1e-10;
constexpr int kBisectIters = 200;
constexpr long long kPerDimCap = 50'000'000;

}  // namespace

const char* mesh_method_name(MeshMethod m) {
  switch (m) {
    case MeshMethod::Simple: return "simple";
    case MeshMethod::MinSum: return "minsum";
    case MeshMethod::AdaptiveSimple: return "adaptive-simple";
    case MeshMethod::AdaptiveMinSum: return "adaptive-minsum";
    case MeshMethod::SecondDerivative: return "second-derivative";
  }
  return "?";
}

long long Mesh::total_points() const {
  long long n = 0;
  for (const auto& p : points) n += static_cast<long long>(p.size());
  return n;
}

double Mesh::sum_log_points() const {
  double s = 0.0;
  for (const auto& p : points) s += std::log(static_cast<double>(p.size()));
  return s;
}

double entropy_integral(double a, double b, double c) {
  if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0))
    throw std::domain_error("entropy_integral: limits must lie in [0,1]");
  auto phi = [c](double s) { return c * s + xlogx(s) + xlogx(1.0 - s); };
  return phi(b) - phi(a);
}

std::vector<double> uniform_points(double lo, double hi, double gamma) {
  const double span = hi - lo;
  if (!(gamma > 0.0) || !std::isfinite(gamma) || span <= 2.0 * gamma)
    return {lo + span / 2.0};
  std::vector<double> pts;
  for (long long t = 1;; ++t) {
    const double p = lo + (2.0 * static_cast<double>(t) - 1.0) * gamma;
    if (p > hi - gamma) break;
    pts.push_back(p);
    if (static_cast<long long>(pts.size()) > kPerDimCap)
      throw std::length_error("uniform_points: dimension exceeds materialization cap");
  }
  if (pts.empty() || pts.back() + gamma < hi) pts.push_back(hi - gamma);
  return pts;
}

long long uniform_count(double lo, double hi, double gamma) {
  const double span = hi - lo;
  if (!(gamma > 0.0) || !std::isfinite(gamma) || span <= 2.0 * gamma) return 1;
  // Largest t with lo + (2t-1)*gamma <= hi - gamma, matching the builder's
  // floating-point comparisons exactly (closed-form estimate, then local fix).
  long long t = static_cast<long long>(std::floor(span / (2.0 * gamma)));
  t = std::max<long long>(t, 0);
  while (t >= 1 && lo + (2.0 * static_cast<double>(t) - 1.0) * gamma > hi - gamma) --t;
  while (lo + (2.0 * static_cast<double>(t + 1) - 1.0) * gamma <= hi - gamma) ++t;
  long long count = t;
  if (t == 0 || lo + (2.0 * static_cast<double>(t) - 1.0) * gamma + gamma < hi) ++count;
  return std::max<long long>(count, 1);
}

namespace {

Eigen::VectorXd range_vector(const Model& m, const Bounds& b, RangeMode mode) {
  Eigen::VectorXd d(m.n);
  for (int i = 0; i < m.n; ++i) d[i] = derivative_range(m, b, i, mode);
  return d;
}

Mesh build_uniform_family(const Model& m, const Bounds& b, double eps, MeshMethod method,
                          const Eigen::VectorXd& gamma) {
  Mesh mesh;
  mesh.method = method;
  mesh.epsilon = eps;
  mesh.points.resize(m.n);
  for (int i = 0; i < m.n; ++i)
    mesh.points[i] = uniform_points(b.A[i], 1.0 - b.B[i], gamma[i]);
  return mesh;
}

Eigen::VectorXd simple_gammas(const Model& m, double eps, const Eigen::VectorXd& d) {
  Eigen::VectorXd g(m.n);
  for (int i = 0; i < m.n; ++i)
    g[i] = d[i] > 0.0 ? eps / (m.n * d[i]) : std::numeric_limits<double>::infinity();
  return g;
}

long long count_for_gammas(const Model& m, const Bounds& b, const Eigen::VectorXd& gamma) {
  long long n = 0;
  for (int i = 0; i < m.n; ++i) n += uniform_count(b.A[i], 1.0 - b.B[i], gamma[i]);
  return n;
}

}  // namespace

Mesh build_simple(const Model& m, const Bounds& b, double eps, RangeMode mode) {
  if (!(eps > 0.0)) throw std::invalid_argument("build_simple: epsilon must be positive");
  const Eigen::VectorXd d = range_vector(m, b, mode);
  return build_uniform_family(m, b, eps, MeshMethod::Simple, simple_gammas(m, eps, d));
}

Mesh build_minsum(const Model& m, const Bounds& b, double eps, RangeMode mode) {
  if (!(eps > 0.0)) throw std::invalid_argument("build_minsum: epsilon must be positive");
  const Eigen::VectorXd d = range_vector(m, b, mode);
  double z = 0.0;
  for (int i = 0; i < m.n; ++i) {
    const double s = b.width(i);
    if (s > 0.0 && d[i] > 0.0) z += std::sqrt(s * d[i]);
  }
  Eigen::VectorXd gamma(m.n);
  for (int i = 0; i < m.n; ++i) {
    const double s = b.width(i);
    gamma[i] = (s > 0.0 && d[i] > 0.0 && z > 0.0)
                   ? eps * std::sqrt(s / d[i]) / z
                   : std::numeric_limits<double>::infinity();
  }
  // Per-dimension rounding can make the Lagrangian-optimal spacing lose to the
  // simple spacing; both satisfy sum gamma_i D_i <= eps, so take the smaller.
  const Eigen::VectorXd gamma_simple = simple_gammas(m, eps, d);
  if (count_for_gammas(m, b, gamma) > count_for_gammas(m, b, gamma_simple)) gamma = gamma_simple;
  return build_uniform_family(m, b, eps, MeshMethod::MinSum, gamma);
}

namespace {

// Bisection for monotone-increasing `integral` hitting `target` on [lo, hi];
// returns hi-side midpoint after tolerance or iteration budget.
template <typename F>
double solve_integral(const F& integral, double lo, double hi, double target) {
  double a = lo, b = hi;
  for (int it = 0; it < kBisectIters; ++it) {
    const double mid = 0.5 * (a + b);
    const double v = integral(mid);
    if (std::abs(v - target) < kIntegralTol) return mid;
    (v < target ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

std::vector<double> adaptive_dim(double lo, double hi, const Envelope& env, double keps) {
  if (env.upper(hi) <= 0.0) return {hi};  // F never increases rightward: right end covers all
  if (env.lower(lo) >= 0.0) return {lo};  // F never decreases rightward: left end covers all
  std::vector<double> pts;
  const double zero_u = stable_sigmoid(-env.cU);  // zero crossing of f^U
  const double zero_l = stable_sigmoid(-env.cL);  // zero crossing of f^L
  double left = lo;
  while (true) {
    // Next point p: integral of f^U over [left, p] equals the budget. The
    // integral increases only beyond f^U's zero, so bracket from there.
    auto up = [&](double p) { return entropy_integral(left, p, env.cU); };
    const double bracket_lo = std::max(left, zero_u);
    double p;
    if (up(hi) < keps) {
      pts.push_back(hi);  // budget cannot be exhausted: the right end covers back to `left`
      return pts;
    }
    p = solve_integral(up, bracket_lo, hi, keps);
    pts.push_back(p);
    if (static_cast<long long>(pts.size()) > kPerDimCap)
      throw std::length_error("adaptive mesh: dimension exceeds materialization cap");
    // Reach r: integral of -f^L over [p, r] equals the budget; -f^L is
    // positive only up to f^L's zero.
    const double end = std::min(zero_l, hi);
    auto down = [&](double r) { return -entropy_integral(p, r, env.cL); };
    if (end <= p || down(end) <= keps) return pts;  // p covers the rest of the box
    left = solve_integral(down, p, end, keps);
    if (left >= hi) return pts;
  }
}

}  // namespace

Eigen::VectorXd adaptive_weights(const Model& m, const Bounds& b, MeshMethod flavor,
                                 RangeMode mode) {
  if (flavor == MeshMethod::AdaptiveSimple)
    return Eigen::VectorXd::Constant(m.n, 1.0 / m.n);
  if (flavor != MeshMethod::AdaptiveMinSum)
    throw std::invalid_argument("adaptive_weights: flavor must be an adaptive method");
  const Eigen::VectorXd d = range_vector(m, b, mode);
  Eigen::VectorXd k(m.n);
  double smallest_positive = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m.n; ++i) {
    k[i] = std::sqrt(std::max(b.width(i) * d[i], 0.0));
    if (k[i] > 0.0) smallest_positive = std::min(smallest_positive, k[i]);
  }
  if (!std::isfinite(smallest_positive)) return Eigen::VectorXd::Constant(m.n, 1.0 / m.n);
  // A zero score means the box or the derivative range is degenerate there;
  // the builder collapses such dimensions to a single point and drops them
  // from the live budget, but it still requires strictly positive weights.
  for (int i = 0; i < m.n; ++i)
    if (k[i] <= 0.0) k[i] = smallest_positive;
  return k / k.sum();
}

Mesh build_adaptive(const Model& m, const Bounds& b, double eps, const Eigen::VectorXd& k,
                    MeshMethod tag) {
  if (!(eps > 0.0)) throw std::invalid_argument("build_adaptive: epsilon must be positive");
  if (k.size() != m.n || std::abs(k.sum() - 1.0) > 1e-9 || (k.array() <= 0.0).any())
    throw std::invalid_argument("build_adaptive: weights must be positive and sum to 1");
  Mesh mesh;
  mesh.method = tag;
  mesh.epsilon = eps;
  mesh.points.assign(m.n, {});

  std::vector<Envelope> env(m.n);
  std::vector<bool> degenerate(m.n, false);
  double live_weight = 0.0;
  for (int i = 0; i < m.n; ++i) {
    env[i] = envelope_constants(m, b, i);
    const double lo = b.A[i], hi = 1.0 - b.B[i];
    if (b.width(i) <= 0.0) {
      mesh.points[i] = {lo};
      degenerate[i] = true;
    } else if (env[i].upper(hi) <= 0.0) {
      mesh.points[i] = {hi};
      degenerate[i] = true;
    } else if (env[i].lower(lo) >= 0.0) {
      mesh.points[i] = {lo};
      degenerate[i] = true;
    } else {
      live_weight += k[i];
    }
  }
  for (int i = 0; i < m.n; ++i) {
    if (degenerate[i]) continue;
    const double budget = live_weight > 0.0 ? (k[i] / live_weight) * eps : eps;
    mesh.points[i] = adaptive_dim(b.A[i], 1.0 - b.B[i], env[i], budget);
  }
  return mesh;
}

namespace {

// Minimum over the box of the T_ij-style product denominator, by range
// position: disjoint ranges pin one endpoint of each; overlapping ranges
// reduce to the smaller of two endpoint variances scaled by (1-k).
double hij_denominator(double a_i, double b_i, double a_j, double b_j, double k) {
  const double lo_i = a_i, hi_i = 1.0 - b_i;
  const double lo_j = a_j, hi_j = 1.0 - b_j;
  if (hi_i <= lo_j) return b_i * a_j - (1.0 - b_i) * (1.0 - a_j) * k;
  if (hi_j <= lo_i) return b_j * a_i - (1.0 - b_j) * (1.0 - a_i) * k;
  if (lo_i <= lo_j && hi_i <= hi_j)
    return (1.0 - k) * std::min(a_j * (1.0 - a_j), b_i * (1.0 - b_i));
  if (lo_i <= lo_j && hi_j <= hi_i)
    return (1.0 - k) * std::min(a_j * (1.0 - a_j), b_j * (1.0 - b_j));
  if (lo_j <= lo_i && hi_i <= hi_j)
    return (1.0 - k) * std::min(a_i * (1.0 - a_i), b_i * (1.0 - b_i));
  return (1.0 - k) * std::min(a_i * (1.0 - a_i), b_j * (1.0 - b_j));
}

}  // namespace

double edge_hessian_bound(const Model&, const Bounds& b, const Edge& e) {
  const double alpha = std::expm1(e.w);
  if (e.w > 0) {
    const double r = alpha / (1.0 + alpha);
    const double y = hij_denominator(b.A[e.i], b.B[e.i], b.A[e.j], b.B[e.j], r * r);
    return r / y;
  }
  // Repulsive edge: flipping one end gives an attractive edge with
  // alpha' /(1+alpha') = -alpha and swaps the flipped end's A/B.
  const double r = -alpha;
  const double y = hij_denominator(b.A[e.i], b.B[e.i], b.B[e.j], b.A[e.j], alpha * alpha);
  return r / y;
}

SecondOrderBounds second_order_bounds(const Model& m, const Bounds& b) {
  SecondOrderBounds out;
  for (const Edge& e : m.edges) {
    const double bound = edge_hessian_bound(m, b, e);
    if (e.w > 0)
      out.a_tilde = std::max(out.a_tilde, bound);
    else
      out.a_rep = std::max(out.a_rep, bound);
  }
  for (int i = 0; i < m.n; ++i) {
    const double eta = std::min(b.A[i], b.B[i]);
    double s = 1.0 - m.degree(i);
    for (const auto& [j, w] : m.adj[i]) {
      (void)j;
      const double alpha = std::expm1(w);
      if (w > 0) {
        const double r = alpha / (1.0 + alpha);
        s += 1.0 / (1.0 - r * r);
      } else {
        s += 1.0 / (1.0 - alpha * alpha);
      }
    }
    out.b = std::max(out.b, s / (eta * (1.0 - eta)));
  }
  out.omega = std::max({out.a_tilde, out.a_rep, out.b});
  const double num_edges = static_cast<double>(m.edges.size());
  out.sigma = (m.n + 2.0 * num_edges) / (static_cast<double>(m.n) * m.n);
  out.lambda = m.n * out.omega * std::sqrt(out.sigma);
  return out;
}

namespace {

double second_derivative_gamma(const Model& m, const Bounds& b, double eps) {
  const SecondOrderBounds so = second_order_bounds(m, b);
  return std::sqrt(2.0 * eps / (m.n * so.lambda));
}

}  // namespace

Mesh build_second_derivative(const Model& m, const Bounds& b, double eps, long long cap) {
  if (!(eps > 0.0))
    throw std::invalid_argument("build_second_derivative: epsilon must be positive");
  const long long n = second_derivative_count(m, b, eps);
  if (n > cap)
    throw std::length_error("build_second_derivative: " + std::to_string(n) +
                            " points exceed the materialization cap; use the count API");
  const double gamma = second_derivative_gamma(m, b, eps);
  return build_uniform_family(m, b, eps, MeshMethod::SecondDerivative,
                              Eigen::VectorXd::Constant(m.n, gamma));
}

long long second_derivative_count(const Model& m, const Bounds& b, double eps) {
  long long total = 0;
  for (long long c : second_derivative_dim_counts(m, b, eps)) total += c;
  return total;
}

std::vector<long long> second_derivative_dim_counts(const Model& m, const Bounds& b, double eps) {
  if (!(eps > 0.0))
    throw std::invalid_argument("second_derivative_dim_counts: epsilon must be positive");
  const double gamma = second_derivative_gamma(m, b, eps);
  std::vector<long long> counts(m.n);
  for (int i = 0; i < m.n; ++i) counts[i] = uniform_count(b.A[i], 1.0 - b.B[i], gamma);
  return counts;
}

std::string mesh_dump(const Mesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  for (size_t i = 0; i < mesh.points.size(); ++i) {
    out << i << ' ' << mesh.points[i].size();
    for (double p : mesh.points[i]) out << ' ' << p;
    out << '\n';
  }
  return out.str();
}

}  // namespace bethe
