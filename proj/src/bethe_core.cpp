#include "bethe/bethe_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bethe {

namespace {

constexpr double kClip = 1e-12;

double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

double clamp_interior(double q) { return std::clamp(q, kClip, 1.0 - kClip); }

}  // namespace

double solve_xi(double q_i, double q_j, double alpha) {
  if (!(q_i > 0.0 && q_i < 1.0 && q_j > 0.0 && q_j < 1.0))
    throw std::domain_error("solve_xi: beliefs must be strictly inside (0,1)");
  if (!(alpha > -1.0)) throw std::domain_error("solve_xi: alpha must exceed -1");
  if (std::abs(alpha) < 1e-12) return q_i * q_j;  // independence limit

  // Stable extraction: compute the root farther from cancellation first,
  // recover the other from the product of roots c/a.
  const double b = -(1.0 + alpha * (q_i + q_j));
  const double c = (1.0 + alpha) * q_i * q_j;
  double disc = b * b - 4.0 * alpha * c;
  if (disc < 0.0) disc = 0.0;  // roots are real; clamp roundoff
  const double big = -(b + std::copysign(std::sqrt(disc), b)) / 2.0;
  const double r1 = big / alpha;
  const double r2 = big != 0.0 ? c / big : std::numeric_limits<double>::infinity();
  double xi = alpha > 0.0 ? std::min(r1, r2) : std::max(r1, r2);
  const double lo = std::max(0.0, q_i + q_j - 1.0);
  const double hi = std::min(q_i, q_j);
  return std::clamp(xi, lo, hi);
}

double joint_belief(double q_i, double q_j, double alpha) {
  if (q_i <= 0.0 || q_j <= 0.0) return 0.0;
  if (q_i >= 1.0) return q_j >= 1.0 ? 1.0 : q_j;
  if (q_j >= 1.0) return q_i;
  return solve_xi(q_i, q_j, alpha);
}

double singleton_entropy(double q) { return -(xlogx(q) + xlogx(1.0 - q)); }

double pairwise_f(double q_i, double q_j, double w) {
  const double alpha = std::expm1(w);
  const double xi = joint_belief(q_i, q_j, alpha);
  const double t00 = std::max(0.0, 1.0 + xi - q_i - q_j);
  const double t01 = std::max(0.0, q_j - xi);
  const double t10 = std::max(0.0, q_i - xi);
  const double entropy = -(xlogx(t00) + xlogx(t01) + xlogx(t10) + xlogx(xi));
  return -w * xi - entropy;
}

double free_energy(const Model& m, const Eigen::VectorXd& q) {
  if (q.size() != m.n) throw std::invalid_argument("free_energy: size mismatch");
  double f = 0.0;
  for (const Edge& e : m.edges) f += pairwise_f(q[e.i], q[e.j], e.w);
  for (int i = 0; i < m.n; ++i)
    f += -m.theta[i] * q[i] + (m.degree(i) - 1) * singleton_entropy(q[i]);
  return f;
}

Eigen::VectorXd gradient(const Model& m, const Eigen::VectorXd& q) {
  if (q.size() != m.n) throw std::invalid_argument("gradient: size mismatch");
  for (int i = 0; i < m.n; ++i)
    if (!(q[i] > 0.0 && q[i] < 1.0))
      throw std::domain_error("gradient: beliefs must be strictly inside (0,1)");
  Eigen::VectorXd g(m.n);
  for (int i = 0; i < m.n; ++i) {
    const double qi = clamp_interior(q[i]);
    double acc = (m.degree(i) - 1) * (std::log(1.0 - qi) - std::log(qi));
    for (const auto& [j, w] : m.adj[i]) {
      const double qj = clamp_interior(q[j]);
      const double xi = joint_belief(qi, qj, std::expm1(w));
      acc += std::log(std::max(qi - xi, 1e-300)) -
             std::log(std::max(1.0 + xi - qi - qj, 1e-300));
    }
    g[i] = -m.theta[i] + acc;
  }
  return g;
}

Eigen::MatrixXd hessian(const Model& m, const Eigen::VectorXd& q) {
  if (q.size() != m.n) throw std::invalid_argument("hessian: size mismatch");
  for (int i = 0; i < m.n; ++i)
    if (!(q[i] > 0.0 && q[i] < 1.0))
      throw std::domain_error("hessian: beliefs must be strictly inside (0,1)");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m.n, m.n);
  for (int i = 0; i < m.n; ++i) {
    const double qi = clamp_interior(q[i]);
    h(i, i) = -(m.degree(i) - 1) / (qi * (1.0 - qi));
  }
  for (const Edge& e : m.edges) {
    const double qi = clamp_interior(q[e.i]);
    const double qj = clamp_interior(q[e.j]);
    const double xi = joint_belief(qi, qj, std::expm1(e.w));
    const double dev = xi - qi * qj;
    const double t = qi * qj * (1.0 - qi) * (1.0 - qj) - dev * dev;
    if (!(t > 0.0)) throw std::runtime_error("hessian: nonpositive edge denominator");
    h(e.i, e.j) = h(e.j, e.i) = -dev / t;
    h(e.i, e.i) += qj * (1.0 - qj) / t;
    h(e.j, e.j) += qi * (1.0 - qi) / t;
  }
  return h;
}

}  // namespace bethe
