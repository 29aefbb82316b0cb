#pragma once
// Shared helpers for the test suites: seeded random model generation,
// finite-difference derivative oracles, Simpson quadrature, and a projected
// gradient descent used as an independent minimizer.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "bethe/bethe_core.hpp"
#include "bethe/bounds.hpp"
#include "bethe/model.hpp"
#include "bethe/rng.hpp"

namespace bethe::test {

struct ModelSpec {
  int n_min = 2, n_max = 8;
  double theta_max = 2.0;         // thetas uniform in [-theta_max, theta_max]
  double w_min = 0.2, w_max = 3.0;  // coupling magnitudes
  bool attractive = false;        // otherwise each edge sign is a coin flip
  double edge_prob = 0.4;         // independent per-pair edge probability
};

inline InputModel random_input_model(SplitMix64& rng, const ModelSpec& s) {
  InputModel m;
  m.n = s.n_min +
        (s.n_max > s.n_min ? static_cast<int>(rng.below(s.n_max - s.n_min + 1)) : 0);
  m.theta.resize(m.n);
  for (int i = 0; i < m.n; ++i) m.theta[i] = rng.uniform(-s.theta_max, s.theta_max);
  for (int i = 0; i < m.n; ++i)
    for (int j = i + 1; j < m.n; ++j) {
      if (rng.uniform01() >= s.edge_prob) continue;
      Edge e;
      e.i = i;
      e.j = j;
      e.w = rng.uniform(s.w_min, s.w_max);
      if (!s.attractive && rng.coin()) e.w = -e.w;
      m.edges.push_back(e);
    }
  return m;
}

inline Model random_model(SplitMix64& rng, const ModelSpec& s) {
  return reparameterize(random_input_model(rng, s));
}

inline InputModel random_tree_input(SplitMix64& rng, int n_min, int n_max, double theta_max,
                                    double w_min, double w_max, bool attractive) {
  InputModel m;
  m.n = n_min + (n_max > n_min ? static_cast<int>(rng.below(n_max - n_min + 1)) : 0);
  m.theta.resize(m.n);
  for (int i = 0; i < m.n; ++i) m.theta[i] = rng.uniform(-theta_max, theta_max);
  for (int t = 1; t < m.n; ++t) {
    Edge e;
    e.i = static_cast<int>(rng.below(t));
    e.j = t;
    e.w = rng.uniform(w_min, w_max);
    if (!attractive && rng.coin()) e.w = -e.w;
    m.edges.push_back(e);
  }
  return m;
}

// Model in the analysis convention built directly from fields.
inline Model make_model(int n, std::vector<double> theta, std::vector<Edge> edges,
                        double energy_offset = 0.0) {
  Model m;
  m.n = n;
  m.theta = Eigen::Map<Eigen::VectorXd>(theta.data(), n);
  m.edges = std::move(edges);
  m.energy_offset = energy_offset;
  m.finalize();
  return m;
}

inline Eigen::VectorXd fd_gradient(const Model& m, const Eigen::VectorXd& q,
                                   double h = 1e-6) {
  Eigen::VectorXd g(m.n);
  for (int i = 0; i < m.n; ++i) {
    Eigen::VectorXd hi = q, lo = q;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (free_energy(m, hi) - free_energy(m, lo)) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd fd_hessian(const Model& m, const Eigen::VectorXd& q,
                                  double h = 1e-4) {
  Eigen::MatrixXd out(m.n, m.n);
  const double f0 = free_energy(m, q);
  for (int i = 0; i < m.n; ++i) {
    Eigen::VectorXd up = q, dn = q;
    up[i] += h;
    dn[i] -= h;
    out(i, i) = (free_energy(m, up) - 2.0 * f0 + free_energy(m, dn)) / (h * h);
    for (int j = i + 1; j < m.n; ++j) {
      Eigen::VectorXd pp = q, pm = q, mp = q, mm = q;
      pp[i] += h;
      pp[j] += h;
      pm[i] += h;
      pm[j] -= h;
      mp[i] -= h;
      mp[j] += h;
      mm[i] -= h;
      mm[j] -= h;
      out(i, j) = (free_energy(m, pp) - free_energy(m, pm) - free_energy(m, mp) +
                   free_energy(m, mm)) /
                  (4.0 * h * h);
      out(j, i) = out(i, j);
    }
  }
  return out;
}

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int panels = 4000) {
  const double h = (b - a) / (2 * panels);
  double s = f(a) + f(b);
  for (int k = 1; k < 2 * panels; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// q drawn uniformly inside the box (degenerate dimensions collapse to A_i).
inline Eigen::VectorXd sample_box(SplitMix64& rng, const Bounds& b) {
  Eigen::VectorXd q(b.A.size());
  for (int i = 0; i < q.size(); ++i) {
    const double hi = 1.0 - b.B[i];
    q[i] = b.A[i] >= hi ? b.A[i] : rng.uniform(b.A[i], hi);
  }
  return q;
}

// Projected gradient descent on the free energy over [pad, 1-pad]^n with
// backtracking line search. Returns the final iterate (which may or may not
// be stationary; callers should check the gradient norm).
inline Eigen::VectorXd projected_descent(const Model& m, Eigen::VectorXd q,
                                         int max_iters = 5000, double pad = 1e-9) {
  auto clampv = [&](Eigen::VectorXd v) {
    for (int i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], pad, 1.0 - pad);
    return v;
  };
  q = clampv(std::move(q));
  double f = free_energy(m, q);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd g = gradient(m, q);
    double step = 1.0;
    bool moved = false;
    for (int back = 0; back < 60; ++back, step *= 0.5) {
      const Eigen::VectorXd cand = clampv(q - step * g);
      const double fc = free_energy(m, cand);
      if (fc < f - 1e-15) {
        q = cand;
        f = fc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return q;
}

}  // namespace bethe::test
