#include "bethe/exact_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bethe/bethe_core.hpp"
#include "bethe/rng.hpp"

namespace bethe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Unnormalized log-weight of a state under the model convention,
// log w(x) = sum_i theta_i x_i + sum_ij w_ij x_i x_j.
double state_log_weight(const Model& m, uint32_t bits) {
  double s = 0.0;
  for (int i = 0; i < m.n; ++i)
    if (bits >> i & 1u) s += m.theta[i];
  for (const Edge& e : m.edges)
    if ((bits >> e.i & 1u) && (bits >> e.j & 1u)) s += e.w;
  return s;
}

}  // namespace

ExactResult enumerate_exact(const Model& m) {
  if (m.n > 25) throw std::length_error("enumerate_exact: n > 25");
  const uint64_t states = 1ull << m.n;

  double top = kNegInf;
  for (uint64_t s = 0; s < states; ++s)
    top = std::max(top, state_log_weight(m, static_cast<uint32_t>(s)));

  double total = 0.0;
  Eigen::VectorXd on = Eigen::VectorXd::Zero(m.n);
  for (uint64_t s = 0; s < states; ++s) {
    const double w = std::exp(state_log_weight(m, static_cast<uint32_t>(s)) - top);
    total += w;
    for (int i = 0; i < m.n; ++i)
      if (s >> i & 1u) on[i] += w;
  }

  ExactResult out;
  out.logZ = top + std::log(total) - m.energy_offset;
  out.marginals = on / total;
  return out;
}

namespace {

// Log-space factor over a sorted variable scope; table index bit k holds the
// value of scope[k].
struct LogFactor {
  std::vector<int> scope;
  std::vector<double> table;
};

LogFactor multiply(const LogFactor& f, const LogFactor& g) {
  LogFactor out;
  std::set_union(f.scope.begin(), f.scope.end(), g.scope.begin(), g.scope.end(),
                 std::back_inserter(out.scope));
  const int k = static_cast<int>(out.scope.size());
  auto bit_positions = [&](const std::vector<int>& scope) {
    std::vector<int> pos(scope.size());
    for (size_t a = 0; a < scope.size(); ++a)
      pos[a] = static_cast<int>(std::lower_bound(out.scope.begin(), out.scope.end(), scope[a]) -
                                out.scope.begin());
    return pos;
  };
  const std::vector<int> fpos = bit_positions(f.scope);
  const std::vector<int> gpos = bit_positions(g.scope);
  out.table.assign(1ull << k, 0.0);
  for (size_t idx = 0; idx < out.table.size(); ++idx) {
    size_t fi = 0, gi = 0;
    for (size_t a = 0; a < fpos.size(); ++a) fi |= (idx >> fpos[a] & 1u) << a;
    for (size_t a = 0; a < gpos.size(); ++a) gi |= (idx >> gpos[a] & 1u) << a;
    out.table[idx] = f.table[fi] + g.table[gi];
  }
  return out;
}

// Sum the factor's variable `v` out in log-space.
LogFactor marginalize(const LogFactor& f, int v) {
  const int pos = static_cast<int>(std::lower_bound(f.scope.begin(), f.scope.end(), v) -
                                   f.scope.begin());
  LogFactor out;
  out.scope = f.scope;
  out.scope.erase(out.scope.begin() + pos);
  out.table.assign(f.table.size() >> 1, kNegInf);
  const size_t low_mask = (size_t{1} << pos) - 1;
  for (size_t idx = 0; idx < out.table.size(); ++idx) {
    const size_t base = (idx & low_mask) | ((idx & ~low_mask) << 1);
    const double a = f.table[base];
    const double b = f.table[base | (size_t{1} << pos)];
    const double hi = std::max(a, b);
    out.table[idx] = hi == kNegInf ? kNegInf : hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  }
  return out;
}

// Min-fill elimination order; returns (order, induced width).
std::pair<std::vector<int>, int> minfill_order(const Model& m) {
  std::vector<std::set<int>> nb(m.n);
  for (const Edge& e : m.edges) {
    nb[e.i].insert(e.j);
    nb[e.j].insert(e.i);
  }
  std::vector<char> alive(m.n, 1);
  std::vector<int> order;
  order.reserve(m.n);
  int width = 0;
  for (int step = 0; step < m.n; ++step) {
    int best = -1;
    long long best_fill = -1;
    for (int v = 0; v < m.n; ++v) {
      if (!alive[v]) continue;
      long long fill = 0;
      for (auto it = nb[v].begin(); it != nb[v].end(); ++it)
        for (auto jt = std::next(it); jt != nb[v].end(); ++jt)
          if (!nb[*it].count(*jt)) ++fill;
      if (best == -1 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }
    order.push_back(best);
    width = std::max(width, static_cast<int>(nb[best].size()));
    for (int u : nb[best])
      for (int w : nb[best])
        if (u < w) {
          nb[u].insert(w);
          nb[w].insert(u);
        }
    for (int u : nb[best]) nb[u].erase(best);
    nb[best].clear();
    alive[best] = 0;
  }
  return {order, width};
}

// logZ in the model convention for the given elimination order; clamp >= 0
// forces x_clamp = 1 via an extra {-inf, 0} singleton factor.
double eliminate_log_z(const Model& m, const std::vector<int>& order, int clamp) {
  std::vector<LogFactor> factors;
  factors.reserve(m.n + m.edges.size() + 1);
  for (int i = 0; i < m.n; ++i) factors.push_back({{i}, {0.0, m.theta[i]}});
  for (const Edge& e : m.edges) factors.push_back({{e.i, e.j}, {0.0, 0.0, 0.0, e.w}});
  if (clamp >= 0) factors.push_back({{clamp}, {kNegInf, 0.0}});

  for (int v : order) {
    LogFactor merged{{}, {0.0}};
    std::vector<LogFactor> rest;
    rest.reserve(factors.size());
    for (LogFactor& f : factors) {
      if (std::binary_search(f.scope.begin(), f.scope.end(), v))
        merged = merged.scope.empty() ? std::move(f) : multiply(merged, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(marginalize(merged, v));
    factors = std::move(rest);
  }
  double log_z = 0.0;
  for (const LogFactor& f : factors) log_z += f.table[0];
  return log_z;
}

}  // namespace

int minfill_width(const Model& m) { return minfill_order(m).second; }

ExactResult eliminate(const Model& m, int width_cap) {
  const auto [order, width] = minfill_order(m);
  if (width > width_cap)
    throw std::length_error("eliminate: induced width " + std::to_string(width) +
                            " exceeds cap " + std::to_string(width_cap));
  const double log_z_model = eliminate_log_z(m, order, -1);
  ExactResult out;
  out.logZ = log_z_model - m.energy_offset;
  out.marginals.resize(m.n);
  for (int i = 0; i < m.n; ++i)
    out.marginals[i] = std::exp(eliminate_log_z(m, order, i) - log_z_model);
  return out;
}

namespace {

std::vector<double> unary_costs(const Model& m, const std::vector<double>& pts, int i) {
  std::vector<double> u(pts.size());
  for (size_t a = 0; a < pts.size(); ++a)
    u[a] = -m.theta[i] * pts[a] + (m.degree(i) - 1) * singleton_entropy(pts[a]);
  return u;
}

Eigen::MatrixXd edge_table(const std::vector<double>& pi, const std::vector<double>& pj,
                           double w) {
  Eigen::MatrixXd t(pi.size(), pj.size());
  for (size_t a = 0; a < pi.size(); ++a)
    for (size_t b = 0; b < pj.size(); ++b) t(a, b) = pairwise_f(pi[a], pj[b], w);
  return t;
}

}  // namespace

GridMin grid_min_over(const Model& m, const std::vector<std::vector<double>>& points) {
  if (m.n > 3) throw std::length_error("grid_min_over: n > 3");
  if (static_cast<int>(points.size()) != m.n)
    throw std::invalid_argument("grid_min_over: point lists do not match model");
  for (const auto& pts : points)
    if (pts.empty()) throw std::invalid_argument("grid_min_over: empty point list");

  std::vector<std::vector<double>> unary(m.n);
  for (int i = 0; i < m.n; ++i) unary[i] = unary_costs(m, points[i], i);

  GridMin out;
  out.f_min = std::numeric_limits<double>::infinity();
  out.argmin.resize(m.n);
  std::vector<int> best(m.n, 0);

  if (m.n == 1) {
    for (size_t a = 0; a < points[0].size(); ++a)
      if (unary[0][a] < out.f_min) {
        out.f_min = unary[0][a];
        best[0] = static_cast<int>(a);
      }
  } else if (m.n == 2) {
    Eigen::MatrixXd t01 = Eigen::MatrixXd::Zero(points[0].size(), points[1].size());
    for (const Edge& e : m.edges) t01 += edge_table(points[0], points[1], e.w);
    for (Eigen::Index a = 0; a < t01.rows(); ++a)
      for (Eigen::Index b = 0; b < t01.cols(); ++b) {
        const double f = unary[0][a] + unary[1][b] + t01(a, b);
        if (f < out.f_min) {
          out.f_min = f;
          best = {static_cast<int>(a), static_cast<int>(b)};
        }
      }
  } else {
    const auto k0 = static_cast<Eigen::Index>(points[0].size());
    const auto k1 = static_cast<Eigen::Index>(points[1].size());
    const auto k2 = static_cast<Eigen::Index>(points[2].size());
    Eigen::MatrixXd t01 = Eigen::MatrixXd::Zero(k0, k1);
    // Row-major so that rows (fixed first index, scanning the last index) are
    // contiguous in the innermost loop below.
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat t02 = RowMat::Zero(k0, k2), t12 = RowMat::Zero(k1, k2);
    for (const Edge& e : m.edges) {
      if (e.i == 0 && e.j == 1) t01 += edge_table(points[0], points[1], e.w);
      if (e.i == 0 && e.j == 2) t02 += edge_table(points[0], points[2], e.w);
      if (e.i == 1 && e.j == 2) t12 += edge_table(points[1], points[2], e.w);
    }
    for (Eigen::Index a = 0; a < k0; ++a) {
      const double* row02 = t02.row(a).data();
      for (Eigen::Index b = 0; b < k1; ++b) {
        const double base = unary[0][a] + unary[1][b] + t01(a, b);
        const double* row12 = t12.row(b).data();
        for (Eigen::Index c = 0; c < k2; ++c) {
          const double f = base + unary[2][c] + row02[c] + row12[c];
          if (f < out.f_min) {
            out.f_min = f;
            best = {static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)};
          }
        }
      }
    }
  }
  for (int i = 0; i < m.n; ++i) out.argmin[i] = points[i][best[i]];
  return out;
}

GridMin dense_grid_min(const Model& m, const Bounds& b, double step) {
  if (m.n > 3) throw std::length_error("dense_grid_min: n > 3");
  if (step < 1e-3) throw std::invalid_argument("dense_grid_min: step below 1e-3");
  std::vector<std::vector<double>> points(m.n);
  for (int i = 0; i < m.n; ++i) {
    const double lo = b.A[i], hi = 1.0 - b.B[i];
    for (double p = lo; p < hi - 1e-15; p += step) points[i].push_back(p);
    points[i].push_back(hi);
  }
  return grid_min_over(m, points);
}

std::vector<Eigen::VectorXd> lbp_fixed_points(const Model& m, int starts, int max_iters,
                                              double damping, uint64_t seed) {
  SplitMix64 rng(seed);
  // Directed messages, one per (edge, direction); msg[2e] is i->j, msg[2e+1]
  // is j->i. Each message stores (log value at x=0, log value at x=1),
  // normalized so the max entry is 0.
  const size_t dir_count = 2 * m.edges.size();

  std::vector<Eigen::VectorXd> found;
  for (int run = 0; run < starts; ++run) {
    std::vector<std::array<double, 2>> msg(dir_count);
    for (auto& mm : msg) {
      mm = {run == 0 ? 0.0 : rng.uniform(-1.0, 1.0), run == 0 ? 0.0 : rng.uniform(-1.0, 1.0)};
      const double top = std::max(mm[0], mm[1]);
      mm[0] -= top;
      mm[1] -= top;
    }

    auto belief = [&](int i) {
      std::array<double, 2> b_i = {0.0, m.theta[i]};
      for (size_t e = 0; e < m.edges.size(); ++e) {
        if (m.edges[e].j == i)
          for (int x = 0; x < 2; ++x) b_i[x] += msg[2 * e][x];
        else if (m.edges[e].i == i)
          for (int x = 0; x < 2; ++x) b_i[x] += msg[2 * e + 1][x];
      }
      return b_i;
    };

    Eigen::VectorXd q(m.n);
    for (int i = 0; i < m.n; ++i) {
      const auto b_i = belief(i);
      q[i] = stable_sigmoid(b_i[1] - b_i[0]);
    }

    bool converged = false;
    for (int it = 0; it < max_iters && !converged; ++it) {
      std::vector<std::array<double, 2>> next(dir_count);
      for (size_t e = 0; e < m.edges.size(); ++e) {
        const int i = m.edges[e].i, j = m.edges[e].j;
        const double w = m.edges[e].w;
        for (int dir = 0; dir < 2; ++dir) {
          const int from = dir == 0 ? i : j;
          // Log of the sender's pre-message (unary times incoming messages
          // from everyone but the receiver), per sender state.
          std::array<double, 2> pre = {0.0, m.theta[from]};
          for (size_t e2 = 0; e2 < m.edges.size(); ++e2) {
            if (e2 == e) continue;
            if (m.edges[e2].j == from)
              for (int x = 0; x < 2; ++x) pre[x] += msg[2 * e2][x];
            else if (m.edges[e2].i == from)
              for (int x = 0; x < 2; ++x) pre[x] += msg[2 * e2 + 1][x];
          }
          std::array<double, 2> upd;
          for (int x = 0; x < 2; ++x) {
            const double s0 = pre[0];
            const double s1 = pre[1] + w * x;
            const double hi = std::max(s0, s1);
            upd[x] = hi + std::log(std::exp(s0 - hi) + std::exp(s1 - hi));
          }
          auto& cur = msg[2 * e + dir];
          std::array<double, 2> mixed = {damping * cur[0] + (1.0 - damping) * upd[0],
                                         damping * cur[1] + (1.0 - damping) * upd[1]};
          const double top = std::max(mixed[0], mixed[1]);
          next[2 * e + dir] = {mixed[0] - top, mixed[1] - top};
        }
      }
      msg = std::move(next);

      double change = 0.0;
      Eigen::VectorXd q_new(m.n);
      for (int i = 0; i < m.n; ++i) {
        const auto b_i = belief(i);
        q_new[i] = stable_sigmoid(b_i[1] - b_i[0]);
        change = std::max(change, std::abs(q_new[i] - q[i]));
      }
      q = std::move(q_new);
      if (change < 1e-10) converged = true;
    }

    if (!converged) continue;
    const Eigen::VectorXd g = gradient(m, q);
    if (g.lpNorm<Eigen::Infinity>() <= 1e-6) found.push_back(q);
  }
  return found;
}

}  // namespace bethe
