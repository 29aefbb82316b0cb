#include "bethe/discrete_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bethe/bethe_core.hpp"
#include "bethe/bounds.hpp"
#include "bethe/maxflow.hpp"
#include "bethe/rng.hpp"

namespace bethe {

double DiscreteProblem::sum_log_states() const {
  double s = 0.0;
  for (const auto& pts : points) s += std::log(static_cast<double>(pts.size()));
  return s;
}

bool DiscreteProblem::states_within(long long cap) const {
  long long prod = 1;
  for (const auto& pts : points) {
    const long long k = static_cast<long long>(pts.size());
    if (prod > cap / std::max<long long>(k, 1)) return false;
    prod *= k;
    if (prod > cap) return false;
  }
  return true;
}

DiscreteProblem build_cost_tables(const Model& m, const Mesh& mesh) {
  if (static_cast<int>(mesh.points.size()) != m.n)
    throw std::invalid_argument("build_cost_tables: mesh does not match model");
  DiscreteProblem p;
  p.n = m.n;
  p.edges = m.edges;
  p.points = mesh.points;
  p.theta = m.theta;
  p.unary.resize(m.n);
  for (int i = 0; i < m.n; ++i) {
    const auto& pts = mesh.points[i];
    p.unary[i].resize(pts.size());
    for (size_t a = 0; a < pts.size(); ++a)
      p.unary[i][a] = -m.theta[i] * pts[a] + (m.degree(i) - 1) * singleton_entropy(pts[a]);
  }
  p.pairwise.reserve(m.edges.size());
  for (const Edge& e : m.edges) {
    const auto& pi = mesh.points[e.i];
    const auto& pj = mesh.points[e.j];
    Eigen::MatrixXd table(pi.size(), pj.size());
    for (size_t a = 0; a < pi.size(); ++a)
      for (size_t b = 0; b < pj.size(); ++b)
        table(a, b) = pairwise_f(pi[a], pj[b], e.w);
    p.pairwise.push_back(std::move(table));
  }
  return p;
}

double labeling_cost(const DiscreteProblem& p, const std::vector<int>& label) {
  double cost = 0.0;
  for (int i = 0; i < p.n; ++i) cost += p.unary[i][label[i]];
  for (size_t e = 0; e < p.edges.size(); ++e)
    cost += p.pairwise[e](label[p.edges[e].i], label[p.edges[e].j]);
  return cost;
}

Eigen::VectorXd labeling_to_beliefs(const DiscreteProblem& p, const std::vector<int>& label) {
  Eigen::VectorXd q(p.n);
  for (int i = 0; i < p.n; ++i) q[i] = p.points[i][label[i]];
  return q;
}

std::vector<char> is_submodular(const DiscreteProblem& p) {
  std::vector<char> out(p.edges.size(), 1);
  for (size_t e = 0; e < p.edges.size(); ++e) {
    const Eigen::MatrixXd& t = p.pairwise[e];
    for (Eigen::Index a = 0; a + 1 < t.rows() && out[e]; ++a)
      for (Eigen::Index b = 0; b + 1 < t.cols(); ++b)
        if (t(a, b) + t(a + 1, b + 1) > t(a, b + 1) + t(a + 1, b) + 1e-12) {
          out[e] = 0;
          break;
        }
  }
  return out;
}

bool all_submodular(const DiscreteProblem& p) {
  const std::vector<char> per_edge = is_submodular(p);
  return std::all_of(per_edge.begin(), per_edge.end(), [](char c) { return c != 0; });
}

namespace {

// Shared threshold-chain assembly; Network is FlowNetworkT<double> or <int64>.
// quantize maps a nonnegative double cost to the capacity type.
template <typename Network, typename Quantize>
Labeling run_graphcut(const DiscreteProblem& p, Quantize quantize) {
  const int n = p.n;
  std::vector<int> k(n);
  for (int i = 0; i < n; ++i) k[i] = static_cast<int>(p.points[i].size());

  // Fold each edge's boundary rows/columns into unaries so the remaining
  // pairwise interaction is exactly the (nonnegative) cut term.
  std::vector<std::vector<double>> unary = p.unary;
  for (size_t e = 0; e < p.edges.size(); ++e) {
    const int i = p.edges[e].i, j = p.edges[e].j;
    const Eigen::MatrixXd& t = p.pairwise[e];
    for (int a = 0; a < k[i]; ++a) unary[i][a] += t(a, k[j] - 1);
    for (int b = 0; b < k[j]; ++b) unary[j][b] += t(0, b);
  }
  for (int i = 0; i < n; ++i) {
    const double low = *std::min_element(unary[i].begin(), unary[i].end());
    for (double& u : unary[i]) u -= low;
  }

  // Node layout: source, sink, then per-variable chains of k[i]-1 nodes where
  // chain node a (1-based) means "label of i >= a".
  int total = 2;
  std::vector<int> base(n, -1);
  for (int i = 0; i < n; ++i)
    if (k[i] >= 2) {
      base[i] = total;
      total += k[i] - 1;
    }
  const int s = 0, t_node = 1;
  auto node = [&](int i, int a) { return base[i] + (a - 1); };

  Network net(total);
  double finite_cap_sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (double u : unary[i]) finite_cap_sum += u;
  for (size_t e = 0; e < p.edges.size(); ++e) {
    const Eigen::MatrixXd& t = p.pairwise[e];
    for (Eigen::Index a = 1; a < t.rows(); ++a)
      for (Eigen::Index b = 1; b < t.cols(); ++b)
        finite_cap_sum +=
            std::max(0.0, -(t(a, b) - t(a - 1, b) - t(a, b - 1) + t(a - 1, b - 1)));
  }
  const auto big = quantize(finite_cap_sum + 1.0);

  for (int i = 0; i < n; ++i) {
    if (k[i] < 2) continue;
    for (int a = 0; a < k[i]; ++a) {
      const int tail = a == 0 ? s : node(i, a);
      const int head = a == k[i] - 1 ? t_node : node(i, a + 1);
      net.add_arc(tail, head, quantize(unary[i][a]));
    }
    for (int a = 1; a + 1 <= k[i] - 1; ++a) net.add_arc(node(i, a + 1), node(i, a), big);
  }
  for (size_t e = 0; e < p.edges.size(); ++e) {
    const int i = p.edges[e].i, j = p.edges[e].j;
    const Eigen::MatrixXd& t = p.pairwise[e];
    for (int a = 1; a < k[i]; ++a)
      for (int b = 1; b < k[j]; ++b) {
        const double second_diff = t(a, b) - t(a - 1, b) - t(a, b - 1) + t(a - 1, b - 1);
        if (second_diff < -1e-15) {
          const auto cap = quantize(-second_diff);
          if (cap > decltype(cap)(0)) net.add_arc(node(i, a), node(j, b), cap);
        }
      }
  }

  net.max_flow(s, t_node);
  const std::vector<char> on_source_side = net.source_side(s);
  Labeling out;
  out.label.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    if (k[i] < 2) continue;
    int lab = 0;
    for (int a = 1; a <= k[i] - 1; ++a)
      if (on_source_side[node(i, a)]) lab = a;
    out.label[i] = lab;
  }
  out.cost = labeling_cost(p, out.label);
  out.certified_optimal = true;
  return out;
}

}  // namespace

Labeling solve_graphcut(const DiscreteProblem& p, bool fixed_point) {
  if (!all_submodular(p))
    throw NotSubmodularError("solve_graphcut: a pairwise table is not submodular");
  if (fixed_point) {
    constexpr double kScale = 1e12;
    return run_graphcut<FlowNetworkFixed>(
        p, [](double c) { return static_cast<int64_t>(std::llround(c * kScale)); });
  }
  return run_graphcut<FlowNetwork>(p, [](double c) { return c; });
}

namespace {

void bruteforce_rec(const DiscreteProblem& p, int depth, std::vector<int>& label, double partial,
                    const std::vector<std::vector<size_t>>& edges_into, Labeling& best) {
  if (depth == p.n) {
    if (partial < best.cost) {
      best.cost = partial;
      best.label = label;
    }
    return;
  }
  const int num_labels = static_cast<int>(p.points[depth].size());
  for (int a = 0; a < num_labels; ++a) {
    label[depth] = a;
    double cost = partial + p.unary[depth][a];
    for (size_t e : edges_into[depth]) {
      const Edge& ed = p.edges[e];
      const int other = ed.i == depth ? ed.j : ed.i;
      cost += ed.i == depth ? p.pairwise[e](a, label[other]) : p.pairwise[e](label[other], a);
    }
    bruteforce_rec(p, depth + 1, label, cost, edges_into, best);
  }
}

}  // namespace

Labeling solve_bruteforce(const DiscreteProblem& p, long long cap) {
  if (!p.states_within(cap))
    throw std::length_error("solve_bruteforce: state space exceeds the cap");
  // edges_into[v]: edges whose other endpoint precedes v in the DFS order, so
  // each edge is charged exactly once, when its later endpoint is assigned.
  std::vector<std::vector<size_t>> edges_into(p.n);
  for (size_t e = 0; e < p.edges.size(); ++e)
    edges_into[std::max(p.edges[e].i, p.edges[e].j)].push_back(e);
  Labeling best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<int> label(p.n, 0);
  bruteforce_rec(p, 0, label, 0.0, edges_into, best);
  best.certified_optimal = true;
  return best;
}

Labeling solve_localsearch(const DiscreteProblem& p, int restarts, uint64_t seed) {
  if (restarts < 1) throw std::invalid_argument("solve_localsearch: need at least one restart");
  SplitMix64 rng(seed);

  std::vector<std::vector<std::pair<size_t, int>>> incident(p.n);  // (edge, side: 0=i,1=j)
  for (size_t e = 0; e < p.edges.size(); ++e) {
    incident[p.edges[e].i].emplace_back(e, 0);
    incident[p.edges[e].j].emplace_back(e, 1);
  }

  auto icm = [&](std::vector<int> label) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < p.n; ++i) {
        const int num_labels = static_cast<int>(p.points[i].size());
        int best_a = label[i];
        double best_cost = std::numeric_limits<double>::infinity();
        for (int a = 0; a < num_labels; ++a) {
          double c = p.unary[i][a];
          for (const auto& [e, side] : incident[i]) {
            const Edge& ed = p.edges[e];
            c += side == 0 ? p.pairwise[e](a, label[ed.j]) : p.pairwise[e](label[ed.i], a);
          }
          if (c < best_cost - 1e-15) {
            best_cost = c;
            best_a = a;
          }
        }
        if (best_a != label[i]) {
          label[i] = best_a;
          changed = true;
        }
      }
    }
    return label;
  };

  Labeling best;
  best.cost = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::vector<int> start(p.n, 0);
    if (r == 0) {
      for (int i = 0; i < p.n; ++i) {
        const double target = stable_sigmoid(p.theta[i]);
        int nearest = 0;
        for (size_t a = 1; a < p.points[i].size(); ++a)
          if (std::abs(p.points[i][a] - target) < std::abs(p.points[i][nearest] - target))
            nearest = static_cast<int>(a);
        start[i] = nearest;
      }
    } else {
      for (int i = 0; i < p.n; ++i)
        start[i] = static_cast<int>(rng.below(p.points[i].size()));
    }
    const std::vector<int> settled = icm(std::move(start));
    const double cost = labeling_cost(p, settled);
    if (cost < best.cost) {
      best.cost = cost;
      best.label = settled;
    }
  }
  best.certified_optimal = false;
  return best;
}

std::string problem_dump(const DiscreteProblem& p) {
  std::ostringstream out;
  out.precision(17);
  out << "unary " << p.n << '\n';
  for (int i = 0; i < p.n; ++i) {
    out << i << ' ' << p.unary[i].size();
    for (double u : p.unary[i]) out << ' ' << u;
    out << '\n';
  }
  out << "pairwise " << p.edges.size() << '\n';
  for (size_t e = 0; e < p.edges.size(); ++e) {
    const Eigen::MatrixXd& t = p.pairwise[e];
    out << p.edges[e].i << ' ' << p.edges[e].j << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (Eigen::Index a = 0; a < t.rows(); ++a) {
      for (Eigen::Index b = 0; b < t.cols(); ++b) out << (b ? " " : "") << t(a, b);
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace bethe
