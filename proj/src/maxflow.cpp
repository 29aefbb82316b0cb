#include "bethe/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <type_traits>

namespace bethe {

template <typename Cap>
Cap FlowNetworkT<Cap>::max_flow(int s, int t) {
  const int n = num_nodes();
  if (s == t) return Cap(0);
  if constexpr (std::is_floating_point_v<Cap>) {
    if (!std::isfinite(static_cast<double>(max_cap_)))
      throw std::runtime_error("max_flow: capacities must be finite");
    eps_ = max_cap_ * 1e-12;
  } else {
    eps_ = Cap(0);
  }

  std::vector<Cap> excess(n, Cap(0));
  std::vector<int> height(n, 0);
  std::vector<int> height_count(2 * n + 1, 0);
  std::vector<int> arc_iter(n, 0);
  // Active-node buckets by height, scanned from the highest.
  std::vector<std::vector<int>> bucket(2 * n + 1);
  std::vector<char> in_bucket(n, 0);
  int highest = 0;

  auto activate = [&](int u) {
    if (u != s && u != t && !in_bucket[u] && excess[u] > eps_) {
      in_bucket[u] = 1;
      bucket[height[u]].push_back(u);
      highest = std::max(highest, height[u]);
    }
  };

  height[s] = n;
  height_count[0] = n - 1;
  height_count[n] = 1;
  for (Arc& a : adj_[s]) {
    const Cap amount = a.cap;
    if (amount > eps_) {
      a.cap -= amount;
      adj_[a.to][a.rev].cap += amount;
      excess[a.to] += amount;
      excess[s] -= amount;
      activate(a.to);
    }
  }

  auto push = [&](int u, Arc& a) {
    const Cap amount = std::min(excess[u], a.cap);
    a.cap -= amount;
    adj_[a.to][a.rev].cap += amount;
    excess[u] -= amount;
    excess[a.to] += amount;
    activate(a.to);
  };

  auto relabel = [&](int u) {
    const int old = height[u];
    int best = 2 * n;
    for (const Arc& a : adj_[u])
      if (a.cap > eps_) best = std::min(best, height[a.to] + 1);
    height[u] = best;
    arc_iter[u] = 0;
    --height_count[old];
    ++height_count[height[u]];
    // Gap heuristic: an empty level below n disconnects everything above it
    // from the sink; lift those nodes past n so they drain back to the source.
    if (old < n && height_count[old] == 0) {
      for (int v = 0; v < n; ++v)
        if (v != s && height[v] > old && height[v] < n) {
          --height_count[height[v]];
          height[v] = n + 1;
          ++height_count[height[v]];
        }
    }
  };

  while (highest >= 0) {
    if (bucket[highest].empty()) {
      --highest;
      continue;
    }
    const int u = bucket[highest].back();
    bucket[highest].pop_back();
    in_bucket[u] = 0;
    if (excess[u] <= eps_) continue;
    if (height[u] != highest) {  // lifted while queued: requeue at its new level
      if (height[u] < 2 * n) {
        in_bucket[u] = 1;
        bucket[height[u]].push_back(u);
        highest = std::max(highest, height[u]);
      }
      continue;
    }

    while (excess[u] > eps_) {
      if (arc_iter[u] == static_cast<int>(adj_[u].size())) {
        relabel(u);
        if (height[u] >= 2 * n) break;
        continue;
      }
      Arc& a = adj_[u][arc_iter[u]];
      if (a.cap > eps_ && height[u] == height[a.to] + 1)
        push(u, a);
      else
        ++arc_iter[u];
    }
    if (excess[u] > eps_ && height[u] < 2 * n) {
      in_bucket[u] = 1;
      bucket[height[u]].push_back(u);
      highest = std::max(highest, height[u]);
    }
  }
  return excess[t];
}

template class FlowNetworkT<double>;
template class FlowNetworkT<int64_t>;

double reference_max_flow(int nodes, const std::vector<std::tuple<int, int, double>>& arcs,
                          int s, int t) {
  struct Arc {
    int to;
    double cap;
    int rev;
  };
  std::vector<std::vector<Arc>> adj(nodes);
  double max_cap = 0.0;
  for (const auto& [u, v, c] : arcs) {
    adj[u].push_back({v, c, static_cast<int>(adj[v].size())});
    adj[v].push_back({u, 0.0, static_cast<int>(adj[u].size()) - 1});
    max_cap = std::max(max_cap, c);
  }
  const double eps = max_cap * 1e-12;
  double flow = 0.0;
  while (true) {
    std::vector<int> prev_node(nodes, -1), prev_arc(nodes, -1);
    std::queue<int> q;
    q.push(s);
    prev_node[s] = s;
    while (!q.empty() && prev_node[t] == -1) {
      const int u = q.front();
      q.pop();
      for (int k = 0; k < static_cast<int>(adj[u].size()); ++k) {
        const Arc& a = adj[u][k];
        if (a.cap > eps && prev_node[a.to] == -1) {
          prev_node[a.to] = u;
          prev_arc[a.to] = k;
          q.push(a.to);
        }
      }
    }
    if (prev_node[t] == -1) break;
    double bottleneck = std::numeric_limits<double>::infinity();
    for (int v = t; v != s; v = prev_node[v])
      bottleneck = std::min(bottleneck, adj[prev_node[v]][prev_arc[v]].cap);
    for (int v = t; v != s; v = prev_node[v]) {
      Arc& a = adj[prev_node[v]][prev_arc[v]];
      a.cap -= bottleneck;
      adj[a.to][a.rev].cap += bottleneck;
    }
    flow += bottleneck;
  }
  return flow;
}

}  // namespace bethe
