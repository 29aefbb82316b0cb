#pragma once
#include <cstdint>
#include <tuple>
#include <vector>

namespace bethe {

// Highest-label push-relabel max-flow with the gap heuristic, templated on the
// capacity type: double for the default real-valued solve (saturation below a
// small epsilon scaled to the largest capacity), int64 for the optional
// fixed-point mode (exact arithmetic).
template <typename Cap>
class FlowNetworkT {
 public:
  explicit FlowNetworkT(int nodes) : adj_(nodes) {}

  int add_node() {
    adj_.emplace_back();
    return static_cast<int>(adj_.size()) - 1;
  }
  int num_nodes() const { return static_cast<int>(adj_.size()); }

  void add_arc(int u, int v, Cap cap) {
    adj_[u].push_back({v, cap, static_cast<int>(adj_[v].size())});
    adj_[v].push_back({u, Cap(0), static_cast<int>(adj_[u].size()) - 1});
    if (cap > max_cap_) max_cap_ = cap;
  }

  Cap max_flow(int s, int t);

  // Nodes reachable from s through residual capacity (call after max_flow).
  std::vector<char> source_side(int s) const {
    std::vector<char> seen(num_nodes(), 0);
    std::vector<int> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (const Arc& a : adj_[u])
        if (!seen[a.to] && a.cap > eps_) {
          seen[a.to] = 1;
          stack.push_back(a.to);
        }
    }
    return seen;
  }

 private:
  struct Arc {
    int to;
    Cap cap;  // residual capacity
    int rev;
  };
  std::vector<std::vector<Arc>> adj_;
  Cap max_cap_ = Cap(0);
  Cap eps_ = Cap(0);
};

using FlowNetwork = FlowNetworkT<double>;
using FlowNetworkFixed = FlowNetworkT<int64_t>;

// Independent BFS augmenting-path (Edmonds-Karp) implementation, kept solely
// as a cross-checking oracle for the push-relabel solver.
double reference_max_flow(int nodes, const std::vector<std::tuple<int, int, double>>& arcs,
                          int s, int t);

}  // namespace bethe
