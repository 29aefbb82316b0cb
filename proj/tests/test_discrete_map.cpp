#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "bethe/bethe_core.hpp"
#include "bethe/bounds.hpp"
#include "bethe/discrete_map.hpp"
#include "bethe/maxflow.hpp"
#include "bethe/mesh.hpp"
#include "bethe/rng.hpp"
#include "test_support.hpp"

using namespace bethe;

namespace {

DiscreteProblem problem_for(const Model& m, double eps) {
  const Bounds b = bbp_refine(m, sigmoid_bounds(m));
  return build_cost_tables(m, build_minsum(m, b, eps));
}

std::vector<int> random_labeling(SplitMix64& rng, const DiscreteProblem& p) {
  std::vector<int> label(p.n);
  for (int i = 0; i < p.n; ++i)
    label[i] = static_cast<int>(rng.below(p.points[i].size()));
  return label;
}

}  // namespace

TEST_CASE("labeling cost equals the continuous objective at the mesh point") {
  SplitMix64 rng(81);
  for (int t = 0; t < 20; ++t) {
    const Model m = test::random_model(rng, {});
    const DiscreteProblem p = problem_for(m, 0.3);
    REQUIRE(p.n == m.n);
    REQUIRE(p.edges.size() == m.edges.size());
    for (int rep = 0; rep < 10; ++rep) {
      const auto label = random_labeling(rng, p);
      const Eigen::VectorXd q = labeling_to_beliefs(p, label);
      for (int i = 0; i < m.n; ++i) CHECK(q[i] == p.points[i][label[i]]);
      CHECK(labeling_cost(p, label) == doctest::Approx(free_energy(m, q)).epsilon(1e-12));
    }
  }
}

TEST_CASE("submodularity follows the coupling sign") {
  SplitMix64 rng(82);
  test::ModelSpec attractive;
  attractive.attractive = true;
  for (int t = 0; t < 15; ++t) {
    const Model m = test::random_model(rng, attractive);
    if (m.edges.empty()) continue;
    const DiscreteProblem p = problem_for(m, 0.3);
    const auto sub = is_submodular(p);
    REQUIRE(sub.size() == p.edges.size());
    for (char s : sub) CHECK(static_cast<bool>(s));
    CHECK(all_submodular(p));
  }
  // A repulsive edge with at least two labels per end is never submodular.
  const Model rep = test::make_model(2, {0.4, -0.2}, {{0, 1, -1.5}});
  Bounds b;
  b.A = Eigen::VectorXd::Constant(2, 0.2);
  b.B = Eigen::VectorXd::Constant(2, 0.2);
  b.logL = Eigen::VectorXd::Zero(2);
  b.logU = Eigen::VectorXd::Zero(2);
  const DiscreteProblem p = build_cost_tables(rep, build_simple(rep, b, 0.2));
  REQUIRE(p.points[0].size() >= 2);
  REQUIRE(p.points[1].size() >= 2);
  CHECK_FALSE(all_submodular(p));
  CHECK_THROWS_AS(solve_graphcut(p), NotSubmodularError);
}

TEST_CASE("push-relabel max flow on the hand-checked diamond") {
  FlowNetwork net(4);
  net.add_arc(0, 1, 3.0);
  net.add_arc(0, 2, 2.0);
  net.add_arc(1, 2, 1.0);
  net.add_arc(1, 3, 2.0);
  net.add_arc(2, 3, 3.0);
  CHECK(net.max_flow(0, 3) == doctest::Approx(5.0).epsilon(1e-12));
  const auto side = net.source_side(0);
  CHECK(side[0]);
  CHECK_FALSE(side[3]);
}

TEST_CASE("push-relabel agrees with the augmenting-path oracle and min cut") {
  SplitMix64 rng(83);
  for (int t = 0; t < 60; ++t) {
    const int nodes = 2 + static_cast<int>(rng.below(8));
    const int s = 0, snk = nodes - 1;
    std::vector<std::tuple<int, int, double>> arcs;
    const int m = 1 + static_cast<int>(rng.below(3 * nodes));
    for (int e = 0; e < m; ++e) {
      int u = static_cast<int>(rng.below(nodes));
      int v = static_cast<int>(rng.below(nodes));
      if (u == v) continue;
      arcs.emplace_back(u, v, rng.uniform(0.0, 10.0));
    }
    FlowNetwork net(nodes);
    for (const auto& [u, v, c] : arcs) net.add_arc(u, v, c);
    const double flow = net.max_flow(s, snk);
    const double expect = reference_max_flow(nodes, arcs, s, snk);
    CHECK(flow == doctest::Approx(expect).epsilon(1e-9));

    // Max-flow/min-cut: the capacity crossing the residual source side equals
    // the flow value.
    const auto side = net.source_side(s);
    CHECK(side[s]);
    CHECK_FALSE(side[snk]);
    double cut = 0.0;
    for (const auto& [u, v, c] : arcs)
      if (side[u] && !side[v]) cut += c;
    CHECK(cut == doctest::Approx(flow).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("integer-capacity flow network is exact") {
  SplitMix64 rng(84);
  for (int t = 0; t < 40; ++t) {
    const int nodes = 2 + static_cast<int>(rng.below(7));
    const int s = 0, snk = nodes - 1;
    std::vector<std::tuple<int, int, double>> arcs;
    FlowNetworkFixed net(nodes);
    const int m = 1 + static_cast<int>(rng.below(3 * nodes));
    for (int e = 0; e < m; ++e) {
      int u = static_cast<int>(rng.below(nodes));
      int v = static_cast<int>(rng.below(nodes));
      if (u == v) continue;
      const int64_t c = static_cast<int64_t>(rng.below(30));
      arcs.emplace_back(u, v, static_cast<double>(c));
      net.add_arc(u, v, c);
    }
    const int64_t flow = net.max_flow(s, snk);
    const double expect = reference_max_flow(nodes, arcs, s, snk);
    CHECK(static_cast<double>(flow) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("graph cut equals brute force on a hand-checked two-variable table") {
  DiscreteProblem p;
  p.n = 2;
  p.edges = {{0, 1, 1.0}};
  p.unary = {{0.0, 5.0}, {0.0, 5.0}};
  p.pairwise.emplace_back(2, 2);
  p.pairwise[0] << 0.0, 3.0, 1.0, 0.0;  // submodular: 0 + 0 <= 3 + 1
  p.points = {{0.3, 0.7}, {0.4, 0.6}};
  p.theta = Eigen::VectorXd::Zero(2);
  REQUIRE(all_submodular(p));
  const Labeling cut = solve_graphcut(p);
  CHECK(cut.cost == doctest::Approx(0.0));
  CHECK(cut.label == std::vector<int>{0, 0});
  CHECK(cut.certified_optimal);
  const Labeling brute = solve_bruteforce(p);
  CHECK(brute.cost == doctest::Approx(cut.cost));
}

TEST_CASE("graph cut matches brute force on attractive models") {
  SplitMix64 rng(85);
  test::ModelSpec spec;
  spec.attractive = true;
  spec.n_max = 6;
  int nontrivial = 0;
  for (int t = 0; t < 25; ++t) {
    const Model m = test::random_model(rng, spec);
    const DiscreteProblem p = problem_for(m, rng.uniform(0.02, 0.15));
    if (!p.states_within(200000)) continue;
    REQUIRE(all_submodular(p));
    const Labeling cut = solve_graphcut(p);
    const Labeling fixed = solve_graphcut(p, /*fixed_point=*/true);
    const Labeling brute = solve_bruteforce(p);
    CHECK(cut.cost == doctest::Approx(brute.cost).epsilon(1e-9));
    CHECK(fixed.cost == doctest::Approx(brute.cost).epsilon(1e-9));
    CHECK(cut.certified_optimal);
    // The reported cost must be the cost of the reported labels.
    CHECK(cut.cost == doctest::Approx(labeling_cost(p, cut.label)).epsilon(1e-12));
    if (p.sum_log_states() > std::log(4.0)) ++nontrivial;
  }
  CHECK(nontrivial > 5);  // the loop exercised real label spaces
}

TEST_CASE("brute force breaks cost ties toward the lexicographically smallest labeling") {
  DiscreteProblem p;
  p.n = 2;
  p.edges = {{0, 1, 1.0}};
  p.unary = {{0.0, 0.0}, {0.0, 0.0}};
  p.pairwise.emplace_back(2, 2);
  p.pairwise[0] << 0.0, 1.0, 1.0, 0.0;  // minima at (0,0) and (1,1)
  p.points = {{0.3, 0.7}, {0.3, 0.7}};
  p.theta = Eigen::VectorXd::Zero(2);
  const Labeling best = solve_bruteforce(p);
  CHECK(best.cost == doctest::Approx(0.0));
  CHECK(best.label == std::vector<int>{0, 0});
  CHECK(best.certified_optimal);
}

TEST_CASE("brute force refuses oversized label spaces") {
  DiscreteProblem p;
  p.n = 8;
  p.theta = Eigen::VectorXd::Zero(8);
  p.unary.assign(8, std::vector<double>(100, 0.0));
  p.points.assign(8, std::vector<double>(100, 0.5));
  CHECK_FALSE(p.states_within(1'000'000));
  CHECK(p.sum_log_states() == doctest::Approx(8.0 * std::log(100.0)));
  CHECK_THROWS_AS(solve_bruteforce(p, 1'000'000), std::length_error);
}

TEST_CASE("states_within is overflow-safe for astronomically large spaces") {
  DiscreteProblem p;
  p.n = 40;
  p.theta = Eigen::VectorXd::Zero(40);
  p.unary.assign(40, std::vector<double>(1000, 0.0));
  p.points.assign(40, std::vector<double>(1000, 0.5));
  CHECK_FALSE(p.states_within(1'000'000'000));  // 1000^40 without overflowing
  DiscreteProblem small;
  small.n = 3;
  small.theta = Eigen::VectorXd::Zero(3);
  small.unary = {{0, 0}, {0, 0, 0}, {0, 0, 0, 0}};
  small.points = {{.1, .2}, {.1, .2, .3}, {.1, .2, .3, .4}};
  CHECK(small.states_within(24));
  CHECK_FALSE(small.states_within(23));
}

TEST_CASE("local search never beats the exact minimum and is deterministic") {
  SplitMix64 rng(86);
  for (int t = 0; t < 15; ++t) {
    const Model m = test::random_model(rng, {});
    const DiscreteProblem p = problem_for(m, 0.4);
    if (!p.states_within(100000)) continue;
    const Labeling brute = solve_bruteforce(p);
    const Labeling ls = solve_localsearch(p, 6, 1234);
    CHECK(ls.cost >= brute.cost - 1e-12);
    CHECK_FALSE(ls.certified_optimal);
    CHECK(ls.cost == doctest::Approx(labeling_cost(p, ls.label)).epsilon(1e-12));
    const Labeling again = solve_localsearch(p, 6, 1234);
    CHECK(again.label == ls.label);
    CHECK(again.cost == ls.cost);
  }
}

TEST_CASE("problem dump lists the unary table rows and pairwise matrices") {
  const Model m = test::make_model(2, {0.5, -0.5}, {{0, 1, 1.0}});
  const DiscreteProblem p = problem_for(m, 0.5);
  std::istringstream in(problem_dump(p));
  std::string word;
  int n = 0;
  REQUIRE((in >> word >> n));
  CHECK(word == "unary");
  REQUIRE(n == 2);
  for (int i = 0; i < n; ++i) {
    int idx = -1;
    size_t count = 0;
    REQUIRE((in >> idx >> count));
    CHECK(idx == i);
    REQUIRE(count == p.unary[i].size());
    for (size_t a = 0; a < count; ++a) {
      double u = 0.0;
      REQUIRE((in >> u));
      CHECK(u == doctest::Approx(p.unary[i][a]).epsilon(1e-15));
    }
  }
  int edges = 0;
  REQUIRE((in >> word >> edges));
  CHECK(word == "pairwise");
  REQUIRE(edges == 1);
  int ei = -1, ej = -1;
  Eigen::Index rows = 0, cols = 0;
  REQUIRE((in >> ei >> ej >> rows >> cols));
  CHECK(ei == 0);
  CHECK(ej == 1);
  CHECK(rows == static_cast<Eigen::Index>(p.points[0].size()));
  CHECK(cols == static_cast<Eigen::Index>(p.points[1].size()));
  double first = 0.0;
  REQUIRE((in >> first));
  CHECK(first == doctest::Approx(p.pairwise[0](0, 0)).epsilon(1e-15));
}
