#include "bethe/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bethe/bethe_core.hpp"
#include "bethe/discrete_map.hpp"
#include "bethe/exact_oracle.hpp"
#include "bethe/rng.hpp"

namespace bethe {

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Preference order: used for reporting and for auto-mode tie-breaking (the
// earlier method wins ties; a later one must be strictly smaller).
constexpr std::array<MeshMethod, 5> kMethodOrder = {
    MeshMethod::AdaptiveMinSum, MeshMethod::AdaptiveSimple, MeshMethod::MinSum,
    MeshMethod::Simple, MeshMethod::SecondDerivative};

int method_slot(MeshMethod m) {
  for (int k = 0; k < 5; ++k)
    if (kMethodOrder[k] == m) return k;
  throw std::logic_error("method_slot: unknown mesh method");
}

const char* bounds_method_name(BoundsMethod b) {
  switch (b) {
    case BoundsMethod::Sigmoid: return "sigmoid";
    case BoundsMethod::Bbp: return "bbp";
    case BoundsMethod::File: return "file";
  }
  return "?";
}

Bounds component_bounds(const PipelineConfig& cfg, const Component& comp,
                        const std::optional<Bounds>& file_bounds) {
  if (cfg.bounds == BoundsMethod::File) {
    const auto& full = *file_bounds;
    Bounds b;
    const int k = static_cast<int>(comp.vars.size());
    b.A.resize(k);
    b.B.resize(k);
    for (int v = 0; v < k; ++v) {
      b.A[v] = full.A[comp.vars[v]];
      b.B[v] = full.B[comp.vars[v]];
    }
    refresh_envelope_logs(comp.model, b);
    return b;
  }
  const Bounds sig = sigmoid_bounds(comp.model);
  if (cfg.bounds == BoundsMethod::Sigmoid) return sig;
  return bbp_refine(comp.model, sig);
}

// Mesh sizes per method for one component; first-derivative meshes are cheap
// enough to build outright, the curvature mesh is only counted.
struct CandidateMeshes {
  std::array<std::optional<Mesh>, 5> mesh;
  std::array<long long, 5> total{};
  std::array<double, 5> sum_log{};
};

CandidateMeshes component_candidates(const Model& m, const Bounds& b, double eps,
                                     RangeMode mode) {
  CandidateMeshes c;
  auto put = [&](Mesh&& mesh) {
    const int slot = method_slot(mesh.method);
    c.total[slot] = mesh.total_points();
    c.sum_log[slot] = mesh.sum_log_points();
    c.mesh[slot] = std::move(mesh);
  };
  put(build_simple(m, b, eps, mode));
  put(build_minsum(m, b, eps, mode));
  put(build_adaptive(m, b, eps, adaptive_weights(m, b, MeshMethod::AdaptiveSimple, mode),
                     MeshMethod::AdaptiveSimple));
  put(build_adaptive(m, b, eps, adaptive_weights(m, b, MeshMethod::AdaptiveMinSum, mode),
                     MeshMethod::AdaptiveMinSum));
  const int slot = method_slot(MeshMethod::SecondDerivative);
  for (long long n : second_derivative_dim_counts(m, b, eps)) {
    c.total[slot] += n;
    c.sum_log[slot] += std::log(static_cast<double>(n));
  }
  return c;
}

MeshMethod fixed_mesh_method(MeshChoice c) {
  switch (c) {
    case MeshChoice::Simple: return MeshMethod::Simple;
    case MeshChoice::MinSum: return MeshMethod::MinSum;
    case MeshChoice::AdaptiveSimple: return MeshMethod::AdaptiveSimple;
    case MeshChoice::AdaptiveMinSum: return MeshMethod::AdaptiveMinSum;
    case MeshChoice::SecondDerivative: return MeshMethod::SecondDerivative;
    case MeshChoice::Auto: break;
  }
  throw std::logic_error("fixed_mesh_method: auto has no fixed method");
}

Mesh materialize_method(const Model& m, const Bounds& b, double eps, RangeMode mode,
                        MeshMethod method, CandidateMeshes* cands) {
  if (cands && cands->mesh[method_slot(method)])
    return std::move(*cands->mesh[method_slot(method)]);
  switch (method) {
    case MeshMethod::Simple: return build_simple(m, b, eps, mode);
    case MeshMethod::MinSum: return build_minsum(m, b, eps, mode);
    case MeshMethod::AdaptiveSimple:
    case MeshMethod::AdaptiveMinSum:
      return build_adaptive(m, b, eps, adaptive_weights(m, b, method, mode), method);
    case MeshMethod::SecondDerivative: return build_second_derivative(m, b, eps);
  }
  throw std::logic_error("materialize_method: unknown method");
}

struct SolvedComponent {
  Labeling lab;
  std::string solver;
};

SolvedComponent solve_component(const DiscreteProblem& p, const PipelineConfig& cfg,
                                int comp_index, std::vector<std::string>& notes) {
  switch (cfg.solver) {
    case SolverChoice::GraphCut: return {solve_graphcut(p), "graphcut"};
    case SolverChoice::BruteForce: return {solve_bruteforce(p, cfg.brute_cap), "bruteforce"};
    case SolverChoice::LocalSearch: return {solve_localsearch(p, cfg.restarts, cfg.seed),
                                            "localsearch"};
    case SolverChoice::Auto: {
      if (all_submodular(p)) return {solve_graphcut(p), "graphcut"};
      if (p.states_within(cfg.brute_cap)) return {solve_bruteforce(p, cfg.brute_cap),
                                                  "bruteforce"};
      notes.push_back("component " + std::to_string(comp_index) +
                      ": local-search fallback (a cost table is not submodular and the label "
                      "space exceeds the brute-force cap); the estimate is a lower bound "
                      "without the epsilon guarantee");
      return {solve_localsearch(p, cfg.restarts, cfg.seed), "localsearch"};
    }
  }
  throw std::logic_error("solve_component: unknown solver choice");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string fmt17(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace

Report run_pipeline(const PipelineConfig& cfg, const std::string& model_text) {
  if (!(cfg.epsilon > 0.0))
    throw std::invalid_argument("run_pipeline: epsilon must be positive");
  using clock = std::chrono::steady_clock;
  std::vector<std::pair<std::string, double>> timings;
  auto mark = clock::now();
  auto lap = [&](const char* stage) {
    const auto now = clock::now();
    timings.emplace_back(stage, std::chrono::duration<double>(now - mark).count());
    mark = now;
  };
  const auto t_start = mark;

  Report r;
  r.epsilon = cfg.epsilon;
  r.seed = cfg.seed;
  r.bounds_method = bounds_method_name(cfg.bounds);

  const InputModel input = parse_model(model_text);
  const Model full = reparameterize(input);
  const std::vector<Component> comps = split_components(full);
  r.n = full.n;
  r.edge_count = static_cast<long long>(full.edges.size());
  r.components = static_cast<int>(comps.size());
  r.dropped_zero_edges = input.dropped_zero_edges;
  r.q_star.resize(full.n);
  r.box_lo.resize(full.n);
  r.box_hi.resize(full.n);
  r.mesh_points_by_var.resize(full.n);
  lap("parse");

  std::optional<Bounds> file_bounds;
  if (cfg.bounds == BoundsMethod::File)
    file_bounds = parse_bounds_file(cfg.bounds_file_text, full);
  std::vector<Bounds> comp_bounds(comps.size());
  for (size_t c = 0; c < comps.size(); ++c) {
    if (comps[c].isolated) continue;
    comp_bounds[c] = component_bounds(cfg, comps[c], file_bounds);
    for (size_t v = 0; v < comps[c].vars.size(); ++v) {
      r.box_lo[comps[c].vars[v]] = comp_bounds[c].A[v];
      r.box_hi[comps[c].vars[v]] = 1.0 - comp_bounds[c].B[v];
    }
  }
  lap("bounds");

  // Epsilon splits across components carrying edges, in proportion to their
  // total coupling mass; isolated variables are solved in closed form.
  double total_w = 0.0;
  int isolated_vars = 0;
  for (const Component& c : comps) {
    if (c.isolated)
      ++isolated_vars;
    else
      total_w += c.model.sum_abs_w();
  }
  std::vector<double> comp_eps(comps.size(), 0.0);
  for (size_t c = 0; c < comps.size(); ++c)
    if (!comps[c].isolated)
      comp_eps[c] = total_w > 0.0 ? cfg.epsilon * (comps[c].model.sum_abs_w() / total_w)
                                  : cfg.epsilon;

  // Mesh stage. Auto mode sizes every method first (cheap: only the
  // first-derivative meshes are built, the curvature mesh is counted) and
  // materializes the smallest; a fixed method is built directly.
  const bool auto_mesh = cfg.mesh == MeshChoice::Auto;
  std::vector<CandidateMeshes> cands(auto_mesh ? comps.size() : 0);
  MeshMethod chosen;
  if (auto_mesh) {
    std::array<long long, 5> agg_total{};
    std::array<double, 5> agg_sum_log{};
    for (size_t c = 0; c < comps.size(); ++c) {
      if (comps[c].isolated) continue;
      cands[c] = component_candidates(comps[c].model, comp_bounds[c], comp_eps[c],
                                      cfg.range_mode);
      for (int s = 0; s < 5; ++s) {
        agg_total[s] += cands[c].total[s];
        agg_sum_log[s] += cands[c].sum_log[s];
      }
    }
    // Every method meshes an isolated variable with the single point sigma(theta).
    for (int s = 0; s < 5; ++s) agg_total[s] += isolated_vars;
    int best = 0;
    for (int s = 1; s < 5; ++s)
      if (agg_total[s] < agg_total[best]) best = s;
    chosen = kMethodOrder[best];
    for (int s = 0; s < 5; ++s)
      r.mesh_stats.push_back({mesh_method_name(kMethodOrder[s]), agg_total[s], agg_sum_log[s],
                              s == best});
  } else {
    chosen = fixed_mesh_method(cfg.mesh);
  }
  r.mesh_method = mesh_method_name(chosen);

  std::vector<Mesh> comp_mesh(comps.size());
  long long chosen_total = isolated_vars;
  double chosen_sum_log = 0.0;
  for (size_t c = 0; c < comps.size(); ++c) {
    if (comps[c].isolated) continue;
    comp_mesh[c] = materialize_method(comps[c].model, comp_bounds[c], comp_eps[c],
                                      cfg.range_mode, chosen, auto_mesh ? &cands[c] : nullptr);
    chosen_total += comp_mesh[c].total_points();
    chosen_sum_log += comp_mesh[c].sum_log_points();
    for (size_t v = 0; v < comps[c].vars.size(); ++v)
      r.mesh_points_by_var[comps[c].vars[v]] = comp_mesh[c].points[v];
  }
  if (!auto_mesh)
    r.mesh_stats.push_back({mesh_method_name(chosen), chosen_total, chosen_sum_log, true});
  cands.clear();
  lap("mesh");

  // Solve each component and stitch the global minimizer back together.
  double total_f = 0.0;
  bool all_certified = true;
  std::vector<std::string> solvers_used;
  std::string problem_dump_text;
  for (size_t c = 0; c < comps.size(); ++c) {
    const Component& comp = comps[c];
    if (comp.isolated) {
      const double theta = comp.model.theta[0];
      const double q = stable_sigmoid(theta);
      const int g = comp.vars[0];
      total_f += -softplus(theta);
      r.q_star[g] = q;
      r.box_lo[g] = q;
      r.box_hi[g] = q;
      r.mesh_points_by_var[g] = {q};
      continue;
    }
    const DiscreteProblem prob = build_cost_tables(comp.model, comp_mesh[c]);
    if (!cfg.problem_dump_path.empty()) {
      std::ostringstream head;
      head << "component " << c << " vars";
      for (int v : comp.vars) head << ' ' << v;
      head << '\n';
      problem_dump_text += head.str() + problem_dump(prob);
    }
    const SolvedComponent solved = solve_component(prob, cfg, static_cast<int>(c), r.notes);
    if (std::find(solvers_used.begin(), solvers_used.end(), solved.solver) ==
        solvers_used.end())
      solvers_used.push_back(solved.solver);
    all_certified = all_certified && solved.lab.certified_optimal;
    total_f += solved.lab.cost;
    const Eigen::VectorXd q = labeling_to_beliefs(prob, solved.lab.label);
    for (size_t v = 0; v < comp.vars.size(); ++v) r.q_star[comp.vars[v]] = q[v];
  }
  r.solver_method = solvers_used.empty() ? "closed-form" : solvers_used[0];
  for (size_t s = 1; s < solvers_used.size(); ++s) r.solver_method += "+" + solvers_used[s];
  r.logZB_estimate = -total_f - full.energy_offset;
  r.certified = all_certified;
  r.guarantee = r.certified ? "within epsilon below log Z_B" : "lower bound only";
  lap("solve");

  if (cfg.exact_compare) {
    const int width = minfill_width(full);
    std::optional<ExactResult> exact;
    if (width <= cfg.width_cap) {
      exact = eliminate(full, cfg.width_cap);
      r.exact.method = "eliminate";
    } else if (full.n <= 25) {
      exact = enumerate_exact(full);
      r.exact.method = "enumerate";
    } else {
      r.notes.push_back("exact comparison skipped: elimination width " +
                        std::to_string(width) + " exceeds the cap and n=" +
                        std::to_string(full.n) + " is too large to enumerate");
    }
    if (exact) {
      r.exact.present = true;
      r.exact.logZ = exact->logZ;
      r.exact.gap = exact->logZ - r.logZB_estimate;
      r.exact.mean_l1 = (exact->marginals - r.q_star).cwiseAbs().mean();
    }
    lap("exact");
  }

  double width_min = std::numeric_limits<double>::infinity();
  double width_max = 0.0, width_sum = 0.0;
  for (int i = 0; i < full.n; ++i) {
    const double w = r.box_hi[i] - r.box_lo[i];
    width_min = std::min(width_min, w);
    width_max = std::max(width_max, w);
    width_sum += w;
  }
  r.box_width_min = full.n > 0 ? width_min : 0.0;
  r.box_width_mean = full.n > 0 ? width_sum / full.n : 0.0;
  r.box_width_max = width_max;

  if (!cfg.mesh_dump_path.empty()) {
    std::ostringstream dump;
    for (int i = 0; i < full.n; ++i) {
      dump << i << ' ' << r.mesh_points_by_var[i].size();
      for (double p : r.mesh_points_by_var[i]) dump << ' ' << fmt17(p);
      dump << '\n';
    }
    write_file(cfg.mesh_dump_path, dump.str());
  }
  if (!cfg.problem_dump_path.empty()) write_file(cfg.problem_dump_path, problem_dump_text);

  if (cfg.collect_timing) {
    r.has_timing = true;
    timings.emplace_back("total",
                         std::chrono::duration<double>(clock::now() - t_start).count());
    r.timings = std::move(timings);
  }
  return r;
}

std::vector<MeshStat> mesh_statistics(const PipelineConfig& cfg,
                                      const std::string& model_text) {
  if (!(cfg.epsilon > 0.0))
    throw std::invalid_argument("mesh_statistics: epsilon must be positive");
  const Model full = reparameterize(parse_model(model_text));
  const std::vector<Component> comps = split_components(full);

  std::optional<Bounds> file_bounds;
  if (cfg.bounds == BoundsMethod::File)
    file_bounds = parse_bounds_file(cfg.bounds_file_text, full);

  double total_w = 0.0;
  int isolated_vars = 0;
  for (const Component& c : comps) {
    if (c.isolated)
      ++isolated_vars;
    else
      total_w += c.model.sum_abs_w();
  }

  std::array<long long, 5> agg_total{};
  std::array<double, 5> agg_sum_log{};
  for (const Component& comp : comps) {
    if (comp.isolated) continue;
    const Bounds b = component_bounds(cfg, comp, file_bounds);
    const double eps =
        total_w > 0.0 ? cfg.epsilon * (comp.model.sum_abs_w() / total_w) : cfg.epsilon;
    const CandidateMeshes c = component_candidates(comp.model, b, eps, cfg.range_mode);
    for (int s = 0; s < 5; ++s) {
      agg_total[s] += c.total[s];
      agg_sum_log[s] += c.sum_log[s];
    }
  }
  for (int s = 0; s < 5; ++s) agg_total[s] += isolated_vars;

  std::vector<MeshStat> stats;
  for (int s = 0; s < 5; ++s)
    stats.push_back({mesh_method_name(kMethodOrder[s]), agg_total[s], agg_sum_log[s], false});
  return stats;
}

std::string report_text(const Report& r) {
  std::ostringstream out;
  out << "model: n=" << r.n << " edges=" << r.edge_count << " components=" << r.components
      << " dropped-zero-edges=" << r.dropped_zero_edges << '\n';
  out << "epsilon: " << fmt(r.epsilon) << '\n';
  out << "seed: " << r.seed << '\n';
  out << "bounds: " << r.bounds_method << " (box width min=" << fmt(r.box_width_min)
      << " mean=" << fmt(r.box_width_mean) << " max=" << fmt(r.box_width_max) << ")\n";
  out << "mesh: " << r.mesh_method << '\n';
  out << "mesh-sizes:\n";
  for (const MeshStat& s : r.mesh_stats)
    out << "  " << (s.materialized ? "* " : "  ") << s.method << " N=" << s.total
        << " log-label-space=" << fmt(s.sum_log) << '\n';
  out << "solver: " << r.solver_method << '\n';
  out << "logZB-estimate: " << fmt(r.logZB_estimate) << '\n';
  if (r.certified) out << "certified: yes\n";
  out << "guarantee: " << r.guarantee << '\n';
  out << "variables:\n";
  for (int i = 0; i < r.n; ++i)
    out << "  " << i << " q=" << fmt(r.q_star[i]) << " box=[" << fmt(r.box_lo[i]) << ","
        << fmt(r.box_hi[i]) << "] points=" << r.mesh_points_by_var[i].size() << '\n';
  if (r.exact.present)
    out << "exact: method=" << r.exact.method << " logZ=" << fmt(r.exact.logZ)
        << " gap=" << fmt(r.exact.gap) << " mean-l1=" << fmt(r.exact.mean_l1) << '\n';
  for (const std::string& note : r.notes) out << "note: " << note << '\n';
  if (r.has_timing) {
    out << "timing:";
    for (const auto& [stage, sec] : r.timings) out << ' ' << stage << '=' << fmt(sec) << 's';
    out << '\n';
  }
  return out.str();
}

std::string report_csv(const Report& r) {
  std::ostringstream out;
  out << "index,marginal,mesh_points,box_lo,box_hi,logZB_estimate,certified,epsilon,n,edges,"
         "components,bounds,mesh,solver,seed\n";
  for (int i = 0; i < r.n; ++i)
    out << i << ',' << fmt(r.q_star[i]) << ',' << r.mesh_points_by_var[i].size() << ','
        << fmt(r.box_lo[i]) << ',' << fmt(r.box_hi[i]) << ',' << fmt(r.logZB_estimate) << ','
        << (r.certified ? 1 : 0) << ',' << fmt(r.epsilon) << ',' << r.n << ',' << r.edge_count
        << ',' << r.components << ',' << r.bounds_method << ',' << r.mesh_method << ','
        << r.solver_method << ',' << r.seed << '\n';
  return out.str();
}

std::string generate_model(const GenerateParams& p) {
  if (p.n < 1) throw std::invalid_argument("generate_model: n must be at least 1");
  if (p.theta_lo > p.theta_hi || p.w_lo > p.w_hi)
    throw std::invalid_argument("generate_model: range lower end exceeds upper end");
  if (p.kind == "random" && p.mean_degree < 0.0)
    throw std::invalid_argument("generate_model: mean degree must be nonnegative");
  SplitMix64 rng(p.seed);

  std::vector<std::pair<int, int>> pairs;
  if (p.kind == "pref-attach") {
    // Each new node attaches to an endpoint drawn uniformly from the list of
    // all prior edge endpoints, i.e. proportionally to current degree.
    std::vector<int> endpoints = {0};
    for (int t = 1; t < p.n; ++t) {
      const int u = endpoints[rng.below(endpoints.size())];
      pairs.emplace_back(u, t);
      endpoints.push_back(u);
      endpoints.push_back(t);
    }
  } else if (p.kind == "tree") {
    for (int t = 1; t < p.n; ++t)
      pairs.emplace_back(static_cast<int>(rng.below(static_cast<uint64_t>(t))), t);
  } else if (p.kind == "grid") {
    const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(p.n))));
    const int cols = (p.n + rows - 1) / rows;
    for (int id = 0; id < p.n; ++id) {
      const int c = id % cols;
      if (c + 1 < cols && id + 1 < p.n) pairs.emplace_back(id, id + 1);
      if (id + cols < p.n) pairs.emplace_back(id, id + cols);
    }
  } else if (p.kind == "random") {
    long long target = std::llround(p.n * p.mean_degree / 2.0);
    const long long max_edges = static_cast<long long>(p.n) * (p.n - 1) / 2;
    target = std::min(target, max_edges);
    std::set<std::pair<int, int>> seen;
    long long attempts = 50 * target + 1000;
    while (static_cast<long long>(pairs.size()) < target && attempts-- > 0) {
      int i = static_cast<int>(rng.below(static_cast<uint64_t>(p.n)));
      int j = static_cast<int>(rng.below(static_cast<uint64_t>(p.n)));
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (!seen.insert({i, j}).second) continue;
      pairs.emplace_back(i, j);
    }
  } else {
    throw std::invalid_argument("generate_model: unknown kind '" + p.kind + "'");
  }

  InputModel m;
  m.n = p.n;
  m.theta.resize(p.n);
  for (int i = 0; i < p.n; ++i)
    m.theta[i] = p.theta_lo == p.theta_hi ? p.theta_lo : rng.uniform(p.theta_lo, p.theta_hi);
  m.edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    Edge e;
    e.i = i;
    e.j = j;
    e.w = p.w_lo == p.w_hi ? p.w_lo : rng.uniform(p.w_lo, p.w_hi);
    m.edges.push_back(e);
  }
  if (p.mixed_signs)
    for (Edge& e : m.edges)
      if (rng.coin()) e.w = -e.w;
  return to_model_text(m);
}

}  // namespace bethe
