#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "bethe/pipeline.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

std::pair<double, double> parse_range(const std::string& text, const char* what) {
  const auto colon = text.find(':', 1);  // skip a leading '-'
  try {
    if (colon == std::string::npos) {
      const double v = std::stod(text);
      return {v, v};
    }
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw std::runtime_error(std::string(what) +
                             ": expected a number or lo:hi range, got '" + text + "'");
  }
}

bethe::BoundsMethod to_bounds_method(const std::string& s) {
  if (s == "sigmoid") return bethe::BoundsMethod::Sigmoid;
  if (s == "bbp") return bethe::BoundsMethod::Bbp;
  return bethe::BoundsMethod::File;
}

bethe::MeshChoice to_mesh_choice(const std::string& s) {
  if (s == "simple") return bethe::MeshChoice::Simple;
  if (s == "minsum") return bethe::MeshChoice::MinSum;
  if (s == "adaptive-simple") return bethe::MeshChoice::AdaptiveSimple;
  if (s == "adaptive-minsum") return bethe::MeshChoice::AdaptiveMinSum;
  if (s == "second-derivative") return bethe::MeshChoice::SecondDerivative;
  return bethe::MeshChoice::Auto;
}

bethe::SolverChoice to_solver_choice(const std::string& s) {
  if (s == "graphcut") return bethe::SolverChoice::GraphCut;
  if (s == "bruteforce") return bethe::SolverChoice::BruteForce;
  if (s == "localsearch") return bethe::SolverChoice::LocalSearch;
  return bethe::SolverChoice::Auto;
}

struct SharedOpts {
  std::string model_path;
  double epsilon = 0.1;
  std::string bounds = "bbp";
  std::string bounds_file;
  bool worst_case_range = false;
};

void add_shared(CLI::App* cmd, SharedOpts& o) {
  cmd->add_option("--model", o.model_path, "Model file")->required();
  cmd->add_option("--epsilon", o.epsilon, "Additive accuracy target (> 0)");
  cmd->add_option("--bounds", o.bounds, "Box-bounding method")
      ->check(CLI::IsMember({"sigmoid", "bbp", "file"}));
  cmd->add_option("--bounds-file", o.bounds_file, "Per-variable box file for --bounds file");
  cmd->add_flag("--worst-case-range", o.worst_case_range,
                "Size meshes with the worst-case derivative range instead of the refined one");
}

void fill_shared(const SharedOpts& o, bethe::PipelineConfig& cfg) {
  cfg.epsilon = o.epsilon;
  cfg.bounds = to_bounds_method(o.bounds);
  cfg.range_mode = o.worst_case_range ? bethe::RangeMode::Simple : bethe::RangeMode::Refined;
  if (cfg.bounds == bethe::BoundsMethod::File) {
    if (o.bounds_file.empty())
      throw std::runtime_error("--bounds file requires --bounds-file <path>");
    cfg.bounds_file_text = read_file(o.bounds_file);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Certified additive-epsilon estimation of the Bethe log partition function "
      "of binary pairwise models via discretized free-energy minimization"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "Run the full estimation pipeline on a model file");
  SharedOpts so;
  add_shared(solve, so);
  std::string mesh = "auto", solver = "auto", csv_path, mesh_dump_path, problem_dump_path;
  uint64_t seed = 0;
  bool exact_compare = false, no_timing = false;
  int restarts = 8, width_cap = 20;
  long long brute_cap = 1'000'000;
  solve->add_option("--mesh", mesh, "Mesh construction method")
      ->check(CLI::IsMember({"simple", "minsum", "adaptive-simple", "adaptive-minsum",
                             "second-derivative", "auto"}));
  solve->add_option("--solver", solver, "Discrete minimizer")
      ->check(CLI::IsMember({"graphcut", "bruteforce", "localsearch", "auto"}));
  solve->add_option("--seed", seed, "Seed for randomized local-search restarts");
  solve->add_flag("--exact-compare", exact_compare,
                  "Also run an exact oracle (elimination or enumeration) when feasible");
  solve->add_option("--csv", csv_path, "Write the per-variable CSV report to this path");
  solve->add_flag("--no-timing", no_timing, "Omit timing so output is byte-stable");
  solve->add_option("--mesh-dump", mesh_dump_path, "Write the materialized mesh to this path");
  solve->add_option("--problem-dump", problem_dump_path,
                    "Write the discrete cost tables to this path");
  solve->add_option("--restarts", restarts, "Local-search restarts");
  solve->add_option("--brute-cap", brute_cap, "Brute-force label-space cap");
  solve->add_option("--width-cap", width_cap, "Variable-elimination width cap");

  auto* stats = app.add_subcommand("mesh-stats", "Size every mesh method without solving");
  SharedOpts mo;
  add_shared(stats, mo);

  auto* gen = app.add_subcommand("generate", "Emit a synthetic model file");
  bethe::GenerateParams gp;
  std::string theta = "0", w = "1", signs = "attractive", out_path;
  gen->add_option("--kind", gp.kind, "Graph family")
      ->required()
      ->check(CLI::IsMember({"pref-attach", "tree", "grid", "random"}));
  gen->add_option("--n", gp.n, "Number of variables")->required();
  gen->add_option("--theta", theta, "Field: constant or lo:hi uniform range");
  gen->add_option("--w", w, "Coupling magnitude: constant or lo:hi uniform range");
  gen->add_option("--signs", signs, "Coupling signs")
      ->check(CLI::IsMember({"attractive", "mixed"}));
  gen->add_option("--mean-degree", gp.mean_degree, "Target mean degree (random kind)");
  gen->add_option("--seed", gp.seed, "Generator seed");
  gen->add_option("--out", out_path, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      std::tie(gp.theta_lo, gp.theta_hi) = parse_range(theta, "--theta");
      std::tie(gp.w_lo, gp.w_hi) = parse_range(w, "--w");
      gp.mixed_signs = signs == "mixed";
      const std::string text = bethe::generate_model(gp);
      if (out_path.empty())
        std::cout << text;
      else
        write_file(out_path, text);
      return 0;
    }

    if (stats->parsed()) {
      bethe::PipelineConfig cfg;
      fill_shared(mo, cfg);
      const auto table = bethe::mesh_statistics(cfg, read_file(mo.model_path));
      std::cout << "method N log-label-space\n";
      for (const auto& s : table) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.12g", s.sum_log);
        std::cout << s.method << ' ' << s.total << ' ' << buf << '\n';
      }
      return 0;
    }

    bethe::PipelineConfig cfg;
    fill_shared(so, cfg);
    cfg.mesh = to_mesh_choice(mesh);
    cfg.solver = to_solver_choice(solver);
    cfg.seed = seed;
    cfg.exact_compare = exact_compare;
    cfg.collect_timing = !no_timing;
    cfg.restarts = restarts;
    cfg.brute_cap = brute_cap;
    cfg.width_cap = width_cap;
    cfg.mesh_dump_path = mesh_dump_path;
    cfg.problem_dump_path = problem_dump_path;
    const bethe::Report report = bethe::run_pipeline(cfg, read_file(so.model_path));
    std::cout << bethe::report_text(report);
    if (!csv_path.empty()) write_file(csv_path, bethe::report_csv(report));
    return report.certified ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
