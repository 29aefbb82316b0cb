#include "bethe/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace bethe {

void Model::finalize() {
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  adj.assign(n, {});
  deg = Eigen::VectorXi::Zero(n);
  w_pos = Eigen::VectorXd::Zero(n);
  v_neg = Eigen::VectorXd::Zero(n);
  max_abs_w = 0.0;
  for (const Edge& e : edges) {
    adj[e.i].emplace_back(e.j, e.w);
    adj[e.j].emplace_back(e.i, e.w);
    deg[e.i]++;
    deg[e.j]++;
    if (e.w > 0) {
      w_pos[e.i] += e.w;
      w_pos[e.j] += e.w;
    } else {
      v_neg[e.i] -= e.w;
      v_neg[e.j] -= e.w;
    }
    max_abs_w = std::max(max_abs_w, std::abs(e.w));
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
}

double Model::sum_abs_w() const {
  double s = 0.0;
  for (const Edge& e : edges) s += std::abs(e.w);
  return s;
}

namespace {

bool is_blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// Reads exactly the fields the extractor list demands and rejects trailing junk.
template <typename... Ts>
void parse_fields(const std::string& line, int line_no, Ts&... fields) {
  std::istringstream ss(line);
  ((ss >> fields) , ...);
  if (ss.fail()) throw ParseError(line_no, "malformed line: '" + line + "'");
  std::string rest;
  if (ss >> rest) throw ParseError(line_no, "trailing content: '" + rest + "'");
}

}  // namespace

InputModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!is_blank_or_comment(line)) return;
    }
    throw ParseError(line_no, std::string("unexpected end of input, expected ") + what);
  };

  InputModel m;
  next_line("header 'n m'");
  int n = -1, num_edges = -1;
  parse_fields(line, line_no, n, num_edges);
  if (n <= 0) throw ParseError(line_no, "variable count must be positive");
  if (num_edges < 0) throw ParseError(line_no, "edge count must be nonnegative");
  m.n = n;
  m.theta = Eigen::VectorXd::Zero(n);

  std::vector<bool> seen_theta(n, false);
  for (int k = 0; k < n; ++k) {
    next_line("a 'i theta_i' line");
    int i = -1;
    double t = 0.0;
    parse_fields(line, line_no, i, t);
    if (i < 0 || i >= n) throw ParseError(line_no, "variable index out of range");
    if (seen_theta[i]) throw ParseError(line_no, "duplicate theta for variable " + std::to_string(i));
    if (!std::isfinite(t)) throw ParseError(line_no, "non-finite theta");
    seen_theta[i] = true;
    m.theta[i] = t;
  }

  std::set<std::pair<int, int>> seen_edges;
  for (int k = 0; k < num_edges; ++k) {
    next_line("an 'i j w_ij' line");
    int i = -1, j = -1;
    double w = 0.0;
    parse_fields(line, line_no, i, j, w);
    if (i < 0 || i >= n || j < 0 || j >= n) throw ParseError(line_no, "edge endpoint out of range");
    if (i == j) throw ParseError(line_no, "self-loop on variable " + std::to_string(i));
    if (!std::isfinite(w)) throw ParseError(line_no, "non-finite coupling");
    std::pair<int, int> key{std::min(i, j), std::max(i, j)};
    if (!seen_edges.insert(key).second)
      throw ParseError(line_no, "duplicate edge (" + std::to_string(key.first) + "," +
                                    std::to_string(key.second) + ")");
    if (w == 0.0) {
      ++m.dropped_zero_edges;  // zero couplings carry no interaction
      continue;
    }
    m.edges.push_back({key.first, key.second, w});
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (!is_blank_or_comment(line)) throw ParseError(line_no, "content after declared edges");
  }
  return m;
}

std::string to_model_text(const InputModel& m) {
  std::ostringstream out;
  out.precision(17);
  out << m.n << ' ' << m.edges.size() << '\n';
  for (int i = 0; i < m.n; ++i) out << i << ' ' << m.theta[i] << '\n';
  for (const Edge& e : m.edges) out << e.i << ' ' << e.j << ' ' << e.w << '\n';
  return out.str();
}

Model reparameterize(const InputModel& in) {
  Model m;
  m.n = in.n;
  m.edges = in.edges;
  m.theta = in.theta;
  double half_sum = 0.0;
  for (const Edge& e : in.edges) {
    m.theta[e.i] -= e.w / 2.0;
    m.theta[e.j] -= e.w / 2.0;
    half_sum += e.w / 2.0;
  }
  // E(x) - half_sum = E_in(x) for every x, so the stored offset is -half_sum.
  m.energy_offset = -half_sum;
  m.max_abs_theta_in = in.n > 0 ? in.theta.cwiseAbs().maxCoeff() : 0.0;
  m.finalize();
  return m;
}

Model flip_all(const Model& m) {
  Model out = m;
  double constant = 0.0;
  for (int i = 0; i < m.n; ++i) constant += m.theta[i];
  for (const Edge& e : m.edges) constant += e.w;
  for (int i = 0; i < m.n; ++i) {
    double nb_sum = 0.0;
    for (const auto& [j, w] : m.adj[i]) {
      (void)j;
      nb_sum += w;
    }
    out.theta[i] = -m.theta[i] - nb_sum;
  }
  out.energy_offset = m.energy_offset - constant;
  out.finalize();
  return out;
}

Model flip_subset(const Model& m, const std::vector<int>& flip_set) {
  std::vector<bool> in_set(m.n, false);
  for (int i : flip_set) {
    if (i < 0 || i >= m.n) throw std::invalid_argument("flip_subset: variable index out of range");
    in_set[i] = true;
  }
  Model out = m;
  double constant = 0.0;
  for (int i = 0; i < m.n; ++i)
    if (in_set[i]) constant += m.theta[i];

  // Edges with exactly one flipped end change sign; both-ends-flipped edges
  // keep their coupling and contribute to the energy constant.
  for (Edge& e : out.edges) {
    int ends = (in_set[e.i] ? 1 : 0) + (in_set[e.j] ? 1 : 0);
    if (ends == 1) e.w = -e.w;
    if (ends == 2) constant += e.w;
  }
  for (int i = 0; i < m.n; ++i) {
    if (in_set[i]) {
      double inside = 0.0;  // couplings to other flipped variables
      for (const auto& [j, w] : m.adj[i])
        if (in_set[j]) inside += w;
      out.theta[i] = -m.theta[i] - inside;
    } else {
      double crossing = 0.0;  // couplings to flipped neighbors
      for (const auto& [j, w] : m.adj[i])
        if (in_set[j]) crossing += w;
      out.theta[i] = m.theta[i] + crossing;
    }
  }
  out.energy_offset = m.energy_offset - constant;
  out.finalize();
  return out;
}

std::vector<Component> split_components(const Model& m) {
  std::vector<int> comp_of(m.n, -1);
  int num_comps = 0;
  for (int s = 0; s < m.n; ++s) {
    if (comp_of[s] != -1) continue;
    std::vector<int> stack{s};
    comp_of[s] = num_comps;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (const auto& [v, w] : m.adj[u]) {
        (void)w;
        if (comp_of[v] == -1) {
          comp_of[v] = num_comps;
          stack.push_back(v);
        }
      }
    }
    ++num_comps;
  }

  std::vector<Component> comps(num_comps);
  for (int i = 0; i < m.n; ++i) comps[comp_of[i]].vars.push_back(i);

  std::vector<int> local_index(m.n, -1);
  for (Component& c : comps)
    for (size_t k = 0; k < c.vars.size(); ++k) local_index[c.vars[k]] = static_cast<int>(k);

  for (int ci = 0; ci < num_comps; ++ci) {
    Component& c = comps[ci];
    Model& cm = c.model;
    cm.n = static_cast<int>(c.vars.size());
    cm.theta = Eigen::VectorXd::Zero(cm.n);
    for (size_t k = 0; k < c.vars.size(); ++k) cm.theta[k] = m.theta[c.vars[k]];
    cm.max_abs_theta_in = m.max_abs_theta_in;
  }
  for (const Edge& e : m.edges) {
    Component& c = comps[comp_of[e.i]];
    c.model.edges.push_back({local_index[e.i], local_index[e.j], e.w});
  }

  // Distribute the energy offset proportionally to edge count with the exact
  // remainder assigned to the first component, so the parts sum to the whole.
  size_t total_edges = m.edges.size();
  double assigned = 0.0;
  int first = 0;
  for (int ci = 0; ci < num_comps; ++ci) {
    Component& c = comps[ci];
    if (ci != first && total_edges > 0) {
      c.model.energy_offset =
          m.energy_offset * (static_cast<double>(c.model.edges.size()) / static_cast<double>(total_edges));
      assigned += c.model.energy_offset;
    }
  }
  comps[first].model.energy_offset = m.energy_offset - assigned;

  for (Component& c : comps) {
    c.model.finalize();
    c.isolated = (c.model.n == 1 && c.model.edges.empty());
  }
  return comps;
}

double model_energy(const Model& m, const std::vector<int>& x) {
  double e = 0.0;
  for (int i = 0; i < m.n; ++i) e -= m.theta[i] * x[i];
  for (const Edge& ed : m.edges) e -= ed.w * x[ed.i] * x[ed.j];
  return e;
}

double input_energy(const InputModel& m, const std::vector<int>& x) {
  double e = 0.0;
  for (int i = 0; i < m.n; ++i) e -= m.theta[i] * x[i];
  for (const Edge& ed : m.edges)
    e -= (ed.w / 2.0) * x[ed.i] * x[ed.j] + (ed.w / 2.0) * (1 - x[ed.i]) * (1 - x[ed.j]);
  return e;
}

}  // namespace bethe
