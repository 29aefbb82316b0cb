#include "bethe/bounds.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace bethe {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Bounds sigmoid_bounds(const Model& m) {
  Bounds b;
  b.A.resize(m.n);
  b.B.resize(m.n);
  b.logL = Eigen::VectorXd::Zero(m.n);
  b.logU = Eigen::VectorXd::Zero(m.n);
  for (int i = 0; i < m.n; ++i) {
    b.A[i] = stable_sigmoid(m.theta[i] - m.v_neg[i]);
    b.B[i] = 1.0 - stable_sigmoid(m.theta[i] + m.w_pos[i]);
  }
  return b;
}

void refresh_envelope_logs(const Model& m, Bounds& b) {
  b.logL = Eigen::VectorXd::Zero(m.n);
  b.logU = Eigen::VectorXd::Zero(m.n);
  for (int i = 0; i < m.n; ++i) {
    for (const auto& [j, w] : m.adj[i]) {
      double alpha, a_j, b_j;
      if (w > 0) {
        alpha = std::expm1(w);
        a_j = b.A[j];
        b_j = b.B[j];
      } else {
        alpha = std::expm1(-w);  // flipped-neighbor view of a repulsive edge
        a_j = b.B[j];
        b_j = b.A[j];
      }
      const double l_ij = 1.0 + alpha * a_j / (1.0 + alpha * (1.0 - b.B[i]) * (1.0 - a_j));
      const double u_ij = 1.0 + alpha * b_j / (1.0 + alpha * (1.0 - b.A[i]) * (1.0 - b_j));
      b.logL[i] += std::log(l_ij);
      b.logU[i] += std::log(u_ij);
    }
  }
}

Envelope envelope_constants(const Model& m, const Bounds& b, int i) {
  Envelope e;
  e.cL = -m.theta[i] - m.w_pos[i] + b.logU[i];
  e.cU = -m.theta[i] + m.v_neg[i] - b.logL[i];
  return e;
}

Bounds bbp_refine(const Model& m, const Bounds& start, int max_iters, double tol) {
  Bounds b = start;
  refresh_envelope_logs(m, b);
  for (int it = 0; it < max_iters; ++it) {
    double change = 0.0;
    Eigen::VectorXd a2(m.n), b2(m.n);
    for (int i = 0; i < m.n; ++i) {
      const double a_new =
          std::max(b.A[i], stable_sigmoid(m.theta[i] - m.v_neg[i] + b.logL[i]));
      const double hi_new =
          std::min(1.0 - b.B[i], stable_sigmoid(m.theta[i] + m.w_pos[i] - b.logU[i]));
      a2[i] = a_new;
      b2[i] = 1.0 - hi_new;
      if (a2[i] > hi_new) {  // numeric crossing: collapse to a point box
        const double mid = 0.5 * (a2[i] + hi_new);
        a2[i] = mid;
        b2[i] = 1.0 - mid;
      }
      change = std::max(change, std::abs(a2[i] - b.A[i]));
      change = std::max(change, std::abs(b2[i] - b.B[i]));
    }
    b.A = a2;
    b.B = b2;
    refresh_envelope_logs(m, b);
    if (change < tol) break;
  }
  return b;
}

double derivative_range(const Model& m, const Bounds& b, int i, RangeMode mode) {
  const double simple = m.v_neg[i] + m.w_pos[i] - b.logL[i] - b.logU[i];
  if (mode == RangeMode::Simple) return simple;
  const Envelope env = envelope_constants(m, b, i);
  const double lo = b.A[i];
  const double hi = 1.0 - b.B[i];
  if (!(lo > 0.0 && hi < 1.0 && lo <= hi)) return simple;
  const double refined = std::max(env.upper(hi), -env.lower(lo));
  // The endpoint formula is a valid derivative bound only on boxes satisfying
  // the interior-zero conditions (it equals `simple` at the BBP fixed point);
  // capping by `simple` keeps it sound on arbitrary boxes.
  return std::min(std::max(refined, 0.0), simple);
}

Bounds parse_bounds_file(const std::string& text, const Model& m) {
  Bounds base = sigmoid_bounds(m);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<bool> seen(m.n, false);
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = true;
    for (char c : line) {
      if (c == '#') break;
      if (!std::isspace(static_cast<unsigned char>(c))) {
        blank = false;
        break;
      }
    }
    if (blank) continue;
    std::istringstream ss(line);
    int i = -1;
    double a = 0.0, bb = 0.0;
    ss >> i >> a >> bb;
    std::string rest;
    if (ss.fail() || (ss >> rest)) throw ParseError(line_no, "expected 'i A_i B_i'");
    if (i < 0 || i >= m.n) throw ParseError(line_no, "variable index out of range");
    if (seen[i]) throw ParseError(line_no, "duplicate bounds for variable " + std::to_string(i));
    if (!(a > 0.0 && bb > 0.0 && a + bb < 1.0 + 1e-12))
      throw ParseError(line_no, "bounds must satisfy 0 < A, 0 < B, A <= 1-B");
    seen[i] = true;
    // External bounds may only tighten the sigmoid box.
    base.A[i] = std::max(base.A[i], a);
    base.B[i] = std::max(base.B[i], bb);
    if (base.A[i] > 1.0 - base.B[i])
      throw ParseError(line_no, "bounds for variable " + std::to_string(i) +
                                    " contradict the sigmoid box");
  }
  for (int i = 0; i < m.n; ++i)
    if (!seen[i]) throw std::runtime_error("bounds file is missing variable " + std::to_string(i));
  refresh_envelope_logs(m, base);
  return base;
}

}  // namespace bethe
