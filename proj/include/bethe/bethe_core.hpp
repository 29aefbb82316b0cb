#pragma once
#include <Eigen/Dense>

#include "bethe/model.hpp"

namespace bethe {

// Bethe free energy of a binary pairwise model in the analysis convention:
//   F(q) = sum_edges f_ij(q_i, q_j) + sum_i [ -theta_i q_i + (d_i - 1) S_i(q_i) ]
// where S_i is the binary entropy, f_ij = -w_ij xi_ij - S_ij, and xi_ij is the
// optimal joint belief q(X_i=1, X_j=1) for the given singleton beliefs.
// log Z_Bethe = -min_q F(q).

// Root of  alpha xi^2 - [1 + alpha (q_i+q_j)] xi + (1+alpha) q_i q_j = 0
// on the feasible branch: the lower root for alpha > 0, the higher for
// alpha < 0. Requires q_i, q_j in (0,1) and alpha > -1. |alpha| below 1e-12
// returns the independence limit q_i q_j.
double solve_xi(double q_i, double q_j, double alpha);

// solve_xi with boundary handling: q at 0 or 1 yields the limiting joint.
double joint_belief(double q_i, double q_j, double alpha);

// Binary entropy -q log q - (1-q) log(1-q) with 0 log 0 = 0.
double singleton_entropy(double q);

// Per-edge free energy f_ij = -w xi - S_ij at the optimal xi.
double pairwise_f(double q_i, double q_j, double w);

double free_energy(const Model& m, const Eigen::VectorXd& q);

// dF/dq_i = -theta_i + (d_i-1) log((1-q_i)/q_i)
//           + sum_j [ log(q_i - xi_ij) - log(1 + xi_ij - q_i - q_j) ].
// q must be strictly inside (0,1); values are then clamped to
// [1e-12, 1 - 1e-12] before evaluation (derivatives diverge at the boundary).
Eigen::VectorXd gradient(const Model& m, const Eigen::VectorXd& q);

// H_ij = (q_i q_j - xi_ij) / T_ij on edges (0 elsewhere),
// H_ii = -(d_i-1)/(q_i(1-q_i)) + sum_j q_j(1-q_j)/T_ij,
// T_ij = q_i q_j (1-q_i)(1-q_j) - (xi_ij - q_i q_j)^2.
Eigen::MatrixXd hessian(const Model& m, const Eigen::VectorXd& q);

}  // namespace bethe
