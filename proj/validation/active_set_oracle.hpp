#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace cibeam::validation {

/// Exact reference optimum of
///   minimize 0.5 ||x||^2 + q^T x  s.t.  eq_a x = eq_rhs,  ineq_a x <= ineq_rhs
/// found by enumerating every subset of inequalities as a candidate active
/// set and solving the resulting equality-constrained problem in closed form.
/// Exhaustive and independent of the iterative solver, so it serves as an
/// oracle for small instances. Cost grows as 2^m; refuses m beyond the guard.
struct OracleResult {
  bool feasible = false;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> active;
};

OracleResult enumerate_qp(const Eigen::VectorXd& q, const Eigen::MatrixXd& eq_a,
                          const Eigen::VectorXd& eq_rhs, const Eigen::MatrixXd& ineq_a,
                          const Eigen::VectorXd& ineq_rhs, int max_inequalities = 16);

}  // namespace cibeam::validation
