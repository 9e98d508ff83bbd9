#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace cibeam::conic {

enum class SolveStatus {
  optimal,
  primal_infeasible,
  dual_infeasible,
  max_iterations,
};

const char* to_string(SolveStatus status);

/// Cone layout of the slack vector, in row order: zero cone (equalities),
/// nonnegative orthant, then second-order cones of the given dimensions.
struct ConeSpec {
  Eigen::Index zero = 0;
  Eigen::Index nonneg = 0;
  std::vector<Eigen::Index> soc;

  Eigen::Index rows() const;
};

/// Linear cone program:  minimize c^T x  subject to  b - A x in K.
struct ConeProgram {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  ConeSpec cones;

  void validate() const;
};

struct Residuals {
  double primal = std::numeric_limits<double>::quiet_NaN();
  double dual = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
  double complementarity = std::numeric_limits<double>::quiet_NaN();
};

struct SolverOptions {
  double feas_tol = 1e-8;    // absolute, scaled by 1 + max |data entry|
  double gap_tol = 1e-7;     // relative duality gap
  double infeas_tol = 1e-7;  // certificate residual
  int max_iterations = 100000;
  double relaxation = 1.5;  // over-relaxation in (0, 2)
  int check_interval = 25;
  bool normalize = true;  // Ruiz equilibration of the data
  bool polish = true;     // active-set refinement (linear-cone problems)
  /// Optional warm start (sized like the embedding or empty).
  Eigen::VectorXd warm_u;
  Eigen::VectorXd warm_v;
};

struct ConeSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // dual, in K*
  Eigen::VectorXd s;  // slack, in K
  SolveStatus status = SolveStatus::max_iterations;
  Residuals residuals;
  int iterations = 0;
  double solve_seconds = 0.0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  /// Infeasibility ray: y-space ray with b^T y = -1 for primal_infeasible,
  /// x-space ray with c^T x = -1 for dual_infeasible. Empty otherwise.
  Eigen::VectorXd certificate;
  /// Final embedding iterates, reusable as a warm start for a nearby problem.
  Eigen::VectorXd embedding_u;
  Eigen::VectorXd embedding_v;
};

/// Homogeneous self-dual embedding solved by operator splitting; the
/// embedding matrix is factorized once (dense) and cached across iterations.
ConeSolution solve_cone_program(const ConeProgram& program, const SolverOptions& options = {});

/// One second-order cone constraint ||a x + b|| <= c^T x + d.
struct SocConstraint {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  double d = 0.0;
};

/// Quadratic-objective conic problem:
///   minimize 0.5 ||x||^2 + q^T x
///   s.t. eq_a x = eq_rhs, ineq_a x <= ineq_rhs, and each SocConstraint.
/// Solved through the cone core via an exact epigraph reformulation.
struct ConicProblem {
  Eigen::Index n = 0;
  Eigen::VectorXd q;  // empty means zero
  Eigen::MatrixXd eq_a;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_a;
  Eigen::VectorXd ineq_rhs;
  std::vector<SocConstraint> socs;

  void validate() const;
};

struct ConicSolution {
  Eigen::VectorXd x;
  SolveStatus status = SolveStatus::max_iterations;
  double objective = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd eq_dual;
  Eigen::VectorXd ineq_dual;
  std::vector<Eigen::VectorXd> soc_dual;
  Residuals residuals;
  int iterations = 0;
  double solve_seconds = 0.0;
  bool polished = false;
  Eigen::VectorXd certificate;  // see ConeSolution::certificate
  /// Final embedding iterates of the underlying cone program; feed back via
  /// SolverOptions::warm_u / warm_v when solving a nearby instance of the
  /// same shape (e.g. along a bisection).
  Eigen::VectorXd embedding_u;
  Eigen::VectorXd embedding_v;
};

ConicSolution solve(const ConicProblem& problem, const SolverOptions& options = {});

/// Pure evaluation of a candidate point: per-row violations by block plus the
/// objective. Satisfied constraints report zero violation.
struct ViolationReport {
  Eigen::VectorXd eq;    // |eq_a x - eq_rhs|
  Eigen::VectorXd ineq;  // max(ineq_a x - ineq_rhs, 0)
  Eigen::VectorXd soc;   // max(||a x + b|| - c^T x - d, 0) per cone
  double objective = std::numeric_limits<double>::quiet_NaN();
  double max_violation() const;
};

ViolationReport residuals(const ConicProblem& problem, const Eigen::VectorXd& x);

}  // namespace cibeam::conic
