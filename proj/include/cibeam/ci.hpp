#pragma once

#include <Eigen/Dense>

#include "cibeam/conic.hpp"
#include "cibeam/model.hpp"

namespace cibeam::ci {

/// Result of a symbol-level minimum-power design. The optimization runs over
/// the lifted vector w2; w is the complex precoding vector it encodes and
/// power = ||w||^2 is the instantaneous transmit power of the composed frame.
struct PrecodeResult {
  Eigen::VectorXd w2;
  Eigen::VectorXcd w;
  double power = std::numeric_limits<double>::quiet_NaN();
  conic::SolveStatus status = conic::SolveStatus::max_iterations;
  int iterations = 0;
  bool polished = false;
};

/// Strict phase alignment: minimize ||w||^2 subject to, for every user,
///   Im(h~_i^T w) = 0  and  Re(h~_i^T w) >= sqrt(Gamma_i N0).
PrecodeResult solve_strict(const RealLifting& lift,
                           const conic::SolverOptions& options = {});

/// Relaxed sector constraints: minimize ||w||^2 subject to
///   |Im(h~_i^T w)| <= (Re(h~_i^T w) - sqrt(Gamma_i N0)) tan(theta),
/// written as the 2K linear rows b_r^T w2 <= -dual_linear_r.
PrecodeResult solve_relaxed(const RealLifting& lift,
                            const conic::SolverOptions& options = {});

/// BPSK half-plane constraints: minimize ||w||^2 subject to
///   Re(h~_i^T w) >= sqrt(Gamma_i N0)  (no imaginary-part restriction).
PrecodeResult solve_bpsk(const RotatedChannels& rotated,
                         const Eigen::VectorXd& sinr_targets, double noise_power,
                         const conic::SolverOptions& options = {});

/// QPSK written per quadrature axis in the unrotated frame: the noiseless
/// receive point y_i = (h~_i^T w) e^{j phi_i} must satisfy
///   sign(cos phi_i) Re(y_i) >= sqrt(Gamma_i N0 / 2)  and
///   sign(sin phi_i) Im(y_i) >= sqrt(Gamma_i N0 / 2).
/// The feasible set equals the relaxed sector set at theta = pi/4, so the
/// optimum must agree with solve_relaxed; kept as an independent route.
PrecodeResult solve_qpsk_axes(const RotatedChannels& rotated, const SymbolFrame& frame,
                              const Eigen::VectorXd& sinr_targets, double noise_power,
                              const conic::SolverOptions& options = {});

/// Full per-user-precoder form: variables t_1..t_K, objective the composed
/// instantaneous power ||sum_k t_k e^{j(phi_k - phi_1)}||^2, sector
/// constraints on the composed vector. Its optimum cannot improve on the
/// single-vector form; solved here (as a second-order cone program over all
/// 2NK real variables) to confirm that equivalence numerically.
PrecodeResult solve_per_user_relaxed(const RealLifting& lift, const SymbolFrame& frame,
                                     const conic::SolverOptions& options = {});

enum class DualStatus { converged, infeasible, iteration_limit };

const char* to_string(DualStatus status);

struct DualOptions {
  int max_iterations = 20000;
  double tolerance = 1e-7;  // projected-gradient stop, scaled by 1 + ||c||_inf
  /// Declared infeasible once -f(lambda) exceeds this multiple of the
  /// largest Gamma_i N0 (the dual is unbounded above in -f exactly when the
  /// sector constraints are inconsistent).
  double divergence_factor = 1e8;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double grow = 2.0;
};

/// Nonnegative least-squares dual of the relaxed design:
///   minimize f(lambda) = ||B lambda||^2 / 4 - c^T lambda,  lambda >= 0,
/// with B = lift.b and c = lift.dual_linear. The primal is recovered as
/// w2 = -B lambda / 2 and satisfies ||w2||^2 = -f(lambda*) at the optimum.
struct DualResult {
  Eigen::VectorXd lambda;
  Eigen::VectorXd w2;
  Eigen::VectorXcd w;
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  double power = std::numeric_limits<double>::quiet_NaN();
  double projected_gradient = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  DualStatus status = DualStatus::iteration_limit;
};

/// Projected gradient descent on the dual, step length from the curvature
/// bound (largest eigenvalue of B^T B / 2) with an expanding Armijo search.
DualResult solve_relaxed_dual(const RealLifting& lift, const DualOptions& options = {});

/// Max-min target design under an instantaneous power budget P:
///   maximize gamma s.t. b_r^T w2 + dual_linear_r * gamma <= 0, ||w2|| <= sqrt(P).
/// The lifting's targets act as per-user weights: at the optimum user i is
/// served at Gamma_i * result.gamma. With unit targets, result.gamma is the
/// common balanced level Gamma_t, and scaling P scales Gamma_t linearly.
struct BalanceResult {
  Eigen::VectorXd w2;
  Eigen::VectorXcd w;
  double gamma = std::numeric_limits<double>::quiet_NaN();  // balanced scale, linear
  double power = std::numeric_limits<double>::quiet_NaN();
  conic::SolveStatus status = conic::SolveStatus::max_iterations;
  int iterations = 0;
};

BalanceResult solve_balance(const RealLifting& lift, double power_budget,
                            const conic::SolverOptions& options = {});

/// BPSK counterpart: maximize gamma with Re(h~_i^T w) >= sqrt(Gamma_i N0) *
/// sqrt(gamma) under the same power budget.
BalanceResult solve_balance_bpsk(const RotatedChannels& rotated,
                                 const Eigen::VectorXd& sinr_targets, double noise_power,
                                 double power_budget,
                                 const conic::SolverOptions& options = {});

/// Per-user split t_k = w e^{j(phi_1 - phi_k)} / K. The composed transmit
/// vector for the frame is then w e^{j phi_1}, and every user's noiseless
/// receive point is (h~_i^T w) e^{j phi_i}.
PrecoderSet split_precoders(const Eigen::VectorXcd& w, const SymbolFrame& frame);

}  // namespace cibeam::ci
