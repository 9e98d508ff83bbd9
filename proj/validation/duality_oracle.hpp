#pragma once

#include <Eigen/Dense>

namespace cibeam::validation {

/// Reference optimum of the symbol-independent minimum-power design with
/// per-user ratio floors, computed through its virtual-uplink counterpart:
/// iterate the standard fixed point on uplink powers q,
///   q_i <- Gamma_i / (a_i^H Sigma_{-i}(q)^{-1} a_i),  Sigma(q) = N0 I + sum q_k a_k a_k^H,
/// with a_i = conj(h_i); the iteration converges exactly when the floors are
/// attainable and diverges otherwise. The downlink solution reuses the
/// uplink directions Sigma(q*)^{-1} a_i with powers from the K x K tightness
/// system. Entirely independent of the conic solver.
struct DualityOracleResult {
  bool feasible = false;
  double power = std::numeric_limits<double>::infinity();  // sum_k ||t_k||^2
  Eigen::MatrixXcd t;  // N x K, valid when feasible
  int iterations = 0;
};

DualityOracleResult duality_powermin(const Eigen::MatrixXcd& h /* K x N rows h_i^T */,
                                     const Eigen::VectorXd& sinr_targets,
                                     double noise_power);

}  // namespace cibeam::validation
