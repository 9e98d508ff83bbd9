#pragma once

#include <Eigen/Dense>

#include "cibeam/ci.hpp"
#include "cibeam/conic.hpp"
#include "cibeam/model.hpp"
#include "cibeam/rng.hpp"

namespace cibeam::robust {

/// Worst-case designs under norm-bounded channel uncertainty: the true
/// rotated channel is h~_i = h^_i + e_i with ||e_i|| <= delta, and every
/// sector constraint must hold for all admissible errors. Each half of the
/// sector robustifies to one second-order cone over w2 (Pi is the lifting
/// permutation, hat quantities come from the estimate):
///   lower edge: || delta (Pi - tan(theta) I) w2 || <=
///               (tan(theta) f^_i - g^_i)^T w2 - tan(theta) sqrt(Gamma_i N0)
///   upper edge: || delta (Pi + tan(theta) I) w2 || <=
///               (tan(theta) f^_i + g^_i)^T w2 - tan(theta) sqrt(Gamma_i N0).
/// At delta = 0 both reduce exactly to the nominal linear rows.
ci::PrecodeResult solve_powermin(const RealLifting& lift_hat, double delta,
                                 const conic::SolverOptions& options = {});

/// BPSK counterpart: Re(h~_i^T w) >= sqrt(Gamma_i N0) for every error becomes
/// || delta w2 || <= f^_i^T w2 - sqrt(Gamma_i N0).
ci::PrecodeResult solve_powermin_bpsk(const RotatedChannels& rotated_hat,
                                      const Eigen::VectorXd& sinr_targets,
                                      double noise_power, double delta,
                                      const conic::SolverOptions& options = {});

/// Max-min target scale under a power budget with the robust cones; the
/// problem stays positively homogeneous, so the optimum scales linearly in
/// the budget. Targets in the lifting act as per-user weights.
ci::BalanceResult solve_balance(const RealLifting& lift_hat, double delta,
                                double power_budget,
                                const conic::SolverOptions& options = {});

ci::BalanceResult solve_balance_bpsk(const RotatedChannels& rotated_hat,
                                     const Eigen::VectorXd& sinr_targets,
                                     double noise_power, double delta,
                                     double power_budget,
                                     const conic::SolverOptions& options = {});

/// Robust slack of a candidate w2 against each sector edge, together with
/// the error (in the rotated frame) attaining it. margins(i, 0/1) >= 0 means
/// the lower/upper edge holds for every ||e|| <= delta; worst_error column
/// 2i + branch realizes the minimum. The binding direction is shared by all
/// users: it depends only on w2.
struct WorstCase {
  Eigen::MatrixXd margins;       // K x 2
  Eigen::MatrixXcd worst_error;  // N x 2K
};

WorstCase worst_case(const RealLifting& lift_hat, double delta,
                     const Eigen::VectorXd& w2);

/// Uniform draw from the complex ball of radius delta (direction from an
/// isotropic Gaussian, radius delta * u^{1/(2n)}).
Eigen::VectorXcd sample_ball_error(Eigen::Index n, double delta, rng::SubStream& stream);

}  // namespace cibeam::robust
