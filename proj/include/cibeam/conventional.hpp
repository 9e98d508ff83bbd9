#pragma once

#include <Eigen/Dense>

#include "cibeam/conic.hpp"
#include "cibeam/model.hpp"

namespace cibeam::conventional {

/// Symbol-independent minimum-power design with per-user SINR floors:
///   minimize sum_k ||t_k||^2
///   s.t.     |h_i^T t_i|^2 >= Gamma_i (sum_{k != i} |h_i^T t_k|^2 + N0).
/// Each constraint is rotated so h_i^T t_i is real and nonnegative, turning
/// it into one equality row and one second-order cone
///   sqrt(1 + 1/Gamma_i) Re(h_i^T t_i) >= ||[h_i^T t_1 .. h_i^T t_K, sqrt(N0)]||.
struct PowerminResult {
  PrecoderSet precoders;
  double power = std::numeric_limits<double>::quiet_NaN();  // sum_k ||t_k||^2
  Eigen::VectorXd sinr;  // achieved, per user
  conic::SolveStatus status = conic::SolveStatus::max_iterations;
  int iterations = 0;
  Eigen::VectorXd embedding_u;  // warm-start handles, see conic::SolverOptions
  Eigen::VectorXd embedding_v;
};

PowerminResult solve_powermin(const ChannelSet& channels,
                              const Eigen::VectorXd& sinr_targets, double noise_power,
                              const conic::SolverOptions& options = {});

struct BalanceOptions {
  double rel_tol = 1e-6;  // bracket width relative to the upper end
  int max_probes = 80;
  conic::SolverOptions solver;
};

/// Max-min SINR under an average power budget, by bisection on the common
/// scale t of the targets (user i held at t * weight_i): the minimum power
/// is increasing in t, and the single-user bound P_min >= t w_i N0 / ||h_i||^2
/// gives a finite bracket. Probes reuse the previous embedding as warm start.
struct BalanceResult {
  PrecoderSet precoders;
  double scale = 0.0;  // t*, linear; user i is served at scale * weight_i
  double power = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd sinr;
  int probes = 0;
  bool feasible = false;
};

BalanceResult solve_balance(const ChannelSet& channels, const Eigen::VectorXd& weights,
                            double noise_power, double power_budget,
                            const BalanceOptions& options = {});

}  // namespace cibeam::conventional
