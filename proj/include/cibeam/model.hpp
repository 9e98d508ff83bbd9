#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cibeam/rng.hpp"

namespace cibeam {

/// PSK constellation convention. Symbol m has phase 2*pi*m/M + offset, unit
/// amplitude. The offset is pi/M for QPSK (axes become decision boundaries)
/// and 0 otherwise. The constructive-interference sector spans +/- theta
/// around the symbol phase with theta = pi/M.
struct ModulationSpec {
  int order = 4;
  double sector_half_angle = 0.0;  // theta = pi / order
  double phase_offset = 0.0;

  static ModulationSpec psk(int order);
  static ModulationSpec from_name(std::string_view name);  // bpsk | qpsk | 8psk

  bool is_bpsk() const { return order == 2; }
  /// tan(theta); rejects BPSK, whose sector degenerates to a half-plane.
  double tan_theta() const;
  double symbol_phase(int index) const;
};

/// Downlink dimensions, targets and reproducibility seed for one experiment.
struct Scenario {
  int n_tx = 1;      // N transmit antennas
  int n_users = 1;   // K single-antenna users
  double noise_power = 1.0;
  Eigen::VectorXd sinr_targets;  // linear Gamma_i, length n_users
  ModulationSpec modulation = ModulationSpec::psk(4);
  std::uint64_t seed = 1;

  static Scenario uniform(int n_tx, int n_users, double gamma, double noise_power,
                          ModulationSpec modulation, std::uint64_t seed);
  void validate() const;
};

/// Channel rows h_i^T (K x N); the received sample is y_i = h_i^T x + n_i
/// (transpose, not conjugate transpose).
struct ChannelSet {
  Eigen::MatrixXcd h;
};

/// Channels rotated to the first user's symbol phase:
/// h~_i = h_i * e^{j(phi_1 - phi_i)}.
struct RotatedChannels {
  Eigen::MatrixXcd h;
};

/// One symbol index (and phase) per user.
struct SymbolFrame {
  std::vector<int> indices;
  Eigen::VectorXd phases;
};

/// Per-user precoders, column k = t_k (N x K).
struct PrecoderSet {
  Eigen::MatrixXcd t;
};

/// Real-valued lifting of the rotated channels. With w2 = [w_R; -w_I] and
/// w1 = Pi * w2 = [w_I; w_R]:
///   Re(h~_i^T w) = f_i^T w2,  Im(h~_i^T w) = g_i^T w2,   g_i = Pi^T f_i,
/// where Pi = [0 -I; I 0] (so Pi^T = -Pi and Pi^T Pi = I). The sector
/// constraints become the 2K linear rows  b_col^T w2 + dual_linear <= 0 with
///   column i     of b:  g_i - tan(theta) f_i,
///   column K + i of b: -g_i - tan(theta) f_i.
struct RealLifting {
  Eigen::MatrixXd f;            // 2N x K
  Eigen::MatrixXd g;            // 2N x K
  Eigen::MatrixXd b;            // 2N x 2K
  Eigen::VectorXd thresholds;   // sqrt(Gamma_i * N0), length K
  Eigen::VectorXd dual_linear;  // tan(theta) * thresholds, stacked twice (2K)
  double tan_theta = 0.0;

  Eigen::Index n_tx() const { return f.rows() / 2; }
  Eigen::Index n_users() const { return f.cols(); }
};

/// Sector diagnostics for one user's noiseless receive point.
struct SectorMargins {
  double alpha_re = 0.0;  // depth along the symbol direction
  double alpha_im = 0.0;  // perpendicular component
  double slack = 0.0;     // >= 0 iff the point satisfies the sector constraint
  /// Data-dependent effective half-angle: tan(v) = tan(theta) * (1 -
  /// sqrt(Gamma*N0)/alpha_re); defined only when alpha_re exceeds the
  /// threshold. Absent for BPSK.
  std::optional<double> effective_angle;
};

/// 2N x 2N permutation Pi = [0 -I; I 0] mapping w2 to w1.
Eigen::MatrixXd lifting_permutation(Eigen::Index n_tx);

/// w1 = Pi * w2 without forming the matrix.
Eigen::VectorXd apply_lifting_permutation(const Eigen::VectorXd& w2);

/// Complex vector encoded by w2 = [w_R; -w_I].
Eigen::VectorXcd complex_from_w2(const Eigen::VectorXd& w2);
Eigen::VectorXd w2_from_complex(const Eigen::VectorXcd& w);

/// i.i.d. CN(0,1) channel rows, fully determined by (scenario.seed, trial).
ChannelSet gen_channels(const Scenario& scenario, std::int64_t trial);

/// Uniform symbol indices, fully determined by (scenario.seed, trial).
SymbolFrame gen_symbols(const Scenario& scenario, std::int64_t trial);

RotatedChannels rotate_channels(const ChannelSet& channels, const SymbolFrame& frame);

/// Builds the lifting together with the sector-constraint data. Rejects BPSK
/// (no finite tan(theta)); BPSK solvers work from RotatedChannels directly.
RealLifting lift_real(const RotatedChannels& rotated, const ModulationSpec& modulation,
                      const Eigen::VectorXd& sinr_targets, double noise_power);

/// Classifies the receive point z (pre-rotation: y_i without noise) against
/// user i's constructive sector. z is rotated internally by e^{-j phi_i}.
SectorMargins check_constructive(std::complex<double> receive_point, double symbol_phase,
                                 double sinr_target, double noise_power,
                                 const ModulationSpec& modulation);

/// ||sum_k t_k e^{j(phi_k - phi_1)}||^2, the symbol-dependent transmit power
/// (equals ||sum_k t_k d_k||^2 for unit-amplitude PSK symbols).
double instantaneous_power(const PrecoderSet& precoders, const SymbolFrame& frame);

/// Per-user ratio |h_i^T t_i|^2 / (sum_{k != i} |h_i^T t_k|^2 + N0), the
/// design metric of interference-suppressing precoders.
Eigen::VectorXd achieved_sinr(const ChannelSet& channels, const PrecoderSet& precoders,
                              double noise_power);

}  // namespace cibeam
