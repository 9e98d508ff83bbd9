#include "cibeam/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cibeam {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

ModulationSpec ModulationSpec::psk(int order) {
  if (order < 2 || (order & (order - 1)) != 0) {
    throw std::invalid_argument("PSK order must be a power of two >= 2, got " +
                                std::to_string(order));
  }
  ModulationSpec spec;
  spec.order = order;
  spec.sector_half_angle = kPi / order;
  spec.phase_offset = order == 4 ? kPi / 4.0 : 0.0;
  return spec;
}

ModulationSpec ModulationSpec::from_name(std::string_view name) {
  if (name == "bpsk") return psk(2);
  if (name == "qpsk") return psk(4);
  if (name == "8psk") return psk(8);
  throw std::invalid_argument("unsupported modulation '" + std::string(name) +
                              "' (expected bpsk, qpsk or 8psk)");
}

double ModulationSpec::tan_theta() const {
  if (is_bpsk()) {
    throw std::invalid_argument("sector tangent undefined for BPSK (theta = pi/2)");
  }
  return std::tan(sector_half_angle);
}

double ModulationSpec::symbol_phase(int index) const {
  return 2.0 * kPi * static_cast<double>(index) / static_cast<double>(order) + phase_offset;
}

Scenario Scenario::uniform(int n_tx, int n_users, double gamma, double noise_power,
                           ModulationSpec modulation, std::uint64_t seed) {
  Scenario s;
  s.n_tx = n_tx;
  s.n_users = n_users;
  s.noise_power = noise_power;
  s.sinr_targets = Eigen::VectorXd::Constant(n_users, gamma);
  s.modulation = modulation;
  s.seed = seed;
  s.validate();
  return s;
}

void Scenario::validate() const {
  if (n_tx < 1) throw std::invalid_argument("n_tx must be >= 1");
  if (n_users < 1) throw std::invalid_argument("n_users must be >= 1");
  if (!(noise_power > 0.0)) throw std::invalid_argument("noise power must be positive");
  if (sinr_targets.size() != n_users) {
    throw std::invalid_argument("sinr_targets length must equal n_users");
  }
  if ((sinr_targets.array() <= 0.0).any()) {
    throw std::invalid_argument("SINR targets must be positive");
  }
}

Eigen::MatrixXd lifting_permutation(Eigen::Index n_tx) {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(2 * n_tx, 2 * n_tx);
  pi.topRightCorner(n_tx, n_tx) = -Eigen::MatrixXd::Identity(n_tx, n_tx);
  pi.bottomLeftCorner(n_tx, n_tx) = Eigen::MatrixXd::Identity(n_tx, n_tx);
  return pi;
}

Eigen::VectorXd apply_lifting_permutation(const Eigen::VectorXd& w2) {
  const Eigen::Index n = w2.size() / 2;
  Eigen::VectorXd w1(2 * n);
  w1.head(n) = -w2.tail(n);
  w1.tail(n) = w2.head(n);
  return w1;
}

Eigen::VectorXcd complex_from_w2(const Eigen::VectorXd& w2) {
  const Eigen::Index n = w2.size() / 2;
  Eigen::VectorXcd w(n);
  w.real() = w2.head(n);
  w.imag() = -w2.tail(n);
  return w;
}

Eigen::VectorXd w2_from_complex(const Eigen::VectorXcd& w) {
  Eigen::VectorXd w2(2 * w.size());
  w2.head(w.size()) = w.real();
  w2.tail(w.size()) = -w.imag();
  return w2;
}

ChannelSet gen_channels(const Scenario& scenario, std::int64_t trial) {
  scenario.validate();
  rng::SubStream stream(scenario.seed, static_cast<std::uint64_t>(trial), rng::Stream::channels);
  ChannelSet set;
  set.h.resize(scenario.n_users, scenario.n_tx);
  for (int i = 0; i < scenario.n_users; ++i) {
    for (int j = 0; j < scenario.n_tx; ++j) {
      set.h(i, j) = stream.complex_normal();
    }
  }
  return set;
}

SymbolFrame gen_symbols(const Scenario& scenario, std::int64_t trial) {
  scenario.validate();
  rng::SubStream stream(scenario.seed, static_cast<std::uint64_t>(trial), rng::Stream::symbols);
  SymbolFrame frame;
  frame.indices.resize(scenario.n_users);
  frame.phases.resize(scenario.n_users);
  for (int i = 0; i < scenario.n_users; ++i) {
    frame.indices[i] = stream.below(scenario.modulation.order);
    frame.phases[i] = scenario.modulation.symbol_phase(frame.indices[i]);
  }
  return frame;
}

RotatedChannels rotate_channels(const ChannelSet& channels, const SymbolFrame& frame) {
  const Eigen::Index k = channels.h.rows();
  if (static_cast<Eigen::Index>(frame.indices.size()) != k) {
    throw std::invalid_argument("symbol frame size does not match channel count");
  }
  RotatedChannels rotated;
  rotated.h.resize(k, channels.h.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    const double angle = frame.phases[0] - frame.phases[i];
    rotated.h.row(i) = channels.h.row(i) * std::polar(1.0, angle);
  }
  return rotated;
}

RealLifting lift_real(const RotatedChannels& rotated, const ModulationSpec& modulation,
                      const Eigen::VectorXd& sinr_targets, double noise_power) {
  const Eigen::Index k = rotated.h.rows();
  const Eigen::Index n = rotated.h.cols();
  if (sinr_targets.size() != k) {
    throw std::invalid_argument("sinr_targets length must match user count");
  }
  const double t = modulation.tan_theta();  // rejects BPSK

  RealLifting lift;
  lift.tan_theta = t;
  lift.f.resize(2 * n, k);
  lift.g.resize(2 * n, k);
  lift.b.resize(2 * n, 2 * k);
  lift.thresholds.resize(k);
  lift.dual_linear.resize(2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    lift.f.col(i).head(n) = rotated.h.row(i).real().transpose();
    lift.f.col(i).tail(n) = rotated.h.row(i).imag().transpose();
    // g = Pi^T f with Pi = [0 -I; I 0]: g = [f_bottom; -f_top].
    lift.g.col(i).head(n) = lift.f.col(i).tail(n);
    lift.g.col(i).tail(n) = -lift.f.col(i).head(n);
    lift.b.col(i) = lift.g.col(i) - t * lift.f.col(i);
    lift.b.col(k + i) = -lift.g.col(i) - t * lift.f.col(i);
    lift.thresholds[i] = std::sqrt(sinr_targets[i] * noise_power);
    lift.dual_linear[i] = t * lift.thresholds[i];
    lift.dual_linear[k + i] = t * lift.thresholds[i];
  }
  return lift;
}

SectorMargins check_constructive(std::complex<double> receive_point, double symbol_phase,
                                 double sinr_target, double noise_power,
                                 const ModulationSpec& modulation) {
  const std::complex<double> u = receive_point * std::polar(1.0, -symbol_phase);
  const double threshold = std::sqrt(sinr_target * noise_power);
  SectorMargins m;
  m.alpha_re = u.real();
  m.alpha_im = u.imag();
  if (modulation.is_bpsk()) {
    m.slack = m.alpha_re - threshold;
    return m;
  }
  const double t = modulation.tan_theta();
  m.slack = (m.alpha_re - threshold) * t - std::abs(m.alpha_im);
  if (m.alpha_re > threshold) {
    m.effective_angle = std::atan(t * (1.0 - threshold / m.alpha_re));
  }
  return m;
}

double instantaneous_power(const PrecoderSet& precoders, const SymbolFrame& frame) {
  const Eigen::Index k = precoders.t.cols();
  if (static_cast<Eigen::Index>(frame.indices.size()) != k) {
    throw std::invalid_argument("symbol frame size does not match precoder count");
  }
  Eigen::VectorXcd composite = Eigen::VectorXcd::Zero(precoders.t.rows());
  for (Eigen::Index j = 0; j < k; ++j) {
    composite += precoders.t.col(j) * std::polar(1.0, frame.phases[j] - frame.phases[0]);
  }
  return composite.squaredNorm();
}

Eigen::VectorXd achieved_sinr(const ChannelSet& channels, const PrecoderSet& precoders,
                              double noise_power) {
  const Eigen::Index k = channels.h.rows();
  if (precoders.t.cols() != k || precoders.t.rows() != channels.h.cols()) {
    throw std::invalid_argument("precoder dimensions do not match the channels");
  }
  if (noise_power <= 0.0) throw std::invalid_argument("noise power must be positive");
  const Eigen::MatrixXcd cross = channels.h * precoders.t;  // (i,k) = h_i^T t_k
  Eigen::VectorXd sinr(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double signal = std::norm(cross(i, i));
    const double interference = cross.row(i).cwiseAbs2().sum() - signal;
    sinr[i] = signal / (interference + noise_power);
  }
  return sinr;
}

}  // namespace cibeam
