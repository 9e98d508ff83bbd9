#include "cibeam/conventional.hpp"

#include <cmath>
#include <stdexcept>

namespace cibeam::conventional {

namespace {

struct RealRows {
  Eigen::MatrixXd f;  // 2N x K, f_i = [Re(h_i); Im(h_i)]
  Eigen::MatrixXd g;  // 2N x K, g_i = [Im(h_i); -Re(h_i)]
};

RealRows real_rows(const ChannelSet& channels) {
  const Eigen::Index k = channels.h.rows();
  const Eigen::Index n = channels.h.cols();
  RealRows rr;
  rr.f.resize(2 * n, k);
  rr.g.resize(2 * n, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    rr.f.col(i).head(n) = channels.h.row(i).real().transpose();
    rr.f.col(i).tail(n) = channels.h.row(i).imag().transpose();
    rr.g.col(i).head(n) = rr.f.col(i).tail(n);
    rr.g.col(i).tail(n) = -rr.f.col(i).head(n);
  }
  return rr;
}

}  // namespace

PowerminResult solve_powermin(const ChannelSet& channels,
                              const Eigen::VectorXd& sinr_targets, double noise_power,
                              const conic::SolverOptions& options) {
  const Eigen::Index k = channels.h.rows();
  const Eigen::Index n = channels.h.cols();
  if (sinr_targets.size() != k) throw std::invalid_argument("one target per user required");
  if (k < 1 || n < 1) throw std::invalid_argument("channels must be nonempty");
  if (noise_power <= 0.0) throw std::invalid_argument("noise power must be positive");
  if (sinr_targets.minCoeff() <= 0.0) {
    throw std::invalid_argument("ratio floors must be positive");
  }

  const RealRows rr = real_rows(channels);
  const Eigen::Index nv = 2 * n * k;  // stacked liftings of t_1..t_K

  conic::ConicProblem p;
  p.n = nv;
  p.eq_a = Eigen::MatrixXd::Zero(k, nv);
  p.eq_rhs = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    // Rotation freedom: make h_i^T t_i real (and >= 0 through the cone row).
    p.eq_a.row(i).segment(2 * n * i, 2 * n) = rr.g.col(i).transpose();

    conic::SocConstraint soc;
    soc.a = Eigen::MatrixXd::Zero(2 * k + 1, nv);
    soc.b = Eigen::VectorXd::Zero(2 * k + 1);
    soc.c = Eigen::VectorXd::Zero(nv);
    soc.d = 0.0;
    for (Eigen::Index kk = 0; kk < k; ++kk) {
      soc.a.row(2 * kk).segment(2 * n * kk, 2 * n) = rr.f.col(i).transpose();
      soc.a.row(2 * kk + 1).segment(2 * n * kk, 2 * n) = rr.g.col(i).transpose();
    }
    soc.b[2 * k] = std::sqrt(noise_power);
    soc.c.segment(2 * n * i, 2 * n) =
        std::sqrt(1.0 + 1.0 / sinr_targets[i]) * rr.f.col(i);
    p.socs.push_back(std::move(soc));
  }

  const conic::ConicSolution sol = conic::solve(p, options);
  PowerminResult r;
  r.status = sol.status;
  r.iterations = sol.iterations;
  r.embedding_u = sol.embedding_u;
  r.embedding_v = sol.embedding_v;
  if (sol.x.size() == nv) {
    r.precoders.t.resize(n, k);
    for (Eigen::Index kk = 0; kk < k; ++kk) {
      r.precoders.t.col(kk) = complex_from_w2(sol.x.segment(2 * n * kk, 2 * n));
    }
    r.power = sol.x.squaredNorm();
    r.sinr = achieved_sinr(channels, r.precoders, noise_power);
  }
  return r;
}

BalanceResult solve_balance(const ChannelSet& channels, const Eigen::VectorXd& weights,
                            double noise_power, double power_budget,
                            const BalanceOptions& options) {
  const Eigen::Index k = channels.h.rows();
  if (weights.size() != k) throw std::invalid_argument("one weight per user required");
  if (weights.minCoeff() <= 0.0) throw std::invalid_argument("weights must be positive");
  if (power_budget <= 0.0) throw std::invalid_argument("power budget must be positive");

  // Upper end of the bracket: a scale at which even one user alone would
  // exceed the budget (interference can only make things worse).
  double hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < k; ++i) {
    const double single = power_budget * channels.h.row(i).squaredNorm() /
                          (weights[i] * noise_power);
    hi = std::min(hi, single);
  }
  hi = std::max(hi * 1.0000001, 1e-12);

  BalanceResult r;
  double lo = 0.0;
  conic::SolverOptions probe_options = options.solver;
  PowerminResult at_lo;

  for (int probe = 0; probe < options.max_probes; ++probe) {
    if (hi - lo <= options.rel_tol * hi && r.feasible) break;
    const double mid = r.feasible ? 0.5 * (lo + hi) : hi * 0.5;
    const PowerminResult pm =
        solve_powermin(channels, weights * mid, noise_power, probe_options);
    ++r.probes;
    probe_options.warm_u = pm.embedding_u;
    probe_options.warm_v = pm.embedding_v;
    const bool fits = pm.status == conic::SolveStatus::optimal && pm.power <= power_budget;
    if (fits) {
      lo = mid;
      at_lo = pm;
      r.feasible = true;
    } else {
      hi = mid;
    }
  }

  if (r.feasible) {
    r.scale = lo;
    r.precoders = at_lo.precoders;
    r.power = at_lo.power;
    r.sinr = at_lo.sinr;
  }
  return r;
}

}  // namespace cibeam::conventional
