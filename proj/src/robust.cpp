#include "cibeam/robust.hpp"

#include <cmath>
#include <stdexcept>

namespace cibeam::robust {

namespace {

ci::PrecodeResult from_conic(const conic::ConicSolution& sol) {
  ci::PrecodeResult r;
  r.status = sol.status;
  r.iterations = sol.iterations;
  r.polished = sol.polished;
  if (sol.x.size() > 0) {
    r.w2 = sol.x;
    r.w = complex_from_w2(r.w2);
    r.power = r.w2.squaredNorm();
  }
  return r;
}

Eigen::MatrixXd stack_real(const RotatedChannels& rotated) {
  const Eigen::Index k = rotated.h.rows();
  const Eigen::Index n = rotated.h.cols();
  Eigen::MatrixXd f(2 * n, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    f.col(i).head(n) = rotated.h.row(i).real().transpose();
    f.col(i).tail(n) = rotated.h.row(i).imag().transpose();
  }
  return f;
}

Eigen::VectorXd threshold_vector(const Eigen::VectorXd& sinr_targets, double noise_power) {
  if (noise_power <= 0.0) throw std::invalid_argument("noise power must be positive");
  if (sinr_targets.size() == 0 || sinr_targets.minCoeff() < 0.0) {
    throw std::invalid_argument("targets must be nonnegative and nonempty");
  }
  return (sinr_targets * noise_power).cwiseSqrt();
}

void check_delta(double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("error radius must be nonnegative");
}

/// delta * (Pi - tan(theta) I) for branch 0, delta * (Pi + tan(theta) I) for
/// branch 1. An error e shifts the edge value of branch beta by
/// eps^T (tan(theta) w2 -/+ w1) with eps the lifting of e, and the worst shift
/// over ||eps|| <= delta is -||edge_matrix * w2||.
Eigen::MatrixXd edge_matrix(Eigen::Index n_tx, double tan_theta, double delta, int branch) {
  Eigen::MatrixXd m = lifting_permutation(n_tx);
  m.diagonal().array() += branch == 0 ? -tan_theta : tan_theta;
  return delta * m;
}

Eigen::VectorXcd complex_from_stacked(const Eigen::VectorXd& eps) {
  const Eigen::Index n = eps.size() / 2;
  Eigen::VectorXcd e(n);
  e.real() = eps.head(n);
  e.imag() = eps.tail(n);
  return e;
}

/// Shared max-min scale program: maximize gamma over [w2; gamma] with
/// gamma >= 0, ||w2|| <= sqrt(budget), and per-row cones
/// ||soc_a[r] w2|| <= rows_w2.row(r) w2 - gamma_coeff[r] * gamma.
ci::BalanceResult balance_from_cones(const Eigen::MatrixXd& rows_w2,
                                     const std::vector<Eigen::MatrixXd>& soc_a,
                                     const Eigen::VectorXd& gamma_coeff,
                                     double power_budget,
                                     const conic::SolverOptions& options) {
  if (power_budget <= 0.0) throw std::invalid_argument("power budget must be positive");
  const Eigen::Index n2 = rows_w2.cols();
  const Eigen::Index m = rows_w2.rows();
  const Eigen::Index soc_dim = n2 + 1;

  conic::ConeProgram cp;
  cp.a = Eigen::MatrixXd::Zero(1 + soc_dim * (m + 1), n2 + 1);
  cp.b = Eigen::VectorXd::Zero(1 + soc_dim * (m + 1));
  cp.c = Eigen::VectorXd::Zero(n2 + 1);
  cp.c[n2] = -1.0;  // maximize the amplitude scale
  cp.cones.nonneg = 1;
  cp.a(0, n2) = -1.0;  // scale >= 0

  Eigen::Index at = 1;
  cp.b[at] = std::sqrt(power_budget);
  cp.a.block(at + 1, 0, n2, n2) = -Eigen::MatrixXd::Identity(n2, n2);
  cp.cones.soc.push_back(soc_dim);
  at += soc_dim;
  for (Eigen::Index r = 0; r < m; ++r) {
    cp.a.row(at).head(n2) = -rows_w2.row(r);
    cp.a(at, n2) = gamma_coeff[r];
    cp.a.block(at + 1, 0, n2, n2) = soc_a[static_cast<std::size_t>(r)];
    cp.cones.soc.push_back(soc_dim);
    at += soc_dim;
  }

  const conic::ConeSolution sol = conic::solve_cone_program(cp, options);
  ci::BalanceResult r;
  r.status = sol.status;
  r.iterations = sol.iterations;
  if (sol.x.size() > 0) {
    r.w2 = sol.x.head(n2);
    r.w = complex_from_w2(r.w2);
    r.power = r.w2.squaredNorm();
    const double scale = std::max(sol.x[n2], 0.0);
    r.gamma = scale * scale;
  }
  return r;
}

}  // namespace

ci::PrecodeResult solve_powermin(const RealLifting& lift_hat, double delta,
                                 const conic::SolverOptions& options) {
  check_delta(delta);
  if (delta == 0.0) return ci::solve_relaxed(lift_hat, options);

  const Eigen::Index n = lift_hat.n_tx();
  const Eigen::Index k = lift_hat.n_users();
  conic::ConicProblem p;
  p.n = 2 * n;
  p.socs.reserve(static_cast<std::size_t>(2 * k));
  const Eigen::MatrixXd edges[2] = {edge_matrix(n, lift_hat.tan_theta, delta, 0),
                                    edge_matrix(n, lift_hat.tan_theta, delta, 1)};
  for (Eigen::Index i = 0; i < k; ++i) {
    for (int branch = 0; branch < 2; ++branch) {
      conic::SocConstraint soc;
      soc.a = edges[branch];
      soc.b = Eigen::VectorXd::Zero(2 * n);
      // -b column = tan(theta) f -/+ g for the lower/upper edge.
      soc.c = -lift_hat.b.col(branch == 0 ? i : k + i);
      soc.d = -lift_hat.dual_linear[i];
      p.socs.push_back(std::move(soc));
    }
  }
  return from_conic(conic::solve(p, options));
}

ci::PrecodeResult solve_powermin_bpsk(const RotatedChannels& rotated_hat,
                                      const Eigen::VectorXd& sinr_targets,
                                      double noise_power, double delta,
                                      const conic::SolverOptions& options) {
  check_delta(delta);
  if (delta == 0.0) return ci::solve_bpsk(rotated_hat, sinr_targets, noise_power, options);
  if (sinr_targets.size() != rotated_hat.h.rows()) {
    throw std::invalid_argument("one target per user required");
  }

  const Eigen::MatrixXd f = stack_real(rotated_hat);
  const Eigen::VectorXd thr = threshold_vector(sinr_targets, noise_power);
  const Eigen::Index n2 = f.rows();
  conic::ConicProblem p;
  p.n = n2;
  p.socs.reserve(static_cast<std::size_t>(f.cols()));
  for (Eigen::Index i = 0; i < f.cols(); ++i) {
    // Worst error shrinks Re(h~^T w) by delta ||w||.
    conic::SocConstraint soc;
    soc.a = delta * Eigen::MatrixXd::Identity(n2, n2);
    soc.b = Eigen::VectorXd::Zero(n2);
    soc.c = f.col(i);
    soc.d = -thr[i];
    p.socs.push_back(std::move(soc));
  }
  return from_conic(conic::solve(p, options));
}

ci::BalanceResult solve_balance(const RealLifting& lift_hat, double delta,
                                double power_budget, const conic::SolverOptions& options) {
  check_delta(delta);
  if (delta == 0.0) return ci::solve_balance(lift_hat, power_budget, options);

  const Eigen::Index n = lift_hat.n_tx();
  const Eigen::Index k = lift_hat.n_users();
  const Eigen::MatrixXd edges[2] = {edge_matrix(n, lift_hat.tan_theta, delta, 0),
                                    edge_matrix(n, lift_hat.tan_theta, delta, 1)};
  Eigen::MatrixXd rows(2 * k, 2 * n);
  std::vector<Eigen::MatrixXd> soc_a;
  soc_a.reserve(static_cast<std::size_t>(2 * k));
  Eigen::VectorXd coeff(2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (int branch = 0; branch < 2; ++branch) {
      rows.row(2 * i + branch) = -lift_hat.b.col(branch == 0 ? i : k + i).transpose();
      soc_a.push_back(edges[branch]);
      coeff[2 * i + branch] = lift_hat.dual_linear[i];
    }
  }
  return balance_from_cones(rows, soc_a, coeff, power_budget, options);
}

ci::BalanceResult solve_balance_bpsk(const RotatedChannels& rotated_hat,
                                     const Eigen::VectorXd& sinr_targets,
                                     double noise_power, double delta, double power_budget,
                                     const conic::SolverOptions& options) {
  check_delta(delta);
  if (delta == 0.0) {
    return ci::solve_balance_bpsk(rotated_hat, sinr_targets, noise_power, power_budget,
                                  options);
  }
  if (sinr_targets.size() != rotated_hat.h.rows()) {
    throw std::invalid_argument("one target per user required");
  }

  const Eigen::MatrixXd f = stack_real(rotated_hat);
  const Eigen::Index n2 = f.rows();
  std::vector<Eigen::MatrixXd> soc_a(static_cast<std::size_t>(f.cols()),
                                     delta * Eigen::MatrixXd::Identity(n2, n2));
  return balance_from_cones(f.transpose(), soc_a,
                            threshold_vector(sinr_targets, noise_power), power_budget,
                            options);
}

WorstCase worst_case(const RealLifting& lift_hat, double delta, const Eigen::VectorXd& w2) {
  check_delta(delta);
  const Eigen::Index n = lift_hat.n_tx();
  const Eigen::Index k = lift_hat.n_users();
  if (w2.size() != 2 * n) throw std::invalid_argument("w2 must match the lifting");

  const Eigen::VectorXd w1 = apply_lifting_permutation(w2);
  WorstCase wc;
  wc.margins.resize(k, 2);
  wc.worst_error.resize(n, 2 * k);
  for (int branch = 0; branch < 2; ++branch) {
    // Edge value shifts by eps^T shift_dir; minimized on the delta-sphere.
    const Eigen::VectorXd shift_dir =
        lift_hat.tan_theta * w2 + (branch == 0 ? -1.0 : 1.0) * w1;
    const double shift_norm = shift_dir.norm();
    Eigen::VectorXcd eps = Eigen::VectorXcd::Zero(n);
    if (shift_norm > 0.0) eps = complex_from_stacked(-delta / shift_norm * shift_dir);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double nominal_edge = -lift_hat.b.col(branch == 0 ? i : k + i).dot(w2);
      wc.margins(i, branch) = nominal_edge - lift_hat.dual_linear[i] - delta * shift_norm;
      wc.worst_error.col(2 * i + branch) = eps;
    }
  }
  return wc;
}

Eigen::VectorXcd sample_ball_error(Eigen::Index n, double delta, rng::SubStream& stream) {
  check_delta(delta);
  if (n < 1) throw std::invalid_argument("dimension must be positive");
  Eigen::VectorXcd dir(n);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) dir[i] = stream.complex_normal();
    norm = dir.norm();
  } while (norm < 1e-30);
  const double radius =
      delta * std::pow(stream.uniform_open(), 1.0 / static_cast<double>(2 * n));
  return dir * (radius / norm);
}

}  // namespace cibeam::robust
