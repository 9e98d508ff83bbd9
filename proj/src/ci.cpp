#include "cibeam/ci.hpp"

#include <cmath>
#include <stdexcept>

namespace cibeam::ci {

namespace {

PrecodeResult from_conic(const conic::ConicSolution& sol) {
  PrecodeResult r;
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

/// Columns f_i = [Re(h~_i); Im(h~_i)], valid for any modulation.
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

}  // namespace

const char* to_string(DualStatus status) {
  switch (status) {
    case DualStatus::converged: return "converged";
    case DualStatus::infeasible: return "infeasible";
    case DualStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

PrecodeResult solve_strict(const RealLifting& lift, const conic::SolverOptions& options) {
  conic::ConicProblem p;
  p.n = 2 * lift.n_tx();
  p.eq_a = lift.g.transpose();
  p.eq_rhs = Eigen::VectorXd::Zero(lift.n_users());
  p.ineq_a = -lift.f.transpose();
  p.ineq_rhs = -lift.thresholds;
  return from_conic(conic::solve(p, options));
}

PrecodeResult solve_relaxed(const RealLifting& lift, const conic::SolverOptions& options) {
  conic::ConicProblem p;
  p.n = 2 * lift.n_tx();
  p.ineq_a = lift.b.transpose();
  p.ineq_rhs = -lift.dual_linear;
  return from_conic(conic::solve(p, options));
}

PrecodeResult solve_bpsk(const RotatedChannels& rotated, const Eigen::VectorXd& sinr_targets,
                         double noise_power, const conic::SolverOptions& options) {
  if (sinr_targets.size() != rotated.h.rows()) {
    throw std::invalid_argument("one target per user required");
  }
  const Eigen::MatrixXd f = stack_real(rotated);
  conic::ConicProblem p;
  p.n = f.rows();
  p.ineq_a = -f.transpose();
  p.ineq_rhs = -threshold_vector(sinr_targets, noise_power);
  return from_conic(conic::solve(p, options));
}

PrecodeResult solve_qpsk_axes(const RotatedChannels& rotated, const SymbolFrame& frame,
                              const Eigen::VectorXd& sinr_targets, double noise_power,
                              const conic::SolverOptions& options) {
  const Eigen::Index k = rotated.h.rows();
  if (sinr_targets.size() != k || frame.phases.size() != k) {
    throw std::invalid_argument("targets and frame must cover every user");
  }
  const Eigen::MatrixXd f = stack_real(rotated);
  const Eigen::Index n2 = f.rows();
  const Eigen::VectorXd axis_margin =
      (sinr_targets * (noise_power / 2.0)).cwiseSqrt();

  conic::ConicProblem p;
  p.n = n2;
  p.ineq_a.resize(2 * k, n2);
  p.ineq_rhs.resize(2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    // g_i = [Im(h~_i); -Re(h~_i)] without forming the permutation.
    Eigen::VectorXd gi(n2);
    gi.head(n2 / 2) = f.col(i).tail(n2 / 2);
    gi.tail(n2 / 2) = -f.col(i).head(n2 / 2);
    const double c = std::cos(frame.phases[i]);
    const double s = std::sin(frame.phases[i]);
    if (std::abs(c) < 1e-9 || std::abs(s) < 1e-9) {
      throw std::invalid_argument("per-axis form requires diagonal symbol phases");
    }
    const double sr = c > 0 ? 1.0 : -1.0;
    const double si = s > 0 ? 1.0 : -1.0;
    // sign(cos) * Re(y_i) >= margin and sign(sin) * Im(y_i) >= margin with
    // Re(y_i) = cos * f_i^T w2 - sin * g_i^T w2,
    // Im(y_i) = sin * f_i^T w2 + cos * g_i^T w2.
    p.ineq_a.row(2 * i) = -sr * (c * f.col(i) - s * gi).transpose();
    p.ineq_a.row(2 * i + 1) = -si * (s * f.col(i) + c * gi).transpose();
    p.ineq_rhs[2 * i] = -axis_margin[i];
    p.ineq_rhs[2 * i + 1] = -axis_margin[i];
  }
  return from_conic(conic::solve(p, options));
}

PrecodeResult solve_per_user_relaxed(const RealLifting& lift, const SymbolFrame& frame,
                                     const conic::SolverOptions& options) {
  const Eigen::Index n = lift.n_tx();
  const Eigen::Index k = lift.n_users();
  if (frame.phases.size() != k) throw std::invalid_argument("frame must cover every user");
  const Eigen::Index nz = 2 * n * k;  // stacked liftings of t_1..t_K

  // Composition map: w2(sum_k t_k e^{j d_k}) = sum_k Rot(d_k) w2(t_k).
  Eigen::MatrixXd compose = Eigen::MatrixXd::Zero(2 * n, nz);
  for (Eigen::Index kk = 0; kk < k; ++kk) {
    const double d = frame.phases[kk] - frame.phases[0];
    const double c = std::cos(d);
    const double s = std::sin(d);
    auto blk = compose.middleCols(2 * n * kk, 2 * n);
    blk.topLeftCorner(n, n) = c * Eigen::MatrixXd::Identity(n, n);
    blk.topRightCorner(n, n) = s * Eigen::MatrixXd::Identity(n, n);
    blk.bottomLeftCorner(n, n) = -s * Eigen::MatrixXd::Identity(n, n);
    blk.bottomRightCorner(n, n) = c * Eigen::MatrixXd::Identity(n, n);
  }

  const Eigen::Index rows_lin = 2 * k;
  const Eigen::Index soc_dim = 2 * n + 1;
  conic::ConeProgram cp;
  cp.a = Eigen::MatrixXd::Zero(rows_lin + soc_dim, nz + 1);
  cp.b = Eigen::VectorXd::Zero(rows_lin + soc_dim);
  cp.c = Eigen::VectorXd::Zero(nz + 1);
  cp.c[nz] = 1.0;  // minimize the power epigraph s >= ||compose z||
  cp.cones.nonneg = rows_lin;
  cp.cones.soc.push_back(soc_dim);
  for (Eigen::Index r = 0; r < rows_lin; ++r) {
    cp.a.row(r).head(nz) = lift.b.col(r).transpose() * compose;
    cp.b[r] = -lift.dual_linear[r];
  }
  cp.a(rows_lin, nz) = -1.0;
  cp.a.block(rows_lin + 1, 0, 2 * n, nz) = -compose;

  const conic::ConeSolution sol = conic::solve_cone_program(cp, options);
  PrecodeResult r;
  r.status = sol.status;
  r.iterations = sol.iterations;
  if (sol.x.size() > 0) {
    r.w2 = compose * sol.x.head(nz);
    r.w = complex_from_w2(r.w2);
    r.power = r.w2.squaredNorm();
  }
  return r;
}

DualResult solve_relaxed_dual(const RealLifting& lift, const DualOptions& options) {
  const Eigen::MatrixXd& b = lift.b;
  const Eigen::VectorXd& c = lift.dual_linear;
  const Eigen::Index m = b.cols();

  DualResult r;
  r.lambda = Eigen::VectorXd::Zero(m);

  const Eigen::MatrixXd h = b.transpose() * b;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  const double curvature = std::max(eig.eigenvalues().maxCoeff() / 2.0, 1e-300);
  const double c_scale = 1.0 + c.cwiseAbs().maxCoeff();
  const double diverge_level =
      options.divergence_factor * std::max(lift.thresholds.cwiseAbs2().maxCoeff(), 1e-12);

  double f = 0.0;
  Eigen::VectorXd grad = -c;
  double step = 1.0 / curvature;
  auto objective = [&](const Eigen::VectorXd& lam) {
    return 0.25 * (b * lam).squaredNorm() - c.dot(lam);
  };

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    r.projected_gradient =
        (r.lambda - (r.lambda - grad).cwiseMax(0.0)).cwiseAbs().maxCoeff();
    if (r.projected_gradient <= options.tolerance * c_scale) {
      r.status = DualStatus::converged;
      break;
    }
    if (-f > diverge_level) {
      r.status = DualStatus::infeasible;
      break;
    }

    double trial = step * options.grow;
    Eigen::VectorXd cand;
    double fc = f;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      cand = (r.lambda - trial * grad).cwiseMax(0.0);
      fc = objective(cand);
      if (fc <= f + options.armijo * grad.dot(cand - r.lambda)) {
        accepted = true;
        break;
      }
      trial *= options.backtrack;
    }
    if (!accepted) {
      r.status = DualStatus::iteration_limit;
      break;
    }
    r.lambda = cand;
    f = fc;
    grad = 0.5 * (h * r.lambda) - c;
    step = trial;
  }
  r.iterations = iter;

  r.w2 = -0.5 * (b * r.lambda);
  r.w = complex_from_w2(r.w2);
  r.power = r.w2.squaredNorm();
  r.dual_objective = f;
  return r;
}

namespace {

BalanceResult balance_from_rows(const Eigen::MatrixXd& rows_w2,
                                const Eigen::VectorXd& gamma_coeff, double power_budget,
                                const conic::SolverOptions& options) {
  if (power_budget <= 0.0) throw std::invalid_argument("power budget must be positive");
  const Eigen::Index n2 = rows_w2.cols();
  const Eigen::Index m = rows_w2.rows();
  const Eigen::Index soc_dim = n2 + 1;

  conic::ConeProgram cp;
  cp.a = Eigen::MatrixXd::Zero(m + 1 + soc_dim, n2 + 1);
  cp.b = Eigen::VectorXd::Zero(m + 1 + soc_dim);
  cp.c = Eigen::VectorXd::Zero(n2 + 1);
  cp.c[n2] = -1.0;  // maximize the amplitude scale
  cp.cones.nonneg = m + 1;
  cp.cones.soc.push_back(soc_dim);
  cp.a.block(0, 0, m, n2) = rows_w2;
  cp.a.block(0, n2, m, 1) = gamma_coeff;
  cp.a(m, n2) = -1.0;  // scale >= 0
  cp.b[m + 1] = std::sqrt(power_budget);
  cp.a.block(m + 2, 0, n2, n2) = -Eigen::MatrixXd::Identity(n2, n2);

  const conic::ConeSolution sol = conic::solve_cone_program(cp, options);
  BalanceResult r;
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

BalanceResult solve_balance(const RealLifting& lift, double power_budget,
                            const conic::SolverOptions& options) {
  return balance_from_rows(lift.b.transpose(), lift.dual_linear, power_budget, options);
}

BalanceResult solve_balance_bpsk(const RotatedChannels& rotated,
                                 const Eigen::VectorXd& sinr_targets, double noise_power,
                                 double power_budget, const conic::SolverOptions& options) {
  if (sinr_targets.size() != rotated.h.rows()) {
    throw std::invalid_argument("one target per user required");
  }
  const Eigen::MatrixXd f = stack_real(rotated);
  return balance_from_rows(-f.transpose(), threshold_vector(sinr_targets, noise_power),
                           power_budget, options);
}

PrecoderSet split_precoders(const Eigen::VectorXcd& w, const SymbolFrame& frame) {
  const Eigen::Index k = frame.phases.size();
  if (k < 1) throw std::invalid_argument("frame must contain at least one user");
  PrecoderSet set;
  set.t.resize(w.size(), k);
  for (Eigen::Index kk = 0; kk < k; ++kk) {
    set.t.col(kk) =
        w * (std::polar(1.0, frame.phases[0] - frame.phases[kk]) / static_cast<double>(k));
  }
  return set;
}

}  // namespace cibeam::ci
