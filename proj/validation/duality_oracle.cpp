#include "duality_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace cibeam::validation {

DualityOracleResult duality_powermin(const Eigen::MatrixXcd& h,
                                     const Eigen::VectorXd& sinr_targets,
                                     double noise_power) {
  const Eigen::Index k = h.rows();
  const Eigen::Index n = h.cols();
  if (sinr_targets.size() != k || k < 1 || n < 1 || noise_power <= 0.0 ||
      sinr_targets.minCoeff() <= 0.0) {
    throw std::invalid_argument("oracle inputs are inconsistent");
  }
  const Eigen::MatrixXcd a = h.conjugate().transpose();  // column i = conj(h_i)

  DualityOracleResult res;
  Eigen::VectorXd q(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    q[i] = sinr_targets[i] * noise_power / a.col(i).squaredNorm();
  }

  const double blow_up = 1e14 * noise_power * (1.0 + sinr_targets.maxCoeff());
  Eigen::MatrixXcd sigma(n, n);
  for (res.iterations = 1; res.iterations <= 20000; ++res.iterations) {
    sigma = noise_power * Eigen::MatrixXcd::Identity(n, n);
    for (Eigen::Index i = 0; i < k; ++i) sigma += q[i] * a.col(i) * a.col(i).adjoint();
    const Eigen::MatrixXcd sigma_inv = sigma.inverse();

    double change = 0.0;
    Eigen::VectorXd next(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double x = (a.col(i).adjoint() * sigma_inv * a.col(i)).value().real();
      const double denom = 1.0 - q[i] * x;  // removes user i's own term
      if (denom <= 0.0 || x <= 0.0) return res;  // infeasible blow-up
      const double excl = x / denom;
      next[i] = sinr_targets[i] / excl;
      change = std::max(change, std::abs(next[i] - q[i]) / (1.0 + next[i]));
    }
    q = next;
    if (q.maxCoeff() > blow_up) return res;  // diverging: floors unattainable
    if (change < 1e-14) break;
  }

  sigma = noise_power * Eigen::MatrixXcd::Identity(n, n);
  for (Eigen::Index i = 0; i < k; ++i) sigma += q[i] * a.col(i) * a.col(i).adjoint();
  Eigen::MatrixXcd dirs(n, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    dirs.col(i) = sigma.ldlt().solve(a.col(i));
    dirs.col(i) /= dirs.col(i).norm();
  }

  // Downlink powers making every floor tight with these directions.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index kk = 0; kk < k; ++kk) {
      const double gain = std::norm((a.col(i).adjoint() * dirs.col(kk)).value());
      m(i, kk) = kk == i ? gain / sinr_targets[i] : -gain;
    }
  }
  const Eigen::VectorXd p =
      m.fullPivLu().solve(Eigen::VectorXd::Constant(k, noise_power));
  if (p.minCoeff() < 0.0) return res;

  res.feasible = true;
  res.power = p.sum();
  res.t.resize(n, k);
  for (Eigen::Index i = 0; i < k; ++i) res.t.col(i) = std::sqrt(p[i]) * dirs.col(i);
  return res;
}

}  // namespace cibeam::validation
