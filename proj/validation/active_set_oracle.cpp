#include "active_set_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace cibeam::validation {

namespace {

/// Minimizer of 0.5||x||^2 + q^T x subject to m_act x = rhs, or nothing if
/// the system is inconsistent. Stationarity gives x = -q - m_act^T xi with
/// multipliers xi solving (m_act m_act^T) xi = -(rhs + m_act q); a minimum-
/// norm multiplier solution handles redundant rows.
std::optional<Eigen::VectorXd> restricted_minimizer(const Eigen::VectorXd& q,
                                                    const Eigen::MatrixXd& m_act,
                                                    const Eigen::VectorXd& rhs,
                                                    double tol) {
  if (m_act.rows() == 0) return Eigen::VectorXd(-q);
  const Eigen::MatrixXd gram = m_act * m_act.transpose();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram);
  const Eigen::VectorXd xi = cod.solve(-(rhs + m_act * q));
  const Eigen::VectorXd x = -q - m_act.transpose() * xi;
  if ((m_act * x - rhs).cwiseAbs().maxCoeff() > tol) return std::nullopt;
  return x;
}

}  // namespace

OracleResult enumerate_qp(const Eigen::VectorXd& q, const Eigen::MatrixXd& eq_a,
                          const Eigen::VectorXd& eq_rhs, const Eigen::MatrixXd& ineq_a,
                          const Eigen::VectorXd& ineq_rhs, int max_inequalities) {
  const Eigen::Index n = q.size();
  const Eigen::Index me = eq_a.rows();
  const Eigen::Index mi = ineq_a.rows();
  if ((me > 0 && eq_a.cols() != n) || (mi > 0 && ineq_a.cols() != n) ||
      eq_rhs.size() != me || ineq_rhs.size() != mi) {
    throw std::invalid_argument("oracle dimensions are inconsistent");
  }
  if (mi > max_inequalities) {
    throw std::invalid_argument("too many inequalities for exhaustive enumeration");
  }

  const double scale = 1.0 + std::max({q.cwiseAbs().maxCoeff(),
                                       me > 0 ? eq_rhs.cwiseAbs().maxCoeff() : 0.0,
                                       mi > 0 ? ineq_rhs.cwiseAbs().maxCoeff() : 0.0});
  const double tol = 1e-9 * scale;

  OracleResult best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << mi); ++mask) {
    std::vector<Eigen::Index> subset;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (mask & (std::uint64_t{1} << i)) subset.push_back(i);
    }
    const Eigen::Index rows = me + static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd m_act(rows, n);
    Eigen::VectorXd rhs(rows);
    if (me > 0) {
      m_act.topRows(me) = eq_a;
      rhs.head(me) = eq_rhs;
    }
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(subset.size()); ++r) {
      m_act.row(me + r) = ineq_a.row(subset[static_cast<size_t>(r)]);
      rhs[me + r] = ineq_rhs[subset[static_cast<size_t>(r)]];
    }

    const auto x = restricted_minimizer(q, m_act, rhs, tol);
    if (!x) continue;
    if (me > 0 && (eq_a * *x - eq_rhs).cwiseAbs().maxCoeff() > tol) continue;
    if (mi > 0 && (ineq_a * *x - ineq_rhs).maxCoeff() > tol) continue;

    const double obj = 0.5 * x->squaredNorm() + q.dot(*x);
    if (!best.feasible || obj < best.objective) {
      best.feasible = true;
      best.x = *x;
      best.objective = obj;
      best.active = subset;
    }
  }
  return best;
}

}  // namespace cibeam::validation
