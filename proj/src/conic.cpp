#include "cibeam/conic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace cibeam::conic {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void project_soc(Eigen::Ref<Eigen::VectorXd> block) {
  const Eigen::Index d = block.size();
  if (d == 1) {
    block[0] = std::max(block[0], 0.0);
    return;
  }
  const double t = block[0];
  const double nz = block.tail(d - 1).norm();
  if (nz <= t) return;
  if (nz <= -t) {
    block.setZero();
    return;
  }
  const double a = 0.5 * (t + nz);
  block[0] = a;
  block.tail(d - 1) *= a / nz;
}

/// Projection of the dual block onto K*: zero rows are free, the rest is
/// self-dual (nonnegative orthant, second-order cones).
void project_dual_cone(const ConeSpec& cones, Eigen::Ref<Eigen::VectorXd> y) {
  Eigen::Index at = cones.zero;
  y.segment(at, cones.nonneg) = y.segment(at, cones.nonneg).cwiseMax(0.0);
  at += cones.nonneg;
  for (const Eigen::Index d : cones.soc) {
    project_soc(y.segment(at, d));
    at += d;
  }
}

/// Projection onto K itself (zero rows forced to zero).
void project_cone(const ConeSpec& cones, Eigen::Ref<Eigen::VectorXd> s) {
  s.head(cones.zero).setZero();
  Eigen::Index at = cones.zero;
  s.segment(at, cones.nonneg) = s.segment(at, cones.nonneg).cwiseMax(0.0);
  at += cones.nonneg;
  for (const Eigen::Index d : cones.soc) {
    project_soc(s.segment(at, d));
    at += d;
  }
}

struct Scaling {
  Eigen::VectorXd row;  // D
  Eigen::VectorXd col;  // E
  double b_scale = 1.0;
};

/// Ruiz equilibration. Rows of one second-order cone share a single factor so
/// that membership is preserved by the diagonal scaling.
Scaling equilibrate(Eigen::MatrixXd& a, Eigen::VectorXd& b, Eigen::VectorXd& c,
                    const ConeSpec& cones, bool enabled) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  Scaling sc;
  sc.row = Eigen::VectorXd::Ones(m);
  sc.col = Eigen::VectorXd::Ones(n);
  if (enabled && m > 0 && n > 0) {
    const Eigen::Index singles = cones.zero + cones.nonneg;
    for (int pass = 0; pass < 10; ++pass) {
      for (Eigen::Index r = 0; r < singles; ++r) {
        const double s = a.row(r).cwiseAbs().maxCoeff();
        if (s > 0) {
          const double f = 1.0 / std::sqrt(s);
          a.row(r) *= f;
          sc.row[r] *= f;
        }
      }
      Eigen::Index at = singles;
      for (const Eigen::Index d : cones.soc) {
        const double s = a.middleRows(at, d).cwiseAbs().maxCoeff();
        if (s > 0) {
          const double f = 1.0 / std::sqrt(s);
          a.middleRows(at, d) *= f;
          sc.row.segment(at, d) *= f;
        }
        at += d;
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        const double s = a.col(j).cwiseAbs().maxCoeff();
        if (s > 0) {
          const double f = 1.0 / std::sqrt(s);
          a.col(j) *= f;
          sc.col[j] *= f;
        }
      }
    }
  }
  b = sc.row.cwiseProduct(b);
  c = sc.col.cwiseProduct(c);
  const double bn = b.norm();
  const double cn = c.norm();
  sc.b_scale = (1.0 + cn) / (1.0 + bn);
  b *= sc.b_scale;
  return sc;
}

struct Candidate {
  Eigen::VectorXd x, y, s;
  Residuals res;
  double pobj = 0.0;
  double score = std::numeric_limits<double>::infinity();
};

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::primal_infeasible: return "primal_infeasible";
    case SolveStatus::dual_infeasible: return "dual_infeasible";
    case SolveStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

Eigen::Index ConeSpec::rows() const {
  Eigen::Index total = zero + nonneg;
  for (const Eigen::Index d : soc) total += d;
  return total;
}

void ConeProgram::validate() const {
  if (cones.zero < 0 || cones.nonneg < 0) {
    throw std::invalid_argument("cone row counts must be nonnegative");
  }
  for (const Eigen::Index d : cones.soc) {
    if (d < 1) throw std::invalid_argument("second-order cone dimension must be >= 1");
  }
  if (a.rows() != cones.rows()) {
    throw std::invalid_argument("cone layout does not match constraint rows");
  }
  if (b.size() != a.rows()) throw std::invalid_argument("b length must match rows of A");
  if (c.size() != a.cols()) throw std::invalid_argument("c length must match cols of A");
}

ConeSolution solve_cone_program(const ConeProgram& program, const SolverOptions& options) {
  program.validate();
  const auto start = Clock::now();

  const Eigen::Index n = program.a.cols();
  const Eigen::Index m = program.a.rows();
  const Eigen::Index dim = n + m + 1;

  Eigen::MatrixXd a = program.a;
  Eigen::VectorXd b = program.b;
  Eigen::VectorXd c = program.c;
  const Scaling sc = equilibrate(a, b, c, program.cones, options.normalize);

  const double data_inf =
      std::max({m * n > 0 ? program.a.cwiseAbs().maxCoeff() : 0.0,
                m > 0 ? program.b.cwiseAbs().maxCoeff() : 0.0,
                n > 0 ? program.c.cwiseAbs().maxCoeff() : 0.0});
  const double feas_scale = 1.0 + data_inf;

  // Embedding matrix I + Q with Q = [0 A^T c; -A 0 b; -c^T -b^T 0].
  Eigen::MatrixXd embed = Eigen::MatrixXd::Identity(dim, dim);
  embed.block(0, n, n, m) += a.transpose();
  embed.col(dim - 1).head(n) += c;
  embed.block(n, 0, m, n) -= a;
  embed.col(dim - 1).segment(n, m) += b;
  embed.row(dim - 1).head(n) -= c.transpose();
  embed.row(dim - 1).segment(n, m) -= b.transpose();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(embed);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  u[dim - 1] = 1.0;
  v[dim - 1] = 1.0;
  if (options.warm_u.size() == dim && options.warm_v.size() == dim) {
    u = options.warm_u;
    v = options.warm_v;
  }

  Eigen::VectorXd ut(dim), scratch(dim);
  Candidate best;
  ConeSolution sol;

  const double alpha = options.relaxation;
  const int check_every = std::max(1, options.check_interval);

  auto finish = [&](SolveStatus status) {
    sol.status = status;
    sol.solve_seconds = seconds_since(start);
    sol.embedding_u = u;
    sol.embedding_v = v;
    return sol;
  };

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    scratch = u + v;
    ut.noalias() = lu.permutationP() * scratch;
    lu.matrixLU().triangularView<Eigen::UnitLower>().solveInPlace(ut);
    lu.matrixLU().triangularView<Eigen::Upper>().solveInPlace(ut);
    ut = alpha * ut + (1.0 - alpha) * u;

    scratch = ut - v;  // point to project
    u = scratch;
    project_dual_cone(program.cones, u.segment(n, m));
    u[dim - 1] = std::max(u[dim - 1], 0.0);
    v = u - scratch;

    if (iter % check_every != 0 && iter != options.max_iterations) continue;
    sol.iterations = iter;

    const double tau = u[dim - 1];
    if (tau > 1e-12) {
      Candidate cand;
      cand.x = sc.col.cwiseProduct(u.head(n)) / (tau * sc.b_scale);
      cand.y = sc.row.cwiseProduct(u.segment(n, m));
      cand.s = v.segment(n, m).cwiseQuotient(sc.row) / (tau * sc.b_scale);
      cand.y /= tau;
      cand.res.primal = m > 0
          ? (program.a * cand.x + cand.s - program.b).cwiseAbs().maxCoeff()
          : 0.0;
      cand.res.dual = (program.a.transpose() * cand.y + program.c).cwiseAbs().maxCoeff();
      cand.pobj = program.c.dot(cand.x);
      const double dobj = -program.b.dot(cand.y);
      cand.res.gap = std::abs(cand.pobj - dobj);
      cand.res.complementarity = m > 0 ? std::abs(cand.s.dot(cand.y)) : 0.0;
      const double gap_scale = 1.0 + std::abs(cand.pobj) + std::abs(dobj);
      if (cand.res.primal <= options.feas_tol * feas_scale &&
          cand.res.dual <= options.feas_tol * feas_scale &&
          cand.res.gap <= options.gap_tol * gap_scale) {
        sol.x = cand.x;
        sol.y = cand.y;
        sol.s = cand.s;
        sol.residuals = cand.res;
        sol.objective = cand.pobj;
        return finish(SolveStatus::optimal);
      }
      cand.score = (cand.res.primal + cand.res.dual) / feas_scale + cand.res.gap / gap_scale;
      if (cand.score < best.score) best = std::move(cand);
    }

    // Certificate of primal infeasibility: A^T y = 0, y in K*, b^T y < 0.
    Eigen::VectorXd y_ray = sc.row.cwiseProduct(u.segment(n, m));
    const double bty = m > 0 ? program.b.dot(y_ray) : 0.0;
    if (m > 0 && bty < -1e-12 * (1.0 + y_ray.cwiseAbs().maxCoeff())) {
      y_ray /= -bty;
      const double resid = (program.a.transpose() * y_ray).cwiseAbs().maxCoeff();
      if (resid <= options.infeas_tol * std::max(1.0, y_ray.cwiseAbs().maxCoeff())) {
        sol.certificate = y_ray;
        sol.residuals.primal = resid;
        return finish(SolveStatus::primal_infeasible);
      }
    }

    // Certificate of dual infeasibility (unboundedness): A x + s = 0, s in K,
    // c^T x < 0.
    Eigen::VectorXd x_ray = sc.col.cwiseProduct(u.head(n));
    const double ctx = n > 0 ? program.c.dot(x_ray) : 0.0;
    if (n > 0 && ctx < -1e-12 * (1.0 + x_ray.cwiseAbs().maxCoeff())) {
      x_ray /= -ctx;
      Eigen::VectorXd s_ray = -(program.a * x_ray);
      project_cone(program.cones, s_ray);
      const double resid =
          m > 0 ? (program.a * x_ray + s_ray).cwiseAbs().maxCoeff() : 0.0;
      if (resid <= options.infeas_tol * std::max(1.0, x_ray.cwiseAbs().maxCoeff())) {
        sol.certificate = x_ray;
        sol.residuals.dual = resid;
        return finish(SolveStatus::dual_infeasible);
      }
    }
  }

  if (best.x.size() > 0) {
    sol.x = best.x;
    sol.y = best.y;
    sol.s = best.s;
    sol.residuals = best.res;
    sol.objective = best.pobj;
  }
  sol.iterations = options.max_iterations;
  return finish(SolveStatus::max_iterations);
}

void ConicProblem::validate() const {
  if (n < 1) throw std::invalid_argument("problem dimension must be >= 1");
  if (q.size() != 0 && q.size() != n) {
    throw std::invalid_argument("q must be empty or of length n");
  }
  if (eq_a.rows() != eq_rhs.size() || (eq_a.rows() > 0 && eq_a.cols() != n)) {
    throw std::invalid_argument("equality block dimensions are inconsistent");
  }
  if (ineq_a.rows() != ineq_rhs.size() || (ineq_a.rows() > 0 && ineq_a.cols() != n)) {
    throw std::invalid_argument("inequality block dimensions are inconsistent");
  }
  for (const SocConstraint& soc : socs) {
    if (soc.a.rows() != soc.b.size() || soc.a.cols() != n || soc.c.size() != n) {
      throw std::invalid_argument("second-order cone block dimensions are inconsistent");
    }
  }
}

namespace {

/// Active-set refinement for problems with only linear constraints: solve the
/// KKT system of the working set, then verify feasibility, multiplier signs
/// and objective improvement before accepting.
bool polish_linear(const ConicProblem& problem, ConicSolution& sol) {
  const Eigen::Index n = problem.n;
  const Eigen::Index me = problem.eq_a.rows();
  const Eigen::Index mi = problem.ineq_a.rows();
  const Eigen::VectorXd q =
      problem.q.size() == n ? problem.q : Eigen::VectorXd::Zero(n);

  const double h_scale =
      1.0 + (mi > 0 ? problem.ineq_rhs.cwiseAbs().maxCoeff() : 0.0);
  Eigen::VectorXd slack(mi);
  if (mi > 0) slack = problem.ineq_rhs - problem.ineq_a * sol.x;
  const double mu_scale =
      1.0 + (sol.ineq_dual.size() == mi && mi > 0 ? sol.ineq_dual.cwiseAbs().maxCoeff() : 0.0);

  for (const double slack_tol : {1e-6, 1e-9}) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < mi; ++i) {
      const bool small_slack = slack[i] <= slack_tol * h_scale;
      const bool live_dual =
          sol.ineq_dual.size() == mi && sol.ineq_dual[i] >= 1e-7 * mu_scale;
      if (small_slack || live_dual) active.push_back(i);
    }
    const Eigen::Index rows = me + static_cast<Eigen::Index>(active.size());

    Eigen::MatrixXd m_act(rows, n);
    Eigen::VectorXd rhs(rows);
    m_act.topRows(me) = problem.eq_a;
    rhs.head(me) = problem.eq_rhs;
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(active.size()); ++r) {
      m_act.row(me + r) = problem.ineq_a.row(active[r]);
      rhs[me + r] = problem.ineq_rhs[active[r]];
    }

    Eigen::VectorXd nu;
    Eigen::VectorXd x;
    if (rows == 0) {
      x = -q;
    } else {
      const Eigen::MatrixXd gram = m_act * m_act.transpose();
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram);
      nu = cod.solve(-(rhs + m_act * q));
      x = -q - m_act.transpose() * nu;
      if ((m_act * x - rhs).cwiseAbs().maxCoeff() > 1e-8 * h_scale) continue;
    }

    const double feas_tol = 1e-8 * h_scale;
    if (me > 0 && (problem.eq_a * x - problem.eq_rhs).cwiseAbs().maxCoeff() > feas_tol) continue;
    if (mi > 0 && (problem.ineq_a * x - problem.ineq_rhs).maxCoeff() > feas_tol) continue;

    bool duals_ok = true;
    const double nu_scale = 1.0 + (rows > 0 ? nu.cwiseAbs().maxCoeff() : 0.0);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(active.size()); ++r) {
      if (nu[me + r] < -1e-7 * nu_scale) {
        duals_ok = false;
        break;
      }
    }
    if (!duals_ok) continue;

    const double obj = 0.5 * x.squaredNorm() + q.dot(x);
    if (sol.status == SolveStatus::optimal && obj > sol.objective + 1e-7 * (1.0 + std::abs(sol.objective))) {
      continue;
    }

    sol.x = x;
    sol.objective = obj;
    sol.eq_dual = rows > 0 ? Eigen::VectorXd(nu.head(me)) : Eigen::VectorXd::Zero(me);
    sol.ineq_dual = Eigen::VectorXd::Zero(mi);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(active.size()); ++r) {
      sol.ineq_dual[active[r]] = std::max(nu[me + r], 0.0);
    }
    Eigen::VectorXd viol_eq =
        me > 0 ? Eigen::VectorXd((problem.eq_a * x - problem.eq_rhs).cwiseAbs())
               : Eigen::VectorXd();
    sol.residuals.primal = 0.0;
    if (me > 0) sol.residuals.primal = viol_eq.maxCoeff();
    if (mi > 0) {
      sol.residuals.primal = std::max(
          sol.residuals.primal, (problem.ineq_a * x - problem.ineq_rhs).maxCoeff());
    }
    sol.residuals.primal = std::max(sol.residuals.primal, 0.0);
    sol.residuals.dual = 0.0;  // stationarity holds by construction
    sol.residuals.gap = 0.0;
    sol.residuals.complementarity =
        mi > 0 ? std::abs(sol.ineq_dual.dot(problem.ineq_rhs - problem.ineq_a * x)) : 0.0;
    sol.status = SolveStatus::optimal;
    sol.polished = true;
    return true;
  }
  return false;
}

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverOptions& options) {
  problem.validate();
  const Eigen::Index n = problem.n;
  const Eigen::Index me = problem.eq_a.rows();
  const Eigen::Index mi = problem.ineq_a.rows();
  const Eigen::VectorXd q =
      problem.q.size() == n ? problem.q : Eigen::VectorXd::Zero(n);

  // Epigraph form over z = [x; t]: minimize q^T x + t with
  // 0.5 ||x||^2 <= t encoded as the cone row ||[x; t - 1/2]|| <= t + 1/2.
  Eigen::Index rows = me + mi;
  for (const SocConstraint& soc : problem.socs) rows += soc.a.rows() + 1;
  const Eigen::Index epi = n + 2;
  rows += epi;

  ConeProgram cp;
  cp.a = Eigen::MatrixXd::Zero(rows, n + 1);
  cp.b = Eigen::VectorXd::Zero(rows);
  cp.c = Eigen::VectorXd::Zero(n + 1);
  cp.c.head(n) = q;
  cp.c[n] = 1.0;
  cp.cones.zero = me;
  cp.cones.nonneg = mi;

  Eigen::Index at = 0;
  if (me > 0) {
    cp.a.block(at, 0, me, n) = problem.eq_a;
    cp.b.segment(at, me) = problem.eq_rhs;
    at += me;
  }
  if (mi > 0) {
    cp.a.block(at, 0, mi, n) = problem.ineq_a;
    cp.b.segment(at, mi) = problem.ineq_rhs;
    at += mi;
  }
  for (const SocConstraint& soc : problem.socs) {
    const Eigen::Index d = soc.a.rows() + 1;
    cp.cones.soc.push_back(d);
    cp.a.row(at).head(n) = -soc.c.transpose();
    cp.b[at] = soc.d;
    cp.a.block(at + 1, 0, soc.a.rows(), n) = -soc.a;
    cp.b.segment(at + 1, soc.a.rows()) = soc.b;
    at += d;
  }
  cp.cones.soc.push_back(epi);
  cp.a(at, n) = -1.0;
  cp.b[at] = 0.5;
  cp.a.block(at + 1, 0, n, n) = -Eigen::MatrixXd::Identity(n, n);
  cp.a(at + 1 + n, n) = -1.0;
  cp.b[at + 1 + n] = -0.5;

  const ConeSolution core = solve_cone_program(cp, options);

  ConicSolution sol;
  sol.status = core.status;
  sol.iterations = core.iterations;
  sol.solve_seconds = core.solve_seconds;
  sol.residuals = core.residuals;
  sol.embedding_u = core.embedding_u;
  sol.embedding_v = core.embedding_v;
  if (core.x.size() > 0) {
    sol.x = core.x.head(n);
    sol.objective = 0.5 * sol.x.squaredNorm() + q.dot(sol.x);
  }
  if (core.y.size() > 0) {
    sol.eq_dual = core.y.head(me);
    sol.ineq_dual = core.y.segment(me, mi);
    Eigen::Index yat = me + mi;
    for (const SocConstraint& soc : problem.socs) {
      const Eigen::Index d = soc.a.rows() + 1;
      sol.soc_dual.emplace_back(core.y.segment(yat, d));
      yat += d;
    }
  }
  if (core.status == SolveStatus::primal_infeasible) {
    // Certificate restricted to the caller's rows (epigraph rows excluded),
    // renormalized so that [eq_rhs; ineq_rhs]^T y = -1 again.
    sol.certificate = core.certificate.head(me + mi);
    double rhs_dot = 0.0;
    if (me > 0) rhs_dot += problem.eq_rhs.dot(sol.certificate.head(me));
    if (mi > 0) rhs_dot += problem.ineq_rhs.dot(sol.certificate.tail(mi));
    if (rhs_dot < 0.0) sol.certificate /= -rhs_dot;
  } else if (core.status == SolveStatus::dual_infeasible && core.certificate.size() > 0) {
    sol.certificate = core.certificate.head(n);
  }

  const bool linear_only = problem.socs.empty();
  if (options.polish && linear_only && sol.x.size() > 0 &&
      (sol.status == SolveStatus::optimal || sol.status == SolveStatus::max_iterations)) {
    polish_linear(problem, sol);
  }
  return sol;
}

double ViolationReport::max_violation() const {
  double v = 0.0;
  if (eq.size() > 0) v = std::max(v, eq.maxCoeff());
  if (ineq.size() > 0) v = std::max(v, ineq.maxCoeff());
  if (soc.size() > 0) v = std::max(v, soc.maxCoeff());
  return v;
}

ViolationReport residuals(const ConicProblem& problem, const Eigen::VectorXd& x) {
  problem.validate();
  if (x.size() != problem.n) throw std::invalid_argument("x has wrong dimension");
  ViolationReport rep;
  if (problem.eq_a.rows() > 0) {
    rep.eq = (problem.eq_a * x - problem.eq_rhs).cwiseAbs();
  }
  if (problem.ineq_a.rows() > 0) {
    rep.ineq = (problem.ineq_a * x - problem.ineq_rhs).cwiseMax(0.0);
  }
  rep.soc.resize(static_cast<Eigen::Index>(problem.socs.size()));
  for (Eigen::Index j = 0; j < rep.soc.size(); ++j) {
    const SocConstraint& soc = problem.socs[static_cast<size_t>(j)];
    rep.soc[j] = std::max((soc.a * x + soc.b).norm() - soc.c.dot(x) - soc.d, 0.0);
  }
  const Eigen::VectorXd q =
      problem.q.size() == problem.n ? problem.q : Eigen::VectorXd::Zero(problem.n);
  rep.objective = 0.5 * x.squaredNorm() + q.dot(x);
  return rep;
}

}  // namespace cibeam::conic
