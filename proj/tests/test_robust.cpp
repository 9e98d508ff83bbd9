#include <doctest.h>

#include <cibeam/ci.hpp>
#include <cibeam/model.hpp>
#include <cibeam/robust.hpp>

#include <cmath>
#include <complex>

using namespace cibeam;

namespace {

struct Fixture {
  Scenario sc;
  RotatedChannels rot;
  SymbolFrame frame;
  RealLifting lift;
};

Fixture make_fixture(int n, int k, double gamma, double noise, ModulationSpec mod,
                     std::uint64_t seed, std::int64_t trial) {
  Fixture fx;
  fx.sc = Scenario::uniform(n, k, gamma, noise, mod, seed);
  fx.rot = rotate_channels(gen_channels(fx.sc, trial), gen_symbols(fx.sc, trial));
  fx.frame = gen_symbols(fx.sc, trial);
  if (!mod.is_bpsk()) {
    fx.lift = lift_real(fx.rot, mod, fx.sc.sinr_targets, noise);
  }
  return fx;
}

/// Sector edge values of the receive point z = h~^T w in the rotated frame,
/// minus the shared right-hand side; entry 0/1 is the lower/upper edge.
std::pair<double, double> edge_values(std::complex<double> z, double tan_theta,
                                      double threshold) {
  const double rhs = tan_theta * threshold;
  return {tan_theta * z.real() - z.imag() - rhs, tan_theta * z.real() + z.imag() - rhs};
}

}  // namespace

TEST_CASE("zero radius reproduces the nominal designs") {
  const auto fx = make_fixture(4, 3, 5.0, 0.8, ModulationSpec::psk(8), 71, 2);

  const auto robust = robust::solve_powermin(fx.lift, 0.0);
  const auto nominal = ci::solve_relaxed(fx.lift);
  REQUIRE(robust.status == conic::SolveStatus::optimal);
  CHECK((robust.w2 - nominal.w2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(robust.power == doctest::Approx(nominal.power).epsilon(1e-12));

  const auto rb = robust::solve_balance(fx.lift, 0.0, 3.0);
  const auto nb = ci::solve_balance(fx.lift, 3.0);
  REQUIRE(rb.status == conic::SolveStatus::optimal);
  CHECK(rb.gamma == doctest::Approx(nb.gamma).epsilon(1e-12));

  const auto bfx = make_fixture(4, 3, 5.0, 0.8, ModulationSpec::psk(2), 72, 2);
  const auto rbp = robust::solve_powermin_bpsk(bfx.rot, bfx.sc.sinr_targets, 0.8, 0.0);
  const auto nbp = ci::solve_bpsk(bfx.rot, bfx.sc.sinr_targets, 0.8);
  REQUIRE(rbp.status == conic::SolveStatus::optimal);
  CHECK(rbp.power == doctest::Approx(nbp.power).epsilon(1e-12));

  const auto rbb = robust::solve_balance_bpsk(bfx.rot, bfx.sc.sinr_targets, 0.8, 0.0, 3.0);
  const auto nbb = ci::solve_balance_bpsk(bfx.rot, bfx.sc.sinr_targets, 0.8, 3.0);
  REQUIRE(rbb.status == conic::SolveStatus::optimal);
  CHECK(rbb.gamma == doctest::Approx(nbb.gamma).epsilon(1e-12));
}

TEST_CASE("single user: closed-form power and balanced level under uncertainty") {
  // With one user the optimum aligns with the estimate and both edges bind,
  // giving power = Gamma N0 / (||h|| - delta / sin(theta))^2.
  const auto mod = ModulationSpec::psk(4);
  const auto fx = make_fixture(3, 1, 5.0, 0.8, mod, 73, 4);
  const double h_norm = fx.rot.h.row(0).norm();
  const double sin_theta = std::sin(std::atan(fx.lift.tan_theta));
  const double delta = 0.25 * h_norm * sin_theta;
  const double denom = h_norm - delta / sin_theta;

  const auto pm = robust::solve_powermin(fx.lift, delta);
  REQUIRE(pm.status == conic::SolveStatus::optimal);
  CHECK(pm.power == doctest::Approx(5.0 * 0.8 / (denom * denom)).epsilon(1e-5));

  const auto wc = robust::worst_case(fx.lift, delta, pm.w2);
  CHECK(std::abs(wc.margins(0, 0)) < 1e-5);
  CHECK(std::abs(wc.margins(0, 1)) < 1e-5);

  const auto unit = lift_real(fx.rot, mod, Eigen::VectorXd::Ones(1), 0.8);
  const auto bal = robust::solve_balance(unit, delta, 2.5);
  REQUIRE(bal.status == conic::SolveStatus::optimal);
  CHECK(bal.gamma == doctest::Approx(2.5 * denom * denom / 0.8).epsilon(1e-4));
  CHECK(bal.power <= 2.5 * (1.0 + 1e-6));
}

TEST_CASE("single user bpsk: worst-case channel gain sets both designs") {
  const auto fx = make_fixture(3, 1, 4.0, 0.6, ModulationSpec::psk(2), 74, 5);
  const double h_norm = fx.rot.h.row(0).norm();
  const double delta = 0.3 * h_norm;
  const double denom = h_norm - delta;

  const auto pm = robust::solve_powermin_bpsk(fx.rot, fx.sc.sinr_targets, 0.6, delta);
  REQUIRE(pm.status == conic::SolveStatus::optimal);
  CHECK(pm.power == doctest::Approx(4.0 * 0.6 / (denom * denom)).epsilon(1e-5));

  const auto bal =
      robust::solve_balance_bpsk(fx.rot, Eigen::VectorXd::Ones(1), 0.6, delta, 2.0);
  REQUIRE(bal.status == conic::SolveStatus::optimal);
  CHECK(bal.gamma == doctest::Approx(2.0 * denom * denom / 0.6).epsilon(1e-4));
}

TEST_CASE("sampled errors in the ball never leave the sector") {
  const auto mod = ModulationSpec::psk(4);
  const auto fx = make_fixture(5, 3, 4.0, 1.0, mod, 75, 6);
  const double delta = 0.15;

  const auto pm = robust::solve_powermin(fx.lift, delta);
  REQUIRE(pm.status == conic::SolveStatus::optimal);
  const auto wc = robust::worst_case(fx.lift, delta, pm.w2);
  CHECK(wc.margins.minCoeff() >= -1e-6);
  CHECK(wc.margins.minCoeff() <= 1e-4);  // the design leaves no spare power

  rng::SubStream errors(fx.sc.seed, 6, rng::Stream::csi_error);
  for (int draw = 0; draw < 300; ++draw) {
    for (Eigen::Index i = 0; i < 3; ++i) {
      const Eigen::VectorXcd e = robust::sample_ball_error(5, delta, errors);
      const std::complex<double> z = ((fx.rot.h.row(i).transpose() + e).array() *
                                      pm.w.array()).sum();
      const auto m = check_constructive(z, 0.0, fx.sc.sinr_targets[i], 1.0, mod);
      CHECK(m.slack >= -1e-5);
      const auto edges = edge_values(z, fx.lift.tan_theta, fx.lift.thresholds[i]);
      CHECK(edges.first >= wc.margins(i, 0) - 1e-9);
      CHECK(edges.second >= wc.margins(i, 1) - 1e-9);
    }
  }

  // The returned worst error drives each edge exactly to its margin.
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (int branch = 0; branch < 2; ++branch) {
      const Eigen::VectorXcd e = wc.worst_error.col(2 * i + branch);
      CHECK(e.norm() == doctest::Approx(delta).epsilon(1e-12));
      const std::complex<double> z =
          ((fx.rot.h.row(i).transpose() + e).array() * pm.w.array()).sum();
      const auto edges = edge_values(z, fx.lift.tan_theta, fx.lift.thresholds[i]);
      const double attained = branch == 0 ? edges.first : edges.second;
      CHECK(attained == doctest::Approx(wc.margins(i, branch)).epsilon(1e-9));
    }
  }
}

TEST_CASE("bpsk designs survive sampled errors") {
  const auto fx = make_fixture(4, 2, 3.0, 0.6, ModulationSpec::psk(2), 76, 7);
  const double delta = 0.1;
  const auto pm = robust::solve_powermin_bpsk(fx.rot, fx.sc.sinr_targets, 0.6, delta);
  REQUIRE(pm.status == conic::SolveStatus::optimal);

  const double thr = std::sqrt(3.0 * 0.6);
  double min_analytic = std::numeric_limits<double>::infinity();
  rng::SubStream errors(fx.sc.seed, 7, rng::Stream::csi_error);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const std::complex<double> nominal = (fx.rot.h.row(i) * pm.w).value();
    min_analytic = std::min(min_analytic, nominal.real() - delta * pm.w.norm() - thr);
    for (int draw = 0; draw < 200; ++draw) {
      const Eigen::VectorXcd e = robust::sample_ball_error(4, delta, errors);
      const std::complex<double> z =
          ((fx.rot.h.row(i).transpose() + e).array() * pm.w.array()).sum();
      CHECK(z.real() >= thr - 1e-5);
    }
  }
  CHECK(min_analytic >= -1e-6);
  CHECK(min_analytic <= 1e-4);
}

TEST_CASE("cost is monotone in the radius and scales with the budget") {
  const auto fx = make_fixture(4, 3, 4.0, 1.0, ModulationSpec::psk(8), 77, 8);
  double prev_power = 0.0;
  double prev_gamma = std::numeric_limits<double>::infinity();
  for (const double delta : {0.0, 0.02, 0.05, 0.1}) {
    const auto pm = robust::solve_powermin(fx.lift, delta);
    REQUIRE(pm.status == conic::SolveStatus::optimal);
    CHECK(pm.power >= prev_power * (1.0 - 1e-9));
    prev_power = pm.power;

    const auto bal = robust::solve_balance(fx.lift, delta, 4.0);
    REQUIRE(bal.status == conic::SolveStatus::optimal);
    CHECK(bal.gamma <= prev_gamma * (1.0 + 1e-9));
    prev_gamma = bal.gamma;
  }

  const auto unit = lift_real(fx.rot, ModulationSpec::psk(8), Eigen::VectorXd::Ones(3), 1.0);
  const auto base = robust::solve_balance(unit, 0.1, 4.0);
  const auto doubled = robust::solve_balance(unit, 0.1, 8.0);
  REQUIRE(base.status == conic::SolveStatus::optimal);
  CHECK(doubled.gamma == doctest::Approx(2.0 * base.gamma).epsilon(1e-4));

  // Homogeneity ties balancing to the unit-target minimum power: the budget
  // is exhausted exactly at the balanced level.
  const auto unit_pm = robust::solve_powermin(unit, 0.1);
  REQUIRE(unit_pm.status == conic::SolveStatus::optimal);
  CHECK(base.gamma == doctest::Approx(4.0 / unit_pm.power).epsilon(1e-4));
}

TEST_CASE("an error ball covering the channel is infeasible") {
  const auto fx = make_fixture(2, 1, 4.0, 1.0, ModulationSpec::psk(4), 78, 9);
  const double h_norm = fx.rot.h.row(0).norm();
  const double sin_theta = std::sin(std::atan(fx.lift.tan_theta));

  const auto pm = robust::solve_powermin(fx.lift, 1.2 * h_norm * sin_theta);
  CHECK(pm.status == conic::SolveStatus::primal_infeasible);

  const auto bal = robust::solve_balance(fx.lift, 1.2 * h_norm * sin_theta, 4.0);
  REQUIRE(bal.status == conic::SolveStatus::optimal);
  CHECK(bal.gamma <= 1e-6);
}

TEST_CASE("ball sampler: inside, isotropic, radius law, reproducible") {
  const Eigen::Index n = 3;
  const double delta = 0.7;
  rng::SubStream stream(91, 4, rng::Stream::csi_error);

  const int draws = 4000;
  Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(n);
  double u_sum = 0.0;
  double u_min = 1.0;
  double u_max = 0.0;
  for (int d = 0; d < draws; ++d) {
    const Eigen::VectorXcd e = robust::sample_ball_error(n, delta, stream);
    const double r = e.norm();
    REQUIRE(r <= delta * (1.0 + 1e-12));
    // (r / delta)^(2n) is uniform on (0, 1] for a uniform draw in the ball.
    const double u = std::pow(r / delta, 2.0 * static_cast<double>(n));
    u_sum += u;
    u_min = std::min(u_min, u);
    u_max = std::max(u_max, u);
    mean += e;
  }
  mean /= static_cast<double>(draws);
  CHECK(u_sum / draws == doctest::Approx(0.5).epsilon(0.06));
  CHECK(u_min <= 0.01);
  CHECK(u_max >= 0.99);
  CHECK(mean.norm() <= 0.03);

  rng::SubStream replay(91, 4, rng::Stream::csi_error);
  rng::SubStream other(91, 5, rng::Stream::csi_error);
  const Eigen::VectorXcd first = robust::sample_ball_error(n, delta, replay);
  rng::SubStream replay2(91, 4, rng::Stream::csi_error);
  CHECK((robust::sample_ball_error(n, delta, replay2) - first).norm() == 0.0);
  CHECK((robust::sample_ball_error(n, delta, other) - first).norm() > 1e-3);
}

TEST_CASE("argument validation") {
  const auto fx = make_fixture(2, 1, 4.0, 1.0, ModulationSpec::psk(4), 79, 1);
  CHECK_THROWS_AS(robust::solve_powermin(fx.lift, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(robust::solve_balance(fx.lift, 0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(robust::worst_case(fx.lift, 0.1, Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
  rng::SubStream stream(1, 1, rng::Stream::csi_error);
  CHECK_THROWS_AS(robust::sample_ball_error(0, 0.1, stream), std::invalid_argument);
}
