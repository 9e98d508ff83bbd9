#include <doctest.h>

#include <cibeam/conventional.hpp>
#include <cibeam/model.hpp>
#include <duality_oracle.hpp>

#include <cmath>

using namespace cibeam;

TEST_CASE("single user reduces to matched transmission") {
  Scenario sc = Scenario::uniform(4, 1, 8.0, 0.5, ModulationSpec::psk(4), 11);
  const auto ch = gen_channels(sc, 0);
  const auto res = conventional::solve_powermin(ch, sc.sinr_targets, sc.noise_power);
  REQUIRE(res.status == conic::SolveStatus::optimal);

  const double hsq = ch.h.row(0).squaredNorm();
  CHECK(res.power == doctest::Approx(8.0 * 0.5 / hsq).epsilon(1e-6));
  const Eigen::VectorXcd ref =
      std::sqrt(8.0 * 0.5) * ch.h.row(0).conjugate().transpose() / hsq;
  CHECK((res.precoders.t.col(0) - ref).cwiseAbs().maxCoeff() < 1e-5);
  REQUIRE(res.sinr.size() == 1);
  CHECK(res.sinr[0] == doctest::Approx(8.0).epsilon(1e-5));
}

TEST_CASE("zero-forcing upper-bounds the optimum and floors are tight") {
  for (int trial = 0; trial < 6; ++trial) {
    Scenario sc = Scenario::uniform(4, 3, 6.0, 1.0, ModulationSpec::psk(4), 21);
    const auto ch = gen_channels(sc, trial);
    const auto res = conventional::solve_powermin(ch, sc.sinr_targets, sc.noise_power);
    REQUIRE(res.status == conic::SolveStatus::optimal);

    // Any interference-free design is feasible, so it bounds the optimum.
    const Eigen::MatrixXcd cross_inv =
        (ch.h * ch.h.transpose()).fullPivLu().inverse();
    const Eigen::MatrixXcd t_zf = ch.h.transpose() * cross_inv *
                                  (sc.sinr_targets * sc.noise_power)
                                      .cwiseSqrt()
                                      .asDiagonal()
                                      .toDenseMatrix()
                                      .cast<std::complex<double>>();
    PrecoderSet zf{t_zf};
    const auto zf_sinr = achieved_sinr(ch, zf, sc.noise_power);
    REQUIRE(zf_sinr.minCoeff() > 6.0 * (1.0 - 1e-9));
    CHECK(res.power <= t_zf.squaredNorm() * (1.0 + 1e-6));

    // At the optimum every floor binds.
    for (Eigen::Index i = 0; i < 3; ++i) {
      CHECK(res.sinr[i] == doctest::Approx(6.0).epsilon(2e-4));
    }
  }
}

TEST_CASE("conic route matches the virtual-uplink fixed point") {
  for (int trial = 0; trial < 6; ++trial) {
    Scenario sc = Scenario::uniform(4, 3, 5.0, 1.5, ModulationSpec::psk(4), 31);
    const auto ch = gen_channels(sc, trial);
    const auto res = conventional::solve_powermin(ch, sc.sinr_targets, sc.noise_power);
    const auto oracle =
        validation::duality_powermin(ch.h, sc.sinr_targets, sc.noise_power);
    REQUIRE(res.status == conic::SolveStatus::optimal);
    REQUIRE(oracle.feasible);
    CHECK(std::abs(res.power - oracle.power) < 1e-5 * (1.0 + oracle.power));

    // The oracle's own design must satisfy its floors tightly.
    PrecoderSet ot{oracle.t};
    const auto osinr = achieved_sinr(ch, ot, sc.noise_power);
    for (Eigen::Index i = 0; i < 3; ++i) {
      CHECK(osinr[i] == doctest::Approx(5.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("overloaded system agrees across routes") {
  // More users than antennas, moderate floors: still attainable.
  Scenario sc = Scenario::uniform(2, 3, 0.5, 1.0, ModulationSpec::psk(4), 41);
  const auto ch = gen_channels(sc, 1);
  const auto res = conventional::solve_powermin(ch, sc.sinr_targets, sc.noise_power);
  const auto oracle = validation::duality_powermin(ch.h, sc.sinr_targets, sc.noise_power);
  REQUIRE(oracle.feasible);
  REQUIRE(res.status == conic::SolveStatus::optimal);
  CHECK(std::abs(res.power - oracle.power) < 1e-5 * (1.0 + oracle.power));
}

TEST_CASE("unattainable floors are certified infeasible") {
  // One antenna, two users, floors of 2 each: the single-dimension limit
  // sum Gamma/(1+Gamma) < 1 is violated, so no design exists.
  Scenario sc = Scenario::uniform(1, 2, 2.0, 1.0, ModulationSpec::psk(4), 51);
  const auto ch = gen_channels(sc, 0);
  const auto oracle = validation::duality_powermin(ch.h, sc.sinr_targets, sc.noise_power);
  CHECK_FALSE(oracle.feasible);
  const auto res = conventional::solve_powermin(ch, sc.sinr_targets, sc.noise_power);
  CHECK(res.status == conic::SolveStatus::primal_infeasible);
}

TEST_CASE("balancing: single user closed form") {
  Scenario sc = Scenario::uniform(3, 1, 1.0, 0.5, ModulationSpec::psk(4), 61);
  const auto ch = gen_channels(sc, 0);
  const double budget = 2.0;
  const auto bal =
      conventional::solve_balance(ch, sc.sinr_targets, sc.noise_power, budget);
  REQUIRE(bal.feasible);
  const double expect = budget * ch.h.row(0).squaredNorm() / (1.0 * 0.5);
  CHECK(bal.scale == doctest::Approx(expect).epsilon(1e-4));
  CHECK(bal.power <= budget * (1.0 + 1e-9));
  CHECK(bal.sinr[0] == doctest::Approx(bal.scale).epsilon(1e-4));
}

TEST_CASE("balancing is maximal against the independent route") {
  Scenario sc = Scenario::uniform(4, 3, 1.0, 1.0, ModulationSpec::psk(4), 71);
  const auto ch = gen_channels(sc, 2);
  const double budget = 5.0;
  conventional::BalanceOptions opts;
  opts.rel_tol = 1e-6;
  const auto bal =
      conventional::solve_balance(ch, sc.sinr_targets, sc.noise_power, budget, opts);
  REQUIRE(bal.feasible);
  CHECK(bal.power <= budget * (1.0 + 1e-9));

  // The fixed-point oracle confirms: the found scale fits the budget, a
  // slightly larger one does not.
  const auto at = validation::duality_powermin(ch.h, sc.sinr_targets * bal.scale,
                                               sc.noise_power);
  REQUIRE(at.feasible);
  CHECK(at.power <= budget * (1.0 + 1e-4));
  const auto above = validation::duality_powermin(
      ch.h, sc.sinr_targets * (bal.scale * (1.0 + 1e-3)), sc.noise_power);
  if (above.feasible) CHECK(above.power > budget * (1.0 - 1e-4));

  // Served levels are balanced at scale * weight.
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(bal.sinr[i] == doctest::Approx(bal.scale).epsilon(2e-4));
  }
}
