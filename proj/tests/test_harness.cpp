#include <doctest.h>

#include <cibeam/harness.hpp>
#include <cibeam/model.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace cibeam;
using harness::Scheme;

namespace {

harness::ExperimentConfig small_config() {
  harness::ExperimentConfig cfg;
  cfg.schemes = {Scheme::ci_relaxed, Scheme::conventional};
  cfg.n_tx = {3};
  cfg.n_users = {2};
  cfg.modulation = ModulationSpec::psk(4);
  cfg.gamma_db = {5.0, 10.0};
  cfg.trials = 6;
  cfg.seed = 7;
  cfg.threads = 1;
  return cfg;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path temp_csv(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("scheme names round-trip") {
  for (const Scheme s : {Scheme::ci_strict, Scheme::ci_relaxed, Scheme::ci_dual_gp,
                         Scheme::conventional, Scheme::robust_ci}) {
    const auto back = harness::scheme_from_name(harness::to_string(s));
    REQUIRE(back.has_value());
    CHECK(*back == s);
  }
  CHECK(!harness::scheme_from_name("zero-forcing").has_value());
}

TEST_CASE("detector and bound helpers") {
  for (const int order : {2, 4, 8}) {
    const auto mod = ModulationSpec::psk(order);
    for (int m = 0; m < order; ++m) {
      CHECK(harness::detect_psk(std::polar(1.3, mod.symbol_phase(m)), mod) == m);
    }
  }
  CHECK(harness::q_function(0.0) == doctest::Approx(0.5));
  CHECK(harness::q_function(20.0) < 1e-80);
  // QPSK: sin(pi/4) sqrt(2 Gamma) = sqrt(Gamma), so the bound is 2 Q(sqrt(Gamma)).
  CHECK(harness::ser_bound(1.0, ModulationSpec::psk(4)) ==
        doctest::Approx(2.0 * harness::q_function(1.0)).epsilon(1e-12));
  CHECK(harness::ser_bound(4.0, ModulationSpec::psk(4)) ==
        doctest::Approx(2.0 * harness::q_function(2.0)).epsilon(1e-12));
  CHECK(harness::linear_from_db(10.0) == doctest::Approx(10.0));
  CHECK(harness::db_from_linear(100.0) == doctest::Approx(20.0));
}

TEST_CASE("power sweep: paired trials, aggregation, determinism") {
  const auto cfg = small_config();
  const auto result = harness::run_power_sweep(cfg);
  REQUIRE(result.rows.size() == 4);  // 2 gammas x 2 schemes
  REQUIRE(result.trial_log.size() == 4 * 6);

  for (const auto& row : result.rows) {
    REQUIRE(row.feasible_frac >= 0.0);
    REQUIRE(row.feasible_frac <= 1.0);
    double sum = 0.0;
    int feasible = 0;
    for (const auto& rec : result.trial_log) {
      if (rec.label != row.label || rec.gamma_db != row.gamma_db || !rec.feasible) continue;
      sum += rec.power;
      ++feasible;
    }
    CHECK(feasible == row.feasible_count);
    if (feasible > 0) {
      CHECK(row.mean_power == doctest::Approx(sum / feasible).epsilon(1e-15));
      CHECK(row.mean_power_db ==
            doctest::Approx(10.0 * std::log10(row.mean_power)).epsilon(1e-12));
    }
  }

  // Identical rows regardless of the worker count.
  auto threaded = cfg;
  threaded.threads = 3;
  const auto redo = harness::run_power_sweep(threaded);
  REQUIRE(redo.rows.size() == result.rows.size());
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    CHECK(redo.rows[i].mean_power == result.rows[i].mean_power);
    CHECK(redo.rows[i].feasible_frac == result.rows[i].feasible_frac);
  }

  // Byte-identical CSV on a rerun.
  const auto p1 = temp_csv("cibeam_test_power_a.csv");
  const auto p2 = temp_csv("cibeam_test_power_b.csv");
  harness::write_power_sweep_csv(result.rows, p1.string());
  harness::write_power_sweep_csv(harness::run_power_sweep(cfg).rows, p2.string());
  const std::string a = slurp(p1);
  CHECK(a == slurp(p2));
  CHECK(a.rfind("scheme,modulation,n_tx,n_users,gamma_db,trials,feasible_frac,"
                "mean_power,mean_power_db,mean_inst_power_db\n",
                0) == 0);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("power sweep: the sector never costs less than strict alignment") {
  auto cfg = small_config();
  cfg.schemes = {Scheme::ci_strict, Scheme::ci_relaxed};
  cfg.gamma_db = {8.0};
  cfg.trials = 8;
  const auto result = harness::run_power_sweep(cfg);
  REQUIRE(result.trial_log.size() == 16);
  for (int t = 0; t < 8; ++t) {
    const auto& strict = result.trial_log[static_cast<std::size_t>(t)];
    const auto& relaxed = result.trial_log[static_cast<std::size_t>(8 + t)];
    REQUIRE(strict.label == "ci-strict");
    REQUIRE(relaxed.label == "ci-relaxed");
    REQUIRE(strict.feasible);
    REQUIRE(relaxed.feasible);
    CHECK(relaxed.power <= strict.power * (1.0 + 1e-6));
  }
}

TEST_CASE("power sweep on bpsk matches the single-user closed form") {
  auto cfg = small_config();
  cfg.schemes = {Scheme::ci_relaxed, Scheme::ci_strict, Scheme::ci_dual_gp};
  cfg.modulation = ModulationSpec::psk(2);
  cfg.n_tx = {2};
  cfg.n_users = {1};
  cfg.gamma_db = {6.0};
  cfg.trials = 3;
  const auto result = harness::run_power_sweep(cfg);
  REQUIRE(result.rows.size() == 1);  // sector-only schemes skipped
  CHECK(result.warnings.size() == 2);
  CHECK(result.rows[0].feasible_frac == 1.0);

  const double gamma = harness::linear_from_db(6.0);
  const Scenario sc = Scenario::uniform(2, 1, gamma, 1.0, cfg.modulation, cfg.seed);
  for (const auto& rec : result.trial_log) {
    const auto ch = gen_channels(sc, rec.trial);
    CHECK(rec.power ==
          doctest::Approx(gamma / ch.h.row(0).squaredNorm()).epsilon(1e-6));
  }
}

TEST_CASE("feasibility sweep tracks the antenna count") {
  harness::ExperimentConfig cfg;
  cfg.schemes = {Scheme::ci_relaxed, Scheme::conventional};
  cfg.n_tx = {2, 4};
  cfg.n_users = {3};
  cfg.gamma_db = {10.0};
  cfg.trials = 12;
  cfg.seed = 5;
  const auto result = harness::run_feasibility_sweep(cfg);
  REQUIRE(result.rows.size() == 4);

  auto frac = [&](const char* label, int n) {
    for (const auto& row : result.rows) {
      if (row.label == label && row.n_tx == n) return row.feasible_frac;
    }
    REQUIRE(false);
    return -1.0;
  };
  CHECK(frac("conventional", 2) == 0.0);   // overloaded: almost surely infeasible
  CHECK(frac("conventional", 4) == 1.0);   // underloaded: almost surely feasible
  CHECK(frac("ci-relaxed", 4) == 1.0);
  CHECK(frac("ci-relaxed", 2) >= 0.0);

  const auto p = temp_csv("cibeam_test_feas.csv");
  harness::write_feasibility_csv(result.rows, p.string());
  CHECK(slurp(p).rfind("scheme,n_tx,n_users,gamma_db,trials,feasible_frac\n", 0) == 0);
  std::filesystem::remove(p);
}

TEST_CASE("balance sweep grows with the budget") {
  harness::ExperimentConfig cfg;
  cfg.schemes = {Scheme::ci_relaxed, Scheme::conventional};
  cfg.n_tx = {3};
  cfg.n_users = {2};
  cfg.power_budget_db = {0.0, 6.0, 12.0};
  cfg.trials = 4;
  cfg.seed = 11;
  const auto result = harness::run_balance_sweep(cfg);
  REQUIRE(result.rows.size() == 6);

  for (const char* label : {"ci-relaxed", "conventional"}) {
    double prev = -1e9;
    for (const auto& row : result.rows) {
      if (row.label != label) continue;
      REQUIRE(row.feasible_frac == 1.0);
      CHECK(row.mean_gamma_db >= prev - 1e-9);
      prev = row.mean_gamma_db;
    }
  }

  // The balance LP grows Gamma_t linearly in the budget: +6 dB of power is
  // +6 dB of balanced level for the CI scheme, trial by trial.
  for (int t = 0; t < 4; ++t) {
    const auto& lo = result.trial_log[static_cast<std::size_t>(t)];
    const auto& hi = result.trial_log[static_cast<std::size_t>(8 + t)];
    REQUIRE(lo.label == "ci-relaxed");
    REQUIRE(hi.label == "ci-relaxed");
    CHECK(hi.gamma == doctest::Approx(lo.gamma * harness::linear_from_db(6.0)).epsilon(1e-4));
  }

  const auto p = temp_csv("cibeam_test_balance.csv");
  harness::write_balance_csv(result.rows, p.string());
  CHECK(slurp(p).rfind("scheme,n_tx,n_users,power_budget_db,trials,mean_gamma_db\n", 0) ==
        0);
  std::filesystem::remove(p);
}

TEST_CASE("robust sweeps pair each point with a perfect-CSI reference") {
  harness::ExperimentConfig cfg;
  cfg.schemes = {Scheme::robust_ci};
  cfg.n_tx = {4};
  cfg.n_users = {2};
  cfg.gamma_db = {5.0};
  cfg.delta_sq = {0.0, 1e-4, 1e-2};
  cfg.trials = 5;
  cfg.seed = 13;
  const auto result = harness::run_robust_sweeps(cfg);
  // 3 delta points + 1 gamma point, two rows each.
  REQUIRE(result.rows.size() == 8);

  for (std::size_t i = 0; i < result.rows.size(); i += 2) {
    CHECK(result.rows[i].label == "robust-ci");
    CHECK(result.rows[i + 1].label == "ci-relaxed");
    CHECK(result.rows[i].delta_sq == result.rows[i + 1].delta_sq);
    CHECK(result.rows[i].gamma_db == result.rows[i + 1].gamma_db);
  }

  // Zero radius degenerates to the reference exactly; power rises with the
  // radius while everything stays feasible.
  CHECK(result.rows[0].delta_sq == 0.0);
  CHECK(result.rows[0].mean_power_db ==
        doctest::Approx(result.rows[1].mean_power_db).epsilon(1e-9));
  double prev = -1e9;
  for (std::size_t i = 0; i < 6; i += 2) {
    REQUIRE(result.rows[i].feasible_frac == 1.0);
    CHECK(result.rows[i].mean_power_db >= prev - 1e-9);
    prev = result.rows[i].mean_power_db;
  }

  const auto p = temp_csv("cibeam_test_robust.csv");
  harness::write_robust_csv(result.rows, p.string());
  CHECK(slurp(p).rfind(
            "scheme,n_tx,n_users,delta_sq,gamma_db,trials,feasible_frac,mean_power_db\n",
            0) == 0);
  std::filesystem::remove(p);
}

TEST_CASE("ser stays under the analytic bound and falls with the target") {
  harness::ExperimentConfig cfg;
  cfg.schemes = {Scheme::ci_relaxed};
  cfg.n_tx = {3};
  cfg.n_users = {2};
  cfg.gamma_db = {7.0, 10.0};
  cfg.trials = 2;
  cfg.seed = 17;
  const auto result = harness::run_ser_check(cfg);
  REQUIRE(result.rows.size() == 2);

  for (const auto& row : result.rows) {
    REQUIRE(row.feasible_frac == 1.0);
    CHECK(row.symbols == harness::kSerSymbolBudget);
    CHECK(row.bound ==
          doctest::Approx(harness::ser_bound(harness::linear_from_db(row.gamma_db),
                                             cfg.modulation)));
    const double sigma =
        std::sqrt(row.bound * (1.0 - row.bound) / static_cast<double>(row.symbols));
    CHECK(row.ser <= row.bound + 4.0 * sigma);
  }
  CHECK(result.rows[0].ser > result.rows[1].ser);
  CHECK(result.rows[0].ser > 0.0);

  const auto p = temp_csv("cibeam_test_ser.csv");
  harness::write_ser_csv(result.rows, p.string());
  CHECK(slurp(p).rfind("scheme,gamma_db,symbols,ser,bound\n", 0) == 0);
  std::filesystem::remove(p);
}

TEST_CASE("timing compares the three minimum-power routes") {
  harness::ExperimentConfig cfg;
  cfg.schemes = {Scheme::ci_relaxed};  // timing ignores the scheme list
  cfg.n_tx = {4};
  cfg.n_users = {2, 3};
  cfg.gamma_db = {10.0};
  cfg.trials = 5;
  cfg.seed = 19;
  const auto result = harness::run_timing(cfg);
  REQUIRE(result.rows.size() == 6);

  double multicast = 0.0;
  double broadcast = 0.0;
  double dual = 0.0;
  for (const auto& row : result.rows) {
    REQUIRE(row.median_us > 0.0);
    REQUIRE(row.p90_us >= row.median_us);
    if (row.n_users != 3) continue;
    if (row.label == "conic-multicast") multicast = row.median_us;
    if (row.label == "conic-broadcast") broadcast = row.median_us;
    if (row.label == "dual-gp") dual = row.median_us;
  }
  CHECK(multicast > 0.0);
  CHECK(dual < broadcast);

  const auto p = temp_csv("cibeam_test_timing.csv");
  harness::write_timing_csv(result.rows, p.string());
  CHECK(slurp(p).rfind("method,n_tx,n_users,trials,median_us,p90_us\n", 0) == 0);
  std::filesystem::remove(p);
}

TEST_CASE("configuration errors are rejected") {
  auto cfg = small_config();
  cfg.n_tx = {3, 4};
  CHECK_THROWS_AS(harness::run_power_sweep(cfg), std::invalid_argument);

  cfg = small_config();
  cfg.gamma_db.clear();
  CHECK_THROWS_AS(harness::run_power_sweep(cfg), std::invalid_argument);

  cfg = small_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(harness::run_power_sweep(cfg), std::invalid_argument);

  cfg = small_config();
  cfg.modulation = ModulationSpec::psk(2);
  CHECK_THROWS_AS(harness::run_timing(cfg), std::invalid_argument);

  cfg = small_config();
  cfg.power_budget_db.clear();
  CHECK_THROWS_AS(harness::run_balance_sweep(cfg), std::invalid_argument);

  cfg = small_config();
  cfg.schemes = {Scheme::robust_ci};  // wrong sweep for this scheme
  const auto result = harness::run_power_sweep(cfg);
  CHECK(result.rows.empty());
  REQUIRE(result.warnings.size() == 2);
  CHECK(result.warnings[0].find("robust-ci") != std::string::npos);
}
