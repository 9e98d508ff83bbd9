#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cibeam/model.hpp"

namespace cibeam::harness {

/// Design schemes a sweep can exercise. Names (and their CSV spelling) are
/// ci-strict, ci-relaxed, ci-dual-gp, conventional, robust-ci.
enum class Scheme { ci_strict, ci_relaxed, ci_dual_gp, conventional, robust_ci };

const char* to_string(Scheme scheme);
std::optional<Scheme> scheme_from_name(std::string_view name);

/// One Monte Carlo experiment. n_tx and n_users are grids only where the
/// sweep calls for one (feasibility sweeps vary n_tx, timing varies n_users);
/// every other sweep requires a single entry. threads = 0 picks the hardware
/// concurrency; results are reduced by trial index, so the thread count never
/// changes any output.
struct ExperimentConfig {
  std::vector<Scheme> schemes;
  std::vector<int> n_tx;
  std::vector<int> n_users;
  ModulationSpec modulation = ModulationSpec::psk(4);
  double noise_power = 1.0;
  std::vector<double> gamma_db;
  std::vector<double> power_budget_db;
  std::vector<double> delta_sq;
  int trials = 500;
  std::uint64_t seed = 1;
  int threads = 0;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One aggregated CSV row. label is the scheme name (or timing method);
/// fields that a sweep does not produce stay NaN / zero and are simply not
/// emitted by its writer. Averages cover feasible trials only.
struct SweepRow {
  std::string label;
  std::string modulation;
  int n_tx = 0;
  int n_users = 0;
  double gamma_db = kNaN;
  double power_budget_db = kNaN;
  double delta_sq = kNaN;
  int trials = 0;
  int feasible_count = 0;
  double feasible_frac = kNaN;
  double mean_power = kNaN;
  double mean_power_db = kNaN;
  double mean_inst_power_db = kNaN;
  double mean_gamma_db = kNaN;
  long long symbols = 0;
  double ser = kNaN;
  double bound = kNaN;
  double median_us = kNaN;
  double p90_us = kNaN;
};

/// Raw per-trial outcome kept alongside the rows so any aggregate can be
/// recomputed (and audited) from first principles.
struct TrialRecord {
  std::string label;
  int n_tx = 0;
  int n_users = 0;
  double gamma_db = kNaN;
  double power_budget_db = kNaN;
  double delta_sq = kNaN;
  int trial = 0;
  bool feasible = false;
  bool solver_failed = false;  // no certificate either way; counted infeasible
  double power = kNaN;         // scheme's reported objective, linear
  double inst_power = kNaN;  // symbol-realized ||sum_k t_k d_k||^2
  double gamma = kNaN;       // balanced level, linear
  double solve_us = kNaN;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<TrialRecord> trial_log;
  std::vector<std::string> warnings;  // skipped scheme/modulation combinations
};

/// Minimum-power designs over a Gamma grid. Every scheme at a sweep point
/// consumes the identical (channel, symbol) realizations keyed by
/// (seed, trial). Conventional reports sum_k ||t_k||^2, CI schemes ||w||^2;
/// both additionally log the symbol-realized instantaneous power.
SweepResult run_power_sweep(const ExperimentConfig& config);

/// Fraction of trials with a feasible design as n_tx varies at fixed K and
/// fixed Gamma (the first gamma_db entry). CI feasibility comes from the
/// direct conic path, which is certificate-backed on both sides.
SweepResult run_feasibility_sweep(const ExperimentConfig& config);

/// Max-min balanced level versus the power budget grid, unit weights.
SweepResult run_balance_sweep(const ExperimentConfig& config);

/// Worst-case designs under channel uncertainty: power versus the delta^2
/// grid at the first gamma_db entry, then versus the gamma_db grid at the
/// first delta_sq entry. Each trial draws the true channels, then one error
/// per user uniform in the delta-ball; the design sees only the estimate.
/// Rows for a perfect-CSI reference (label ci-relaxed) designed on the true
/// channels accompany every robust-ci row, on the same trials.
SweepResult run_robust_sweeps(const ExperimentConfig& config);

/// Symbol error rate of the returned designs under CN(0, N0) receive noise
/// and nearest-phase detection, against the analytic union bound
/// 2 Q(sin(theta) sqrt(2 Gamma)). The per-row symbol count is the fixed
/// budget below split evenly across trials and users.
SweepResult run_ser_check(const ExperimentConfig& config);

constexpr long long kSerSymbolBudget = 1'000'000;

/// Wall-clock comparison of the minimum-power routes on identical instances:
/// single-vector conic form, per-user-precoder conic form, and the projected
/// gradient on the dual. n_users is the grid; runs strictly serially.
SweepResult run_timing(const ExperimentConfig& config);

/// CSV emission, one fixed header per sweep kind; floating values carry nine
/// significant digits, so identical rows serialize byte-identically.
void write_power_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_feasibility_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_balance_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_robust_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_ser_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_timing_csv(const std::vector<SweepRow>& rows, const std::string& path);

double linear_from_db(double db);
double db_from_linear(double linear);

/// Upper tail of the standard normal.
double q_function(double x);

/// 2 Q(sin(theta) sqrt(2 Gamma)): union bound from the guaranteed distance
/// sqrt(Gamma N0) sin(theta) between the receive point and either decision
/// ray, under noise of variance N0/2 per axis.
double ser_bound(double gamma_linear, const ModulationSpec& modulation);

/// Nearest-constellation-phase detector; returns the symbol index.
int detect_psk(std::complex<double> received, const ModulationSpec& modulation);

}  // namespace cibeam::harness
