#include "cibeam/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "cibeam/ci.hpp"
#include "cibeam/conventional.hpp"
#include "cibeam/robust.hpp"

namespace cibeam::harness {

namespace {

constexpr double kPi = 3.14159265358979323846;

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs body(trial) for every index in [0, trials). Trials are independent
/// and callers store results by index, so the schedule never shows in output.
void for_each_trial(int trials, int threads, const std::function<void(int)>& body) {
  threads = std::min(resolve_threads(threads), trials);
  if (threads <= 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::atomic<int> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        body(t);
      } catch (...) {
        const std::scoped_lock lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

int single_entry(const std::vector<int>& values, const char* what) {
  if (values.size() != 1) {
    throw std::invalid_argument(std::string(what) + " must hold exactly one value here");
  }
  return values.front();
}

void require_grid(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(what) + " grid must be nonempty");
}

void require_trials(const ExperimentConfig& config) {
  if (config.trials < 1) throw std::invalid_argument("trials must be at least 1");
}

std::string modulation_name(const ModulationSpec& modulation) {
  switch (modulation.order) {
    case 2: return "bpsk";
    case 4: return "qpsk";
    case 8: return "8psk";
    default: return std::to_string(modulation.order) + "psk";
  }
}

bool needs_sector(Scheme scheme) {
  return scheme == Scheme::ci_strict || scheme == Scheme::ci_dual_gp;
}

std::vector<Scheme> select_schemes(const ExperimentConfig& config,
                                   std::initializer_list<Scheme> allowed,
                                   const char* sweep,
                                   std::vector<std::string>& warnings) {
  std::vector<Scheme> run;
  for (const Scheme scheme : config.schemes) {
    if (std::find(run.begin(), run.end(), scheme) != run.end()) continue;
    if (std::find(allowed.begin(), allowed.end(), scheme) == allowed.end()) {
      warnings.push_back(std::string(sweep) + ": scheme " + to_string(scheme) +
                         " does not apply; skipped");
      continue;
    }
    if (config.modulation.is_bpsk() && needs_sector(scheme)) {
      warnings.push_back(std::string(sweep) + ": scheme " + to_string(scheme) +
                         " needs a sector modulation; skipped");
      continue;
    }
    run.push_back(scheme);
  }
  if (run.empty()) warnings.push_back(std::string(sweep) + ": no applicable schemes");
  return run;
}

Scenario make_scenario(const ExperimentConfig& config, int n_tx, int n_users,
                       double gamma_linear) {
  return Scenario::uniform(n_tx, n_users, gamma_linear, config.noise_power,
                           config.modulation, config.seed);
}

struct DesignOutcome {
  bool feasible = false;
  bool solver_failed = false;
  double power = kNaN;
  double inst_power = kNaN;
  Eigen::VectorXcd w;  // CI composed vector; empty for conventional
};

void classify(DesignOutcome& out, conic::SolveStatus status) {
  out.feasible = status == conic::SolveStatus::optimal;
  out.solver_failed = status != conic::SolveStatus::optimal &&
                      status != conic::SolveStatus::primal_infeasible;
}

/// One minimum-power design on the trial's realization. CI schemes report
/// ||w||^2, which equals the composed instantaneous power identically;
/// conventional reports sum_k ||t_k||^2 plus the symbol-realized power.
DesignOutcome design_powermin(Scheme scheme, const ExperimentConfig& config,
                              const ChannelSet& channels, const SymbolFrame& frame,
                              const Eigen::VectorXd& targets) {
  DesignOutcome out;
  if (scheme == Scheme::conventional) {
    const auto r = conventional::solve_powermin(channels, targets, config.noise_power);
    classify(out, r.status);
    if (out.feasible) {
      out.power = r.power;
      out.inst_power = instantaneous_power(r.precoders, frame);
    }
    return out;
  }

  const RotatedChannels rotated = rotate_channels(channels, frame);
  if (config.modulation.is_bpsk()) {
    const auto r = ci::solve_bpsk(rotated, targets, config.noise_power);
    classify(out, r.status);
    if (out.feasible) {
      out.power = out.inst_power = r.power;
      out.w = r.w;
    }
    return out;
  }

  const RealLifting lift =
      lift_real(rotated, config.modulation, targets, config.noise_power);
  if (scheme == Scheme::ci_dual_gp) {
    const auto r = ci::solve_relaxed_dual(lift);
    out.feasible = r.status == ci::DualStatus::converged;
    out.solver_failed = r.status == ci::DualStatus::iteration_limit;
    if (out.feasible) {
      out.power = out.inst_power = r.power;
      out.w = r.w;
    }
    return out;
  }
  const auto r = scheme == Scheme::ci_strict ? ci::solve_strict(lift)
                                             : ci::solve_relaxed(lift);
  classify(out, r.status);
  if (out.feasible) {
    out.power = out.inst_power = r.power;
    out.w = r.w;
  }
  return out;
}

struct BalanceOutcome {
  bool feasible = false;
  bool solver_failed = false;
  double gamma = kNaN;
  double power = kNaN;
};

BalanceOutcome design_balance(Scheme scheme, const ExperimentConfig& config,
                              const ChannelSet& channels, const SymbolFrame& frame,
                              double budget) {
  const Eigen::VectorXd weights = Eigen::VectorXd::Ones(channels.h.rows());
  BalanceOutcome out;
  if (scheme == Scheme::conventional) {
    const auto r =
        conventional::solve_balance(channels, weights, config.noise_power, budget);
    out.feasible = r.feasible;
    if (out.feasible) {
      out.gamma = r.scale;
      out.power = r.power;
    }
    return out;
  }
  const RotatedChannels rotated = rotate_channels(channels, frame);
  const auto r =
      config.modulation.is_bpsk()
          ? ci::solve_balance_bpsk(rotated, weights, config.noise_power, budget)
          : ci::solve_balance(
                lift_real(rotated, config.modulation, weights, config.noise_power),
                budget);
  out.feasible = r.status == conic::SolveStatus::optimal;
  out.solver_failed = !out.feasible;
  if (out.feasible) {
    out.gamma = r.gamma;
    out.power = r.power;
  }
  return out;
}

double elapsed_us(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

SweepRow base_row(const ExperimentConfig& config, const char* label, int n_tx,
                  int n_users) {
  SweepRow row;
  row.label = label;
  row.modulation = modulation_name(config.modulation);
  row.n_tx = n_tx;
  row.n_users = n_users;
  row.trials = config.trials;
  return row;
}

/// Feasible-count and feasible-only means; infeasible trials stay in the
/// fraction but never in an average.
void reduce_records(SweepRow& row, const std::vector<TrialRecord>& records) {
  double power_sum = 0.0;
  double inst_sum = 0.0;
  double gamma_sum = 0.0;
  int feasible = 0;
  for (const TrialRecord& r : records) {
    if (!r.feasible) continue;
    ++feasible;
    power_sum += r.power;
    inst_sum += r.inst_power;
    gamma_sum += r.gamma;
  }
  row.feasible_count = feasible;
  row.feasible_frac =
      static_cast<double>(feasible) / static_cast<double>(records.size());
  if (feasible > 0) {
    row.mean_power = power_sum / feasible;
    row.mean_power_db = db_from_linear(row.mean_power);
    row.mean_inst_power_db = db_from_linear(inst_sum / feasible);
    row.mean_gamma_db = db_from_linear(gamma_sum / feasible);
  }
}

void note_failures(SweepResult& result, const std::vector<TrialRecord>& records,
                   const char* sweep, const std::string& point) {
  int failures = 0;
  for (const TrialRecord& r : records) failures += r.solver_failed ? 1 : 0;
  if (failures > 0) {
    result.warnings.push_back(std::string(sweep) + ": " + point + ": " +
                              std::to_string(failures) +
                              " solver failure(s) marked infeasible");
  }
}

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_lines(const std::string& path, const std::string& header,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << header << '\n';
  for (const std::string& line : lines) out << line << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

double nearest_rank_p90(std::vector<double> sorted) {
  const std::size_t n = sorted.size();
  const std::size_t idx =
      static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n))) - 1;
  return sorted[std::min(idx, n - 1)];
}

double median_of(std::vector<double> sorted) {
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::ci_strict: return "ci-strict";
    case Scheme::ci_relaxed: return "ci-relaxed";
    case Scheme::ci_dual_gp: return "ci-dual-gp";
    case Scheme::conventional: return "conventional";
    case Scheme::robust_ci: return "robust-ci";
  }
  return "unknown";
}

std::optional<Scheme> scheme_from_name(std::string_view name) {
  for (const Scheme s : {Scheme::ci_strict, Scheme::ci_relaxed, Scheme::ci_dual_gp,
                         Scheme::conventional, Scheme::robust_ci}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

double linear_from_db(double db) { return std::pow(10.0, db / 10.0); }

double db_from_linear(double linear) { return 10.0 * std::log10(linear); }

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double ser_bound(double gamma_linear, const ModulationSpec& modulation) {
  return 2.0 * q_function(std::sin(modulation.sector_half_angle) *
                          std::sqrt(2.0 * gamma_linear));
}

int detect_psk(std::complex<double> received, const ModulationSpec& modulation) {
  const double turns =
      (std::arg(received) - modulation.phase_offset) * modulation.order / (2.0 * kPi);
  long index = std::lround(turns) % modulation.order;
  if (index < 0) index += modulation.order;
  return static_cast<int>(index);
}

SweepResult run_power_sweep(const ExperimentConfig& config) {
  require_trials(config);
  require_grid(!config.gamma_db.empty(), "gamma_db");
  const int n = single_entry(config.n_tx, "n_tx");
  const int k = single_entry(config.n_users, "n_users");

  SweepResult result;
  const auto schemes = select_schemes(
      config,
      {Scheme::ci_strict, Scheme::ci_relaxed, Scheme::ci_dual_gp, Scheme::conventional},
      "power sweep", result.warnings);

  for (const double gamma_db : config.gamma_db) {
    const double gamma = linear_from_db(gamma_db);
    const Scenario sc = make_scenario(config, n, k, gamma);
    for (const Scheme scheme : schemes) {
      std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));
      for_each_trial(config.trials, config.threads, [&](int trial) {
        const ChannelSet channels = gen_channels(sc, trial);
        const SymbolFrame frame = gen_symbols(sc, trial);
        const auto start = std::chrono::steady_clock::now();
        const DesignOutcome out =
            design_powermin(scheme, config, channels, frame, sc.sinr_targets);
        TrialRecord& rec = records[static_cast<std::size_t>(trial)];
        rec.label = to_string(scheme);
        rec.n_tx = n;
        rec.n_users = k;
        rec.gamma_db = gamma_db;
        rec.trial = trial;
        rec.feasible = out.feasible;
        rec.solver_failed = out.solver_failed;
        rec.power = out.power;
        rec.inst_power = out.inst_power;
        rec.solve_us = elapsed_us(start);
      });

      SweepRow row = base_row(config, to_string(scheme), n, k);
      row.gamma_db = gamma_db;
      reduce_records(row, records);
      note_failures(result, records,
                    "power sweep", std::string(to_string(scheme)) + " at " + fmt(gamma_db) + " dB");
      result.rows.push_back(std::move(row));
      result.trial_log.insert(result.trial_log.end(), records.begin(), records.end());
    }
  }
  return result;
}

SweepResult run_feasibility_sweep(const ExperimentConfig& config) {
  require_trials(config);
  require_grid(!config.n_tx.empty(), "n_tx");
  require_grid(!config.gamma_db.empty(), "gamma_db");
  const int k = single_entry(config.n_users, "n_users");
  const double gamma_db = config.gamma_db.front();
  const double gamma = linear_from_db(gamma_db);

  SweepResult result;
  const auto schemes = select_schemes(
      config, {Scheme::ci_strict, Scheme::ci_relaxed, Scheme::conventional},
      "feasibility sweep", result.warnings);

  for (const int n : config.n_tx) {
    const Scenario sc = make_scenario(config, n, k, gamma);
    for (const Scheme scheme : schemes) {
      std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));
      for_each_trial(config.trials, config.threads, [&](int trial) {
        const ChannelSet channels = gen_channels(sc, trial);
        const SymbolFrame frame = gen_symbols(sc, trial);
        const DesignOutcome out =
            design_powermin(scheme, config, channels, frame, sc.sinr_targets);
        TrialRecord& rec = records[static_cast<std::size_t>(trial)];
        rec.label = to_string(scheme);
        rec.n_tx = n;
        rec.n_users = k;
        rec.gamma_db = gamma_db;
        rec.trial = trial;
        rec.feasible = out.feasible;
        rec.solver_failed = out.solver_failed;
        rec.power = out.power;
        rec.inst_power = out.inst_power;
      });

      SweepRow row = base_row(config, to_string(scheme), n, k);
      row.gamma_db = gamma_db;
      reduce_records(row, records);
      note_failures(result, records, "feasibility sweep",
                    std::string(to_string(scheme)) + " at n_tx " + std::to_string(n));
      result.rows.push_back(std::move(row));
      result.trial_log.insert(result.trial_log.end(), records.begin(), records.end());
    }
  }
  return result;
}

SweepResult run_balance_sweep(const ExperimentConfig& config) {
  require_trials(config);
  require_grid(!config.power_budget_db.empty(), "power_budget_db");
  const int n = single_entry(config.n_tx, "n_tx");
  const int k = single_entry(config.n_users, "n_users");

  SweepResult result;
  const auto schemes =
      select_schemes(config, {Scheme::ci_relaxed, Scheme::conventional},
                     "balance sweep", result.warnings);
  // Realizations do not depend on the targets, so a unit-gamma scenario keys
  // the same paired streams at every budget.
  const Scenario sc = make_scenario(config, n, k, 1.0);

  for (const double budget_db : config.power_budget_db) {
    const double budget = linear_from_db(budget_db);
    for (const Scheme scheme : schemes) {
      std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));
      for_each_trial(config.trials, config.threads, [&](int trial) {
        const ChannelSet channels = gen_channels(sc, trial);
        const SymbolFrame frame = gen_symbols(sc, trial);
        const auto start = std::chrono::steady_clock::now();
        const BalanceOutcome out =
            design_balance(scheme, config, channels, frame, budget);
        TrialRecord& rec = records[static_cast<std::size_t>(trial)];
        rec.label = to_string(scheme);
        rec.n_tx = n;
        rec.n_users = k;
        rec.power_budget_db = budget_db;
        rec.trial = trial;
        rec.feasible = out.feasible;
        rec.solver_failed = out.solver_failed;
        rec.power = out.power;
        rec.gamma = out.gamma;
        rec.solve_us = elapsed_us(start);
      });

      SweepRow row = base_row(config, to_string(scheme), n, k);
      row.power_budget_db = budget_db;
      reduce_records(row, records);
      note_failures(result, records, "balance sweep",
                    std::string(to_string(scheme)) + " at " + fmt(budget_db) + " dB");
      result.rows.push_back(std::move(row));
      result.trial_log.insert(result.trial_log.end(), records.begin(), records.end());
    }
  }
  return result;
}

SweepResult run_robust_sweeps(const ExperimentConfig& config) {
  require_trials(config);
  require_grid(!config.gamma_db.empty(), "gamma_db");
  require_grid(!config.delta_sq.empty(), "delta_sq");
  const int n = single_entry(config.n_tx, "n_tx");
  const int k = single_entry(config.n_users, "n_users");

  SweepResult result;
  const auto schemes = select_schemes(config, {Scheme::robust_ci, Scheme::ci_relaxed},
                                      "robust sweeps", result.warnings);
  if (std::find(schemes.begin(), schemes.end(), Scheme::robust_ci) == schemes.end()) {
    return result;
  }

  // Power versus the error bound at the first Gamma, then versus Gamma at the
  // first error bound. Each row pair shares its trials: the robust design
  // sees the estimate, the reference sees the true channels.
  std::vector<std::pair<double, double>> points;
  for (const double d2 : config.delta_sq) points.emplace_back(d2, config.gamma_db.front());
  for (const double gamma_db : config.gamma_db) {
    points.emplace_back(config.delta_sq.front(), gamma_db);
  }

  for (const auto& [delta_sq, gamma_db] : points) {
    if (delta_sq < 0.0) throw std::invalid_argument("delta_sq must be nonnegative");
    const double delta = std::sqrt(delta_sq);
    const double gamma = linear_from_db(gamma_db);
    const Scenario sc = make_scenario(config, n, k, gamma);
    std::vector<TrialRecord> robust_records(static_cast<std::size_t>(config.trials));
    std::vector<TrialRecord> nominal_records(static_cast<std::size_t>(config.trials));

    for_each_trial(config.trials, config.threads, [&](int trial) {
      const ChannelSet channels = gen_channels(sc, trial);
      const SymbolFrame frame = gen_symbols(sc, trial);
      rng::SubStream errors(sc.seed, static_cast<std::uint64_t>(trial),
                            rng::Stream::csi_error);
      ChannelSet estimate = channels;
      for (Eigen::Index i = 0; i < estimate.h.rows(); ++i) {
        estimate.h.row(i) -= robust::sample_ball_error(n, delta, errors).transpose();
      }

      DesignOutcome rob;
      {
        const RotatedChannels rot_est = rotate_channels(estimate, frame);
        const auto r =
            config.modulation.is_bpsk()
                ? robust::solve_powermin_bpsk(rot_est, sc.sinr_targets,
                                              config.noise_power, delta)
                : robust::solve_powermin(lift_real(rot_est, config.modulation,
                                                   sc.sinr_targets, config.noise_power),
                                         delta);
        classify(rob, r.status);
        if (rob.feasible) rob.power = rob.inst_power = r.power;
      }
      const DesignOutcome nom =
          design_powermin(Scheme::ci_relaxed, config, channels, frame, sc.sinr_targets);

      auto fill = [&](TrialRecord& rec, const char* label, const DesignOutcome& out) {
        rec.label = label;
        rec.n_tx = n;
        rec.n_users = k;
        rec.gamma_db = gamma_db;
        rec.delta_sq = delta_sq;
        rec.trial = trial;
        rec.feasible = out.feasible;
        rec.solver_failed = out.solver_failed;
        rec.power = out.power;
        rec.inst_power = out.inst_power;
      };
      fill(robust_records[static_cast<std::size_t>(trial)], to_string(Scheme::robust_ci),
           rob);
      fill(nominal_records[static_cast<std::size_t>(trial)],
           to_string(Scheme::ci_relaxed), nom);
    });

    const std::string point = "delta_sq " + fmt(delta_sq) + ", " + fmt(gamma_db) + " dB";
    SweepRow row = base_row(config, to_string(Scheme::robust_ci), n, k);
    row.gamma_db = gamma_db;
    row.delta_sq = delta_sq;
    reduce_records(row, robust_records);
    note_failures(result, robust_records, "robust sweeps", "robust-ci at " + point);
    result.rows.push_back(std::move(row));

    SweepRow ref = base_row(config, to_string(Scheme::ci_relaxed), n, k);
    ref.gamma_db = gamma_db;
    ref.delta_sq = delta_sq;
    reduce_records(ref, nominal_records);
    note_failures(result, nominal_records, "robust sweeps", "ci-relaxed at " + point);
    result.rows.push_back(std::move(ref));

    result.trial_log.insert(result.trial_log.end(), robust_records.begin(),
                            robust_records.end());
    result.trial_log.insert(result.trial_log.end(), nominal_records.begin(),
                            nominal_records.end());
  }
  return result;
}

SweepResult run_ser_check(const ExperimentConfig& config) {
  require_trials(config);
  require_grid(!config.gamma_db.empty(), "gamma_db");
  const int n = single_entry(config.n_tx, "n_tx");
  const int k = single_entry(config.n_users, "n_users");
  const long long draws =
      std::max(1LL, kSerSymbolBudget / (static_cast<long long>(config.trials) * k));

  SweepResult result;
  const auto schemes = select_schemes(
      config, {Scheme::ci_strict, Scheme::ci_relaxed, Scheme::ci_dual_gp}, "ser check",
      result.warnings);

  for (const double gamma_db : config.gamma_db) {
    const double gamma = linear_from_db(gamma_db);
    const Scenario sc = make_scenario(config, n, k, gamma);
    for (const Scheme scheme : schemes) {
      std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));
      std::vector<long long> errors(static_cast<std::size_t>(config.trials), 0);
      std::vector<long long> counted(static_cast<std::size_t>(config.trials), 0);

      for_each_trial(config.trials, config.threads, [&](int trial) {
        const ChannelSet channels = gen_channels(sc, trial);
        const SymbolFrame frame = gen_symbols(sc, trial);
        const DesignOutcome out =
            design_powermin(scheme, config, channels, frame, sc.sinr_targets);
        TrialRecord& rec = records[static_cast<std::size_t>(trial)];
        rec.label = to_string(scheme);
        rec.n_tx = n;
        rec.n_users = k;
        rec.gamma_db = gamma_db;
        rec.trial = trial;
        rec.feasible = out.feasible;
        rec.solver_failed = out.solver_failed;
        rec.power = out.power;
        rec.inst_power = out.inst_power;
        if (!out.feasible) return;

        const RotatedChannels rotated = rotate_channels(channels, frame);
        Eigen::VectorXcd noiseless(k);
        for (Eigen::Index i = 0; i < k; ++i) {
          noiseless[i] =
              (rotated.h.row(i) * out.w).value() * std::polar(1.0, frame.phases[i]);
        }
        const double noise_scale = std::sqrt(config.noise_power);
        rng::SubStream noise(sc.seed, static_cast<std::uint64_t>(trial),
                             rng::Stream::noise);
        long long bad = 0;
        for (long long d = 0; d < draws; ++d) {
          for (Eigen::Index i = 0; i < k; ++i) {
            const std::complex<double> y =
                noiseless[i] + noise_scale * noise.complex_normal();
            bad += detect_psk(y, config.modulation) != frame.indices[static_cast<std::size_t>(i)];
          }
        }
        errors[static_cast<std::size_t>(trial)] = bad;
        counted[static_cast<std::size_t>(trial)] = draws * k;
      });

      long long total_errors = 0;
      long long total_symbols = 0;
      for (std::size_t t = 0; t < records.size(); ++t) {
        total_errors += errors[t];
        total_symbols += counted[t];
      }

      SweepRow row = base_row(config, to_string(scheme), n, k);
      row.gamma_db = gamma_db;
      reduce_records(row, records);
      row.symbols = total_symbols;
      row.ser = total_symbols > 0
                    ? static_cast<double>(total_errors) / static_cast<double>(total_symbols)
                    : kNaN;
      row.bound = ser_bound(gamma, config.modulation);
      note_failures(result, records, "ser check",
                    std::string(to_string(scheme)) + " at " + fmt(gamma_db) + " dB");
      result.rows.push_back(std::move(row));
      result.trial_log.insert(result.trial_log.end(), records.begin(), records.end());
    }
  }
  return result;
}

SweepResult run_timing(const ExperimentConfig& config) {
  require_trials(config);
  require_grid(!config.n_users.empty(), "n_users");
  require_grid(!config.gamma_db.empty(), "gamma_db");
  if (config.modulation.is_bpsk()) {
    throw std::invalid_argument("timing compares sector-constraint routes; use qpsk or 8psk");
  }
  const int n = single_entry(config.n_tx, "n_tx");
  const double gamma = linear_from_db(config.gamma_db.front());

  SweepResult result;
  constexpr const char* kMethods[3] = {"conic-multicast", "conic-broadcast", "dual-gp"};

  for (const int k : config.n_users) {
    const Scenario sc = make_scenario(config, n, k, gamma);
    std::vector<RealLifting> lifts;
    std::vector<SymbolFrame> frames;
    lifts.reserve(static_cast<std::size_t>(config.trials));
    frames.reserve(static_cast<std::size_t>(config.trials));
    for (int trial = 0; trial < config.trials; ++trial) {
      const ChannelSet channels = gen_channels(sc, trial);
      SymbolFrame frame = gen_symbols(sc, trial);
      lifts.push_back(lift_real(rotate_channels(channels, frame), config.modulation,
                                sc.sinr_targets, config.noise_power));
      frames.push_back(std::move(frame));
    }

    auto run_method = [&](int method, int trial) {
      switch (method) {
        case 0: ci::solve_relaxed(lifts[static_cast<std::size_t>(trial)]); break;
        case 1:
          ci::solve_per_user_relaxed(lifts[static_cast<std::size_t>(trial)],
                                     frames[static_cast<std::size_t>(trial)]);
          break;
        default: ci::solve_relaxed_dual(lifts[static_cast<std::size_t>(trial)]); break;
      }
    };

    for (int method = 0; method < 3; ++method) {
      run_method(method, 0);  // warmup: touch code paths and allocators once
      std::vector<double> samples(static_cast<std::size_t>(config.trials));
      for (int trial = 0; trial < config.trials; ++trial) {
        const auto start = std::chrono::steady_clock::now();
        run_method(method, trial);
        samples[static_cast<std::size_t>(trial)] = elapsed_us(start);

        TrialRecord rec;
        rec.label = kMethods[method];
        rec.n_tx = n;
        rec.n_users = k;
        rec.gamma_db = config.gamma_db.front();
        rec.trial = trial;
        rec.feasible = true;
        rec.solve_us = samples[static_cast<std::size_t>(trial)];
        result.trial_log.push_back(std::move(rec));
      }
      std::sort(samples.begin(), samples.end());
      SweepRow row = base_row(config, kMethods[method], n, k);
      row.median_us = median_of(samples);
      row.p90_us = nearest_rank_p90(samples);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

void write_power_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const SweepRow& r : rows) {
    lines.push_back(r.label + "," + r.modulation + "," + std::to_string(r.n_tx) + "," +
                    std::to_string(r.n_users) + "," + fmt(r.gamma_db) + "," +
                    std::to_string(r.trials) + "," + fmt(r.feasible_frac) + "," +
                    fmt(r.mean_power) + "," + fmt(r.mean_power_db) + "," +
                    fmt(r.mean_inst_power_db));
  }
  write_lines(path,
              "scheme,modulation,n_tx,n_users,gamma_db,trials,feasible_frac,mean_power,"
              "mean_power_db,mean_inst_power_db",
              lines);
}

void write_feasibility_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const SweepRow& r : rows) {
    lines.push_back(r.label + "," + std::to_string(r.n_tx) + "," +
                    std::to_string(r.n_users) + "," + fmt(r.gamma_db) + "," +
                    std::to_string(r.trials) + "," + fmt(r.feasible_frac));
  }
  write_lines(path, "scheme,n_tx,n_users,gamma_db,trials,feasible_frac", lines);
}

void write_balance_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const SweepRow& r : rows) {
    lines.push_back(r.label + "," + std::to_string(r.n_tx) + "," +
                    std::to_string(r.n_users) + "," + fmt(r.power_budget_db) + "," +
                    std::to_string(r.trials) + "," + fmt(r.mean_gamma_db));
  }
  write_lines(path, "scheme,n_tx,n_users,power_budget_db,trials,mean_gamma_db", lines);
}

void write_robust_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const SweepRow& r : rows) {
    lines.push_back(r.label + "," + std::to_string(r.n_tx) + "," +
                    std::to_string(r.n_users) + "," + fmt(r.delta_sq) + "," +
                    fmt(r.gamma_db) + "," + std::to_string(r.trials) + "," +
                    fmt(r.feasible_frac) + "," + fmt(r.mean_power_db));
  }
  write_lines(path,
              "scheme,n_tx,n_users,delta_sq,gamma_db,trials,feasible_frac,mean_power_db",
              lines);
}

void write_ser_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const SweepRow& r : rows) {
    lines.push_back(r.label + "," + fmt(r.gamma_db) + "," + std::to_string(r.symbols) +
                    "," + fmt(r.ser) + "," + fmt(r.bound));
  }
  write_lines(path, "scheme,gamma_db,symbols,ser,bound", lines);
}

void write_timing_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const SweepRow& r : rows) {
    lines.push_back(r.label + "," + std::to_string(r.n_tx) + "," +
                    std::to_string(r.n_users) + "," + std::to_string(r.trials) + "," +
                    fmt(r.median_us) + "," + fmt(r.p90_us));
  }
  write_lines(path, "method,n_tx,n_users,trials,median_us,p90_us", lines);
}

}  // namespace cibeam::harness
