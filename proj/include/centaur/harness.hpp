#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "centaur/centaur_server.hpp"
#include "centaur/ppm_init.hpp"
#include "centaur/rdp_accountant.hpp"
#include "centaur/synthetic_lrl.hpp"

namespace centaur {

enum class InitMode { ppm, spectral_oracle, random };

struct ProblemConfig {
  int d = 0, k = 0, n = 0, m = 0;
  double kappa = 1.0;
  double mu = 1.0;
  std::uint64_t seed = 0;
};

struct ServerSection {
  double p_g = 1.0;
  int t_g = 0;
  std::optional<double> eta_g;          // empty = "auto" (1 / 4 s_1^2)
  std::optional<double> sigma_g;        // at most one of sigma_g / eps_dp_target
  std::optional<double> eps_dp_target;
  double delta = 1e-5;
  std::optional<double> zeta_g;         // empty + !zeta_auto = infinite (non-private)
  bool zeta_auto = false;               // empirical quantile pilot
  AggregationMode aggregation = AggregationMode::qr_retraction;
};

struct ClientSection {
  int mbar = 1;
  ClientMode mode = ClientMode::lrl;
  int t_l = 1;
  double eta_l = 0.0;
  int head_epochs = 1;
};

struct InitSection {
  InitMode mode = InitMode::random;
  int t0 = 1;
  std::optional<int> power_iterations;  // empty = recipe value
  double sigma0 = 0.0;
  std::optional<double> zeta0;          // empty + !zeta0_auto = infinite
  bool zeta0_auto = false;
  int mbar0 = 1;
  double eps_i = 0.01;
  double eps0 = 0.2;
};

struct ExperimentConfig {
  ProblemConfig problem;
  ServerSection server;
  ClientSection client;
  InitSection init;
  int trials = 1;
  Adjacency adjacency = Adjacency::replace_one_user;
};

/// Parse / serialize the JSON run configuration. Parse errors carry the
/// offending field path. Round trips to an equal config.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// FNV-1a 64 hex digest over the canonical config dump.
std::string config_hash(const ExperimentConfig& cfg);

struct TraceRow {
  int round = 0;
  double dist = 0.0;
  double grad_norm = 0.0;
  int clip_count = 0;
  int active_clients = 0;
  double eps_dp_cum = 0.0;  // +inf for non-private runs
};

struct RunTrace {
  std::vector<TraceRow> rounds;
  double init_dist = 0.0;
  double final_dist = 0.0;
  double eps_dp_final = 0.0;
  std::int64_t wall_ms = 0;
  std::string config_digest;
};

/// Effective values after resolving "auto" fields, echoed into run.json.
struct ResolvedValues {
  double eta_g = 0.0;
  double sigma_g = 0.0;
  double zeta_g = 0.0;
  int init_power_iterations = 0;
  double zeta0 = 0.0;
};

struct ExperimentResult {
  std::vector<RunTrace> traces;  // one per trial
  ResolvedValues resolved;
};

/// Full experiment: generate the problem, resolve auto fields, initialize and
/// run each trial (trials execute on up to `threads` workers; all randomness is
/// pre-keyed, so results do not depend on the schedule).
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 1);

struct SweepRow {
  double swept_value = 0.0;
  double median_final_dist = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double eps_dp = 0.0;
  double sigma_g = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::string field_path;
  std::vector<SweepRow> rows;
  std::vector<ExperimentResult> cells;  // empty entry for failed cells
};

/// One run_experiment per swept value; failed cells are recorded, not fatal.
/// The field path uses dots ("server.sigma_g").
SweepResult run_sweep(const ExperimentConfig& cfg, const std::string& field_path,
                      const std::vector<double>& values, int threads = 1);

/// Reports: trace.csv, run.json and a dist-vs-round chart for plain runs, plus
/// tradeoff.csv and a dist-vs-eps chart when a sweep is given. Byte-stable for
/// a given (config, seed) regardless of thread count.
void emit_reports(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                  const ExperimentResult& result, const SweepResult* sweep = nullptr);

struct CalibrationReport {
  double c_zeta = 0.0;
  double c_t = 0.0;
  double measured_zeta_quantile = 0.0;
  double pilot_plateau = 0.0;
  int recipe_t_g = 0;
};

/// Fills the recipe's unspecified constants: c_zeta from the 99.9th-percentile
/// client-gradient norm at the initialization radius, c_T as the smallest grid
/// value whose recipe round count reaches the sigma_g plateau within 10%.
CalibrationReport calibrate_constants(const ExperimentConfig& cfg, int threads = 1);

/// `account` subcommand payload: closed-form and grid-optimized budgets for a
/// run descriptor {T_g, sigma_g, p_g, delta, init:{T0, L, sigma0}}.
nlohmann::json account_report(const nlohmann::json& descriptor);

/// Linear-interpolation quantile (same convention everywhere in the harness).
double quantile(std::vector<double> values, double q);

namespace detail {
std::uint64_t trial_seed(std::uint64_t master_seed, int trial);
void parallel_for_tasks(int n, int threads, const std::function<void(int)>& fn);
std::string format_double(double v);
}  // namespace detail

}  // namespace centaur
