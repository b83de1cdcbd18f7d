#include "centaur/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "centaur/errors.hpp"
#include "centaur/parallel.hpp"

namespace centaur {

namespace {

constexpr std::uint64_t kTrialTag = 0x747269616C73ULL;       // per-trial seeds
constexpr std::uint64_t kZetaPilotTag = 0x7A657461ULL;       // quantile pilot
constexpr std::uint64_t kCalibrationTag = 0x63616C6962ULL;   // constant calibration

const nlohmann::json& require_field(const nlohmann::json& j, const std::string& section,
                                    const std::string& key) {
  if (!j.contains(key)) throw ConfigError(section + "." + key + ": missing");
  return j.at(key);
}

double number_field(const nlohmann::json& j, const std::string& section,
                    const std::string& key) {
  const auto& v = require_field(j, section, key);
  if (!v.is_number()) throw ConfigError(section + "." + key + ": expected a number");
  return v.get<double>();
}

int int_field(const nlohmann::json& j, const std::string& section, const std::string& key) {
  const auto& v = require_field(j, section, key);
  if (!v.is_number_integer()) throw ConfigError(section + "." + key + ": expected an integer");
  return v.get<int>();
}

// number | "auto" | null (missing and null both mean "unset").
struct AutoField {
  std::optional<double> value;
  bool is_auto = false;
};

AutoField auto_field(const nlohmann::json& j, const std::string& section,
                     const std::string& key) {
  AutoField out;
  if (!j.contains(key) || j.at(key).is_null()) return out;
  const auto& v = j.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() != "auto")
      throw ConfigError(section + "." + key + ": expected a number, null, or \"auto\"");
    out.is_auto = true;
    return out;
  }
  if (!v.is_number()) throw ConfigError(section + "." + key + ": expected a number");
  out.value = v.get<double>();
  return out;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");

  const auto& problem = require_field(j, "config", "problem");
  cfg.problem.d = int_field(problem, "problem", "d");
  cfg.problem.k = int_field(problem, "problem", "k");
  cfg.problem.n = int_field(problem, "problem", "n");
  cfg.problem.m = int_field(problem, "problem", "m");
  cfg.problem.kappa = number_field(problem, "problem", "kappa");
  cfg.problem.mu = number_field(problem, "problem", "mu");
  const auto& seed = require_field(problem, "problem", "seed");
  if (!seed.is_number_unsigned() && !seed.is_number_integer())
    throw ConfigError("problem.seed: expected an integer");
  cfg.problem.seed = seed.get<std::uint64_t>();
  if (cfg.problem.d < 1 || cfg.problem.k < 1 || cfg.problem.n < 1 || cfg.problem.m < 2)
    throw ConfigError("problem: need d, k, n >= 1 and m >= 2");
  if (cfg.problem.k > cfg.problem.d) throw ConfigError("problem.k: must be <= d");
  if (cfg.problem.k > cfg.problem.n) throw ConfigError("problem.k: must be <= n");
  if (!(cfg.problem.kappa >= 1.0)) throw ConfigError("problem.kappa: must be >= 1");
  if (!(cfg.problem.mu > 0.0)) throw ConfigError("problem.mu: must be > 0");

  const auto& server = require_field(j, "config", "server");
  cfg.server.p_g = number_field(server, "server", "p_g");
  if (!(cfg.server.p_g >= 0.0 && cfg.server.p_g <= 1.0))
    throw ConfigError("server.p_g: must lie in [0, 1]");
  cfg.server.t_g = int_field(server, "server", "T_g");
  if (cfg.server.t_g < 0) throw ConfigError("server.T_g: must be >= 0");
  const AutoField eta = auto_field(server, "server", "eta_g");
  if (!eta.is_auto && !eta.value)
    throw ConfigError("server.eta_g: required (number or \"auto\")");
  cfg.server.eta_g = eta.value;
  if (cfg.server.eta_g && !(*cfg.server.eta_g > 0.0))
    throw ConfigError("server.eta_g: must be > 0");

  const AutoField sigma = auto_field(server, "server", "sigma_g");
  if (sigma.is_auto) throw ConfigError("server.sigma_g: \"auto\" is not a valid value");
  cfg.server.sigma_g = sigma.value;
  if (cfg.server.sigma_g && !(*cfg.server.sigma_g >= 0.0))
    throw ConfigError("server.sigma_g: must be >= 0");
  const AutoField eps_target = auto_field(server, "server", "eps_dp_target");
  if (eps_target.is_auto)
    throw ConfigError("server.eps_dp_target: \"auto\" is not a valid value");
  cfg.server.eps_dp_target = eps_target.value;
  if (cfg.server.eps_dp_target && !(*cfg.server.eps_dp_target > 0.0))
    throw ConfigError("server.eps_dp_target: must be > 0");
  if (cfg.server.sigma_g && cfg.server.eps_dp_target)
    throw ConfigError("server.sigma_g: set either sigma_g or eps_dp_target, not both");

  cfg.server.delta = number_field(server, "server", "delta");
  if (!(cfg.server.delta > 0.0 && cfg.server.delta < 1.0))
    throw ConfigError("server.delta: must lie in (0, 1)");
  const AutoField zeta = auto_field(server, "server", "zeta_g");
  cfg.server.zeta_auto = zeta.is_auto;
  cfg.server.zeta_g = zeta.value;
  if (cfg.server.zeta_g && !(*cfg.server.zeta_g > 0.0))
    throw ConfigError("server.zeta_g: must be > 0");
  const std::string aggregation =
      require_field(server, "server", "aggregation").get<std::string>();
  if (aggregation == "qr_retraction")
    cfg.server.aggregation = AggregationMode::qr_retraction;
  else if (aggregation == "additive")
    cfg.server.aggregation = AggregationMode::additive;
  else
    throw ConfigError("server.aggregation: expected \"qr_retraction\" or \"additive\"");

  const auto& client = require_field(j, "config", "client");
  cfg.client.mbar = int_field(client, "client", "mbar");
  if (cfg.client.mbar < 1) throw ConfigError("client.mbar: must be >= 1");
  const std::string mode = require_field(client, "client", "mode").get<std::string>();
  if (mode == "lrl")
    cfg.client.mode = ClientMode::lrl;
  else if (mode == "general")
    cfg.client.mode = ClientMode::general;
  else
    throw ConfigError("client.mode: expected \"lrl\" or \"general\"");
  cfg.client.t_l = client.contains("T_l") ? int_field(client, "client", "T_l") : 1;
  if (cfg.client.t_l < 0) throw ConfigError("client.T_l: must be >= 0");
  cfg.client.eta_l =
      client.contains("eta_l") ? number_field(client, "client", "eta_l") : 0.0;
  cfg.client.head_epochs =
      client.contains("head_epochs") ? int_field(client, "client", "head_epochs") : 1;
  if (cfg.client.head_epochs < 0) throw ConfigError("client.head_epochs: must be >= 0");
  if (cfg.client.mode == ClientMode::general && cfg.client.t_l > 0 &&
      !(cfg.client.eta_l > 0.0))
    throw ConfigError("client.eta_l: must be > 0 for general mode with T_l > 0");

  const auto& init = require_field(j, "config", "init");
  const std::string init_mode = require_field(init, "init", "mode").get<std::string>();
  if (init_mode == "ppm")
    cfg.init.mode = InitMode::ppm;
  else if (init_mode == "spectral_oracle")
    cfg.init.mode = InitMode::spectral_oracle;
  else if (init_mode == "random")
    cfg.init.mode = InitMode::random;
  else
    throw ConfigError("init.mode: expected \"ppm\", \"spectral_oracle\", or \"random\"");
  cfg.init.t0 = init.contains("T0") ? int_field(init, "init", "T0") : 1;
  if (cfg.init.t0 < 1) throw ConfigError("init.T0: must be >= 1");
  const AutoField l_field = auto_field(init, "init", "L");
  if (l_field.value) {
    cfg.init.power_iterations = static_cast<int>(*l_field.value);
    if (*cfg.init.power_iterations < 1) throw ConfigError("init.L: must be >= 1");
  }
  cfg.init.sigma0 = init.contains("sigma0") ? number_field(init, "init", "sigma0") : 0.0;
  if (!(cfg.init.sigma0 >= 0.0)) throw ConfigError("init.sigma0: must be >= 0");
  const AutoField zeta0 = auto_field(init, "init", "zeta0");
  cfg.init.zeta0_auto = zeta0.is_auto;
  cfg.init.zeta0 = zeta0.value;
  cfg.init.mbar0 = init.contains("mbar0") ? int_field(init, "init", "mbar0") : 1;
  if (cfg.init.mbar0 < 1) throw ConfigError("init.mbar0: must be >= 1");
  if (cfg.init.mbar0 > cfg.problem.m) throw ConfigError("init.mbar0: must be <= problem.m");
  cfg.init.eps_i = init.contains("eps_i") ? number_field(init, "init", "eps_i") : 0.01;
  if (!(cfg.init.eps_i > 0.0 && cfg.init.eps_i < 1.0))
    throw ConfigError("init.eps_i: must lie in (0, 1)");
  cfg.init.eps0 = init.contains("eps0") ? number_field(init, "init", "eps0") : 0.2;
  if (!(cfg.init.eps0 >= 0.0 && cfg.init.eps0 < 1.0))
    throw ConfigError("init.eps0: must lie in [0, 1)");

  cfg.trials = j.contains("trials") ? int_field(j, "config", "trials") : 1;
  if (cfg.trials < 1) throw ConfigError("trials: must be >= 1");

  if (j.contains("adjacency")) {
    const std::string adj = j.at("adjacency").get<std::string>();
    if (adj == "replace_one_user")
      cfg.adjacency = Adjacency::replace_one_user;
    else if (adj == "add_remove_user")
      cfg.adjacency = Adjacency::add_remove_user;
    else
      throw ConfigError("adjacency: expected \"replace_one_user\" or \"add_remove_user\"");
  }

  if (2 * cfg.client.mbar > cfg.problem.m && cfg.client.mode == ClientMode::lrl)
    throw ConfigError("client.mbar: lrl mode needs 2 * mbar <= problem.m");
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json server{{"p_g", cfg.server.p_g},
                        {"T_g", cfg.server.t_g},
                        {"delta", cfg.server.delta},
                        {"aggregation", cfg.server.aggregation == AggregationMode::qr_retraction
                                            ? "qr_retraction"
                                            : "additive"}};
  server["eta_g"] = cfg.server.eta_g ? nlohmann::json(*cfg.server.eta_g)
                                     : nlohmann::json("auto");
  server["sigma_g"] =
      cfg.server.sigma_g ? nlohmann::json(*cfg.server.sigma_g) : nlohmann::json();
  server["eps_dp_target"] = cfg.server.eps_dp_target
                                ? nlohmann::json(*cfg.server.eps_dp_target)
                                : nlohmann::json();
  server["zeta_g"] = cfg.server.zeta_auto
                         ? nlohmann::json("auto")
                         : (cfg.server.zeta_g ? nlohmann::json(*cfg.server.zeta_g)
                                              : nlohmann::json());
  nlohmann::json init{{"mode", cfg.init.mode == InitMode::ppm
                                   ? "ppm"
                                   : (cfg.init.mode == InitMode::spectral_oracle
                                          ? "spectral_oracle"
                                          : "random")},
                      {"T0", cfg.init.t0},
                      {"sigma0", cfg.init.sigma0},
                      {"mbar0", cfg.init.mbar0},
                      {"eps_i", cfg.init.eps_i},
                      {"eps0", cfg.init.eps0}};
  init["L"] = cfg.init.power_iterations ? nlohmann::json(*cfg.init.power_iterations)
                                        : nlohmann::json("auto");
  init["zeta0"] = cfg.init.zeta0_auto
                      ? nlohmann::json("auto")
                      : (cfg.init.zeta0 ? nlohmann::json(*cfg.init.zeta0)
                                        : nlohmann::json());
  return nlohmann::json{
      {"problem",
       {{"d", cfg.problem.d},
        {"k", cfg.problem.k},
        {"n", cfg.problem.n},
        {"m", cfg.problem.m},
        {"kappa", cfg.problem.kappa},
        {"mu", cfg.problem.mu},
        {"seed", cfg.problem.seed}}},
      {"server", server},
      {"client",
       {{"mbar", cfg.client.mbar},
        {"mode", cfg.client.mode == ClientMode::lrl ? "lrl" : "general"},
        {"T_l", cfg.client.t_l},
        {"eta_l", cfg.client.eta_l},
        {"head_epochs", cfg.client.head_epochs}}},
      {"init", init},
      {"trials", cfg.trials},
      {"adjacency", cfg.adjacency == Adjacency::replace_one_user ? "replace_one_user"
                                                                 : "add_remove_user"}};
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return config_to_json(a) == config_to_json(b);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string dump = config_to_json(cfg).dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace detail {

std::uint64_t trial_seed(std::uint64_t master_seed, int trial) {
  return absorb(absorb(master_seed, kTrialTag), static_cast<std::uint64_t>(trial));
}

void parallel_for_tasks(int n, int threads, const std::function<void(int)>& fn) {
  parallel_for(n, threads, fn);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace detail

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ParameterError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(values.size() - 1, lo + 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

namespace {

struct ResolvedExperiment {
  FrlProblem problem;
  ServerConfig server;
  ClientConfig client;
  ResolvedValues values;
};

int recipe_power_iterations(const GroundTruth& truth, int d, int k, double eps_trial) {
  const double sk2 = truth.singular_values(k - 1) * truth.singular_values(k - 1);
  const double sum_s2 = truth.singular_values.squaredNorm();
  const double ratio = (sk2 + sum_s2) / sk2;
  return std::max(1, static_cast<int>(std::ceil(
                         ratio * std::log(static_cast<double>(k) * d / eps_trial))));
}

double resolve_zeta0_quantile(const FrlProblem& problem, int mbar0, std::uint64_t seed) {
  // Quantile of local second-moment norms over fresh subsets at a few random
  // starting bases.
  std::vector<double> norms;
  RandomStream stream = RandomStream::from_key(seed);
  for (int rep = 0; rep < 10; ++rep) {
    OrthonormalBasis x = OrthonormalBasis::haar(problem.dims.d, problem.dims.k, stream);
    for (int i = 0; i < problem.dims.n; ++i) {
      const std::vector<int> idx =
          sample_without_replacement(problem.dims.m, mbar0, stream);
      norms.push_back(local_second_moment(problem.clients[i], idx, x.data()).norm());
    }
  }
  return quantile(std::move(norms), 0.999);
}

ResolvedExperiment resolve_experiment(const ExperimentConfig& cfg) {
  ResolvedExperiment r;
  r.problem = gen_problem(cfg.problem.d, cfg.problem.k, cfg.problem.n, cfg.problem.m,
                          cfg.problem.kappa, cfg.problem.mu, cfg.problem.seed);
  const GroundTruth& truth = r.problem.truth;
  const double s1 = truth.singular_values(0);

  r.values.eta_g = cfg.server.eta_g ? *cfg.server.eta_g : 1.0 / (4.0 * s1 * s1);
  r.values.sigma_g = cfg.server.eps_dp_target
                         ? calibrate_sigma(*cfg.server.eps_dp_target,
                                           std::max(1, cfg.server.t_g), cfg.server.delta)
                         : cfg.server.sigma_g.value_or(0.0);

  if (cfg.server.zeta_auto) {
    const std::uint64_t pilot_seed = detail::absorb(cfg.problem.seed, kZetaPilotTag);
    RandomStream basis_stream = RandomStream::from_key(detail::absorb(pilot_seed, 1));
    const OrthonormalBasis pilot_basis = spectral_oracle_init(truth, 0.2, basis_stream);
    r.values.zeta_g = auto_quantile_zeta(r.problem, pilot_basis, cfg.client.mbar,
                                         /*rounds=*/50, /*quantile=*/0.999, pilot_seed);
  } else if (cfg.server.zeta_g) {
    r.values.zeta_g = *cfg.server.zeta_g;
  } else {
    if (r.values.sigma_g > 0.0)
      throw ConfigError("server.zeta_g: required for private runs");
    r.values.zeta_g = std::numeric_limits<double>::infinity();
  }

  r.values.init_power_iterations =
      cfg.init.power_iterations
          ? *cfg.init.power_iterations
          : recipe_power_iterations(truth, cfg.problem.d, cfg.problem.k, cfg.init.eps_i);
  if (cfg.init.zeta0_auto) {
    r.values.zeta0 = resolve_zeta0_quantile(
        r.problem, cfg.init.mbar0, detail::absorb(cfg.problem.seed, kZetaPilotTag + 2));
  } else if (cfg.init.zeta0) {
    r.values.zeta0 = *cfg.init.zeta0;
  } else {
    if (cfg.init.mode == InitMode::ppm && cfg.init.sigma0 > 0.0)
      throw ConfigError("init.zeta0: required for private initialization");
    r.values.zeta0 = std::numeric_limits<double>::infinity();
  }

  r.server.p_g = cfg.server.p_g;
  r.server.t_g = cfg.server.t_g;
  r.server.eta_g = r.values.eta_g;
  r.server.gm = GaussianMechanismParams{r.values.zeta_g, r.values.sigma_g};
  r.server.aggregation = cfg.server.aggregation;
  r.server.gm.validate();

  r.client.mbar = cfg.client.mbar;
  r.client.mode = cfg.client.mode;
  r.client.t_l = cfg.client.t_l;
  r.client.eta_l = cfg.client.eta_l;
  r.client.head_epochs = cfg.client.head_epochs;
  return r;
}

OrthonormalBasis make_initial_basis(const ExperimentConfig& cfg,
                                    const ResolvedExperiment& r, std::uint64_t tseed,
                                    PrivacyLedger* ledger) {
  RandomStream stream = derive_stream(tseed, StreamDomain::init_trial, 0, 0);
  switch (cfg.init.mode) {
    case InitMode::spectral_oracle:
      return spectral_oracle_init(r.problem.truth, cfg.init.eps0, stream);
    case InitMode::random:
      return OrthonormalBasis::haar(r.problem.dims.d, r.problem.dims.k, stream);
    case InitMode::ppm: {
      PpmConfig ppm;
      ppm.power_iterations = r.values.init_power_iterations;
      ppm.sigma0 = cfg.init.sigma0;
      ppm.zeta0 = r.values.zeta0;
      ppm.mbar0 = cfg.init.mbar0;
      ppm.trials = cfg.init.t0;
      ppm.eps_trial = cfg.init.eps_i;
      ppm.eps_target = cfg.init.eps0 > 0.0 ? cfg.init.eps0 : 0.2;
      ppm.moment_mode = MomentMode::sampled;
      PrivacyLedger* init_ledger =
          (ledger != nullptr && cfg.init.sigma0 > 0.0) ? ledger : nullptr;
      return initialize(r.problem, ppm, stream, init_ledger);
    }
  }
  throw ConfigError("init.mode: unknown mode");
}

RunTrace run_single_trial(const ExperimentConfig& cfg, const ResolvedExperiment& r,
                          int trial, const std::string& digest) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t tseed = detail::trial_seed(cfg.problem.seed, trial);
  const bool is_private = r.values.sigma_g > 0.0;

  PrivacyLedger ledger;
  PrivacyLedger* ledger_ptr = nullptr;
  if (is_private) {
    ledger = PrivacyLedger::create(cfg.server.delta, cfg.adjacency);
    ledger_ptr = &ledger;
  }

  const OrthonormalBasis b0 = make_initial_basis(cfg, r, tseed, ledger_ptr);
  const ServerTrace server_trace =
      run_centaur(r.problem, r.server, r.client, b0, ledger_ptr, tseed);

  RunTrace trace;
  trace.config_digest = digest;
  trace.init_dist = principal_angle_dist(b0, r.problem.truth.b_star);

  RdpCurve cumulative;
  RdpCurve round_curve;
  if (is_private) {
    cumulative = ledger.init_curve;
    round_curve = per_round_curve(cfg.server.p_g, r.values.sigma_g, cfg.adjacency,
                                  cumulative.alpha_grid);
  }
  trace.rounds.reserve(server_trace.rounds.size());
  for (const RoundRecord& rec : server_trace.rounds) {
    TraceRow row;
    row.round = rec.round;
    row.dist = rec.dist_to_truth;
    row.grad_norm = rec.grad_norm;
    row.clip_count = rec.clip_count;
    row.active_clients = rec.active_clients;
    if (is_private) {
      cumulative = compose({cumulative, round_curve});
      row.eps_dp_cum = rdp_to_dp(cumulative, cfg.server.delta).eps_dp;
    } else {
      row.eps_dp_cum = std::numeric_limits<double>::infinity();
    }
    trace.rounds.push_back(row);
  }
  trace.final_dist =
      trace.rounds.empty() ? trace.init_dist : trace.rounds.back().dist;
  trace.eps_dp_final = is_private ? ledger.to_dp().eps_dp
                                  : std::numeric_limits<double>::infinity();
  trace.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  return trace;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
  const ResolvedExperiment r = resolve_experiment(cfg);
  const std::string digest = config_hash(cfg);
  ExperimentResult result;
  result.resolved = r.values;
  result.traces.resize(cfg.trials);
  parallel_for(cfg.trials, threads,
               [&](int t) { result.traces[t] = run_single_trial(cfg, r, t, digest); });
  return result;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const std::string& field_path,
                      const std::vector<double>& values, int threads) {
  std::string pointer = "/" + field_path;
  for (auto& c : pointer)
    if (c == '.') c = '/';
  const nlohmann::json base = config_to_json(cfg);
  if (!base.contains(nlohmann::json::json_pointer(pointer)))
    throw ConfigError(field_path + ": swept field does not exist");

  SweepResult sweep;
  sweep.field_path = field_path;
  for (double value : values) {
    SweepRow row;
    row.swept_value = value;
    ExperimentResult cell;
    try {
      nlohmann::json patched = base;
      patched[nlohmann::json::json_pointer(pointer)] = value;
      const ExperimentConfig cell_cfg = parse_config(patched);
      cell = run_experiment(cell_cfg, threads);
      std::vector<double> finals;
      finals.reserve(cell.traces.size());
      for (const auto& trace : cell.traces) finals.push_back(trace.final_dist);
      row.median_final_dist = quantile(finals, 0.5);
      row.q25 = quantile(finals, 0.25);
      row.q75 = quantile(finals, 0.75);
      row.eps_dp = cell.traces.front().eps_dp_final;
      row.sigma_g = cell.resolved.sigma_g;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.median_final_dist = row.q25 = row.q75 = row.eps_dp = row.sigma_g = nan;
      cell = ExperimentResult{};
    }
    sweep.rows.push_back(std::move(row));
    sweep.cells.push_back(std::move(cell));
  }
  return sweep;
}

CalibrationReport calibrate_constants(const ExperimentConfig& cfg, int threads) {
  (void)threads;
  const ResolvedExperiment r = resolve_experiment(cfg);
  const GroundTruth& truth = r.problem.truth;
  const int d = cfg.problem.d;
  const int k = cfg.problem.k;
  const int n = cfg.problem.n;
  const double sk = truth.singular_values(k - 1);

  CalibrationReport report;
  {
    const std::uint64_t pilot_seed =
        detail::absorb(cfg.problem.seed, kCalibrationTag);
    RandomStream basis_stream = RandomStream::from_key(detail::absorb(pilot_seed, 1));
    const OrthonormalBasis pilot_basis = spectral_oracle_init(truth, 0.2, basis_stream);
    report.measured_zeta_quantile = auto_quantile_zeta(
        r.problem, pilot_basis, cfg.client.mbar, /*rounds=*/50, 0.999, pilot_seed);
  }
  const double formula_scale =
      truth.mu * truth.mu * k * sk * sk *
      std::sqrt(static_cast<double>(d) * k * std::log(static_cast<double>(n)));
  report.c_zeta = report.measured_zeta_quantile / formula_scale;

  if (!(r.values.sigma_g > 0.0))
    throw ConfigError("calibrate: c_T calibration requires a private run (sigma_g > 0)");

  // Long pilot to locate the sigma_g-predicted plateau.
  constexpr int kPilotRounds = 600;
  ServerConfig pilot_server = r.server;
  pilot_server.t_g = kPilotRounds;
  pilot_server.gm = GaussianMechanismParams{report.measured_zeta_quantile,
                                            r.values.sigma_g};
  const std::uint64_t tseed = detail::trial_seed(cfg.problem.seed, 0);
  RandomStream init_stream = derive_stream(tseed, StreamDomain::init_trial, 0, 0);
  const OrthonormalBasis b0 = spectral_oracle_init(truth, 0.2, init_stream);

  auto run_rounds = [&](int rounds) {
    ServerConfig sc = pilot_server;
    sc.t_g = rounds;
    PrivacyLedger ledger = PrivacyLedger::create(cfg.server.delta, cfg.adjacency);
    return run_centaur(r.problem, sc, r.client, b0, &ledger, tseed);
  };

  const ServerTrace pilot = run_rounds(kPilotRounds);
  std::vector<double> tail;
  for (int t = kPilotRounds - 50; t < kPilotRounds; ++t)
    tail.push_back(pilot.rounds[t].dist_to_truth);
  report.pilot_plateau = quantile(std::move(tail), 0.5);
  if (!(report.pilot_plateau < 0.15))
    throw CalibrationError("calibrate: pilot did not converge below the init radius");

  RecipeConstants constants{report.c_zeta, 1.0};
  for (double c_t : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    constants.c_t = c_t;
    const Recipe recipe = parameter_recipe(truth, r.values.sigma_g, n, d, k, constants);
    if (recipe.t_g > kPilotRounds) break;
    const ServerTrace candidate = run_rounds(recipe.t_g);
    const int window = std::max(5, recipe.t_g / 5);
    std::vector<double> last;
    for (int t = std::max(0, recipe.t_g - window); t < recipe.t_g; ++t)
      last.push_back(candidate.rounds[t].dist_to_truth);
    const double achieved = quantile(std::move(last), 0.5);
    if (achieved <= 1.1 * report.pilot_plateau) {
      report.c_t = c_t;
      report.recipe_t_g = recipe.t_g;
      return report;
    }
  }
  throw CalibrationError("calibrate: no c_T on the grid reaches the plateau within 10%");
}

nlohmann::json account_report(const nlohmann::json& descriptor) {
  const int t_g = int_field(descriptor, "account", "T_g");
  const double sigma_g = number_field(descriptor, "account", "sigma_g");
  const double p_g = descriptor.contains("p_g")
                         ? number_field(descriptor, "account", "p_g")
                         : 1.0;
  const double delta = number_field(descriptor, "account", "delta");
  if (t_g < 1) throw ConfigError("account.T_g: must be >= 1");
  if (!(sigma_g > 0.0)) throw ConfigError("account.sigma_g: must be > 0");
  if (!(p_g >= 0.0 && p_g <= 1.0)) throw ConfigError("account.p_g: must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("account.delta: must lie in (0, 1)");
  Adjacency adjacency = Adjacency::replace_one_user;
  if (descriptor.contains("adjacency")) {
    const std::string adj = descriptor.at("adjacency").get<std::string>();
    if (adj == "add_remove_user")
      adjacency = Adjacency::add_remove_user;
    else if (adj != "replace_one_user")
      throw ConfigError("account.adjacency: unknown adjacency");
  }

  const std::vector<double> grid = default_alpha_grid();
  const RdpCurve round = per_round_curve(p_g, sigma_g, adjacency, grid);
  RdpCurve main = round;
  for (auto& e : main.epsilon_at) e *= static_cast<double>(t_g);

  RdpCurve init;
  init.alpha_grid = grid;
  init.epsilon_at.assign(grid.size(), 0.0);
  if (descriptor.contains("init") && !descriptor.at("init").is_null()) {
    const auto& init_j = descriptor.at("init");
    const int t0 = int_field(init_j, "account.init", "T0");
    const int l = int_field(init_j, "account.init", "L");
    const double sigma0 = number_field(init_j, "account.init", "sigma0");
    if (sigma0 > 0.0) init = init_rdp_curve(t0, l, sigma0, adjacency, grid);
  }

  const RdpCurve total = compose({init, main});
  const DpConversion conversion = rdp_to_dp(total, delta);
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] == conversion.best_alpha) best_index = i;
  const double total_at_best = total.epsilon_at[best_index];
  const double share =
      total_at_best > 0.0 ? init.epsilon_at[best_index] / total_at_best : 0.0;

  return nlohmann::json{
      {"eps_dp", conversion.eps_dp},
      {"best_alpha", conversion.best_alpha},
      {"eps_init_dp_share", share},
      {"closed_form_eps_dp", centaur_dp_budget(t_g, sigma_g, delta)},
      {"adjacency", adjacency == Adjacency::replace_one_user ? "replace_one_user"
                                                             : "add_remove_user"}};
}

}  // namespace centaur
