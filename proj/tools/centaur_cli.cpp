#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "centaur/errors.hpp"
#include "centaur/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericError = 3;

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw centaur::ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw centaur::ConfigError(std::string("config parse error: ") + e.what());
  }
  return j;
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("CENTAUR_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const double v = std::stod(item, &pos);
    if (pos != item.size())
      throw centaur::ConfigError("sweep: bad value '" + item + "'");
    values.push_back(v);
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private federated linear representation simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int threads_flag = 0;
  std::string sweep_spec;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", config_path, "path to the JSON run configuration")
        ->required();
    if (with_out) cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed_override, "override problem.seed")
        ->each([&](const std::string&) { seed_given = true; });
    cmd->add_option("--threads", threads_flag,
                    "worker threads (env CENTAUR_THREADS when absent)");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  add_common(run_cmd, true);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep one config field");
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--sweep", sweep_spec, "field=V1,V2,... (dotted field path)")
      ->required();
  CLI::App* account_cmd =
      app.add_subcommand("account", "privacy budget for a run descriptor");
  account_cmd->add_option("--config", config_path, "path to the JSON descriptor")
      ->required();
  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "calibrate the recipe constants");
  add_common(calibrate_cmd, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const int threads = resolve_threads(threads_flag);
    if (account_cmd->parsed()) {
      std::cout << centaur::account_report(load_json(config_path)).dump(2) << "\n";
      return kExitOk;
    }

    centaur::ExperimentConfig cfg = centaur::parse_config(load_json(config_path));
    if (seed_given) cfg.problem.seed = seed_override;

    if (run_cmd->parsed()) {
      const centaur::ExperimentResult result = centaur::run_experiment(cfg, threads);
      centaur::emit_reports(out_dir, cfg, result);
      double worst = 0.0;
      for (const auto& trace : result.traces) worst = std::max(worst, trace.final_dist);
      std::cout << "trials=" << result.traces.size()
                << " final_dist_max=" << worst
                << " sigma_g=" << result.resolved.sigma_g
                << " zeta_g=" << result.resolved.zeta_g << "\n";
      return kExitOk;
    }
    if (sweep_cmd->parsed()) {
      const std::size_t eq = sweep_spec.find('=');
      if (eq == std::string::npos)
        throw centaur::ConfigError("sweep: expected field=V1,V2,...");
      const std::string field = sweep_spec.substr(0, eq);
      const std::vector<double> values = parse_values(sweep_spec.substr(eq + 1));
      if (values.empty()) throw centaur::ConfigError("sweep: empty value list");
      const centaur::SweepResult sweep =
          centaur::run_sweep(cfg, field, values, threads);
      centaur::ExperimentResult combined;
      for (const auto& cell : sweep.cells)
        for (const auto& trace : cell.traces) combined.traces.push_back(trace);
      centaur::emit_reports(out_dir, cfg, combined, &sweep);
      for (const auto& row : sweep.rows) {
        std::cout << field << "=" << row.swept_value << " median_final_dist="
                  << row.median_final_dist
                  << (row.failed ? " FAILED: " + row.error : "") << "\n";
      }
      return kExitOk;
    }
    if (calibrate_cmd->parsed()) {
      const centaur::CalibrationReport report =
          centaur::calibrate_constants(cfg, threads);
      nlohmann::json j{{"c_zeta", report.c_zeta},
                       {"c_T", report.c_t},
                       {"measured_zeta_quantile", report.measured_zeta_quantile},
                       {"pilot_plateau", report.pilot_plateau},
                       {"recipe_T_g", report.recipe_t_g}};
      std::filesystem::create_directories(out_dir);
      std::ofstream out(std::filesystem::path(out_dir) / "calibration.json");
      out << j.dump(2) << "\n";
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const centaur::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const centaur::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const centaur::InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumericError;
  }
  return kExitOk;
}
