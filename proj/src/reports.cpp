#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "centaur/errors.hpp"
#include "centaur/harness.hpp"

namespace centaur {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("emit_reports: cannot open " + path.string());
  out << content;
  if (!out) throw NumericError("emit_reports: write failed for " + path.string());
}

std::string fmt(double v) { return detail::format_double(v); }

std::string trace_csv(const std::vector<RunTrace>& traces) {
  std::ostringstream out;
  out << "trial,round,dist,grad_norm,clip_count,active_clients,eps_dp_cum\n";
  for (std::size_t trial = 0; trial < traces.size(); ++trial) {
    for (const TraceRow& row : traces[trial].rounds) {
      out << trial << ',' << row.round << ',' << fmt(row.dist) << ','
          << fmt(row.grad_norm) << ',' << row.clip_count << ','
          << row.active_clients << ',' << fmt(row.eps_dp_cum) << '\n';
    }
  }
  return out.str();
}

std::string tradeoff_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "swept_value,median_final_dist,q25,q75,eps_dp,sigma_g\n";
  for (const SweepRow& row : sweep.rows) {
    out << fmt(row.swept_value) << ',' << fmt(row.median_final_dist) << ','
        << fmt(row.q25) << ',' << fmt(row.q75) << ',' << fmt(row.eps_dp) << ','
        << fmt(row.sigma_g) << '\n';
  }
  return out.str();
}

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

// Minimal self-contained line chart: one polyline per series, log or linear axes.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           bool log_x, bool log_y) {
  constexpr double kWidth = 720, kHeight = 480;
  constexpr double kLeft = 72, kRight = 24, kTop = 40, kBottom = 56;
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  auto tx = [&](double v) { return log_x ? std::log10(std::max(v, 1e-300)) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-16)) : v; };
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x_min = std::min(x_min, tx(s.x[i]));
      x_max = std::max(x_max, tx(s.x[i]));
      y_min = std::min(y_min, ty(s.y[i]));
      y_max = std::max(y_max, ty(s.y[i]));
    }
  }
  if (!(x_min <= x_max)) {
    x_min = 0;
    x_max = 1;
  }
  if (!(y_min <= y_max)) {
    y_min = 0;
    y_max = 1;
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  auto px = [&](double v) {
    return kLeft + (tx(v) - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight);
  };
  auto py = [&](double v) {
    return kHeight - kBottom -
           (ty(v) - y_min) / (y_max - y_min) * (kHeight - kTop - kBottom);
  };
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
      << "\">\n"
      << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"monospace\" font-size=\"14\">"
      << title << "</text>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
      << kWidth - kRight << "\" y2=\"" << kHeight - kBottom
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">"
      << x_label << (log_x ? " (log)" : "") << "</text>\n"
      << "<text x=\"18\" y=\"" << kHeight / 2
      << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\" "
         "transform=\"rotate(-90 18 "
      << kHeight / 2 << ")\">" << y_label << (log_y ? " (log)" : "") << "</text>\n";
  // axis extremes as tick labels
  out << "<text x=\"" << kLeft << "\" y=\"" << kHeight - kBottom + 16
      << "\" font-family=\"monospace\" font-size=\"10\">"
      << svg_number(log_x ? std::pow(10.0, x_min) : x_min) << "</text>\n"
      << "<text x=\"" << kWidth - kRight << "\" y=\"" << kHeight - kBottom + 16
      << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">"
      << svg_number(log_x ? std::pow(10.0, x_max) : x_max) << "</text>\n"
      << "<text x=\"" << kLeft - 4 << "\" y=\"" << kHeight - kBottom
      << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">"
      << svg_number(log_y ? std::pow(10.0, y_min) : y_min) << "</text>\n"
      << "<text x=\"" << kLeft - 4 << "\" y=\"" << kTop + 4
      << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">"
      << svg_number(log_y ? std::pow(10.0, y_max) : y_max) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << palette[s % 10]
        << "\" stroke-width=\"1\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) continue;
      if (!first) out << ' ';
      out << svg_number(px(series[s].x[i])) << ',' << svg_number(py(series[s].y[i]));
      first = false;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

nlohmann::json resolved_to_json(const ResolvedValues& values) {
  return nlohmann::json{{"eta_g", values.eta_g},
                        {"sigma_g", values.sigma_g},
                        {"zeta_g", values.zeta_g},
                        {"init_L", values.init_power_iterations},
                        {"zeta0", values.zeta0}};
}

}  // namespace

void emit_reports(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                  const ExperimentResult& result, const SweepResult* sweep) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec && !std::filesystem::is_directory(out_dir))
    throw NumericError("emit_reports: cannot create " + out_dir.string());

  write_file(out_dir / "trace.csv", trace_csv(result.traces));

  std::vector<Series> round_series;
  for (const RunTrace& trace : result.traces) {
    Series s;
    for (const TraceRow& row : trace.rounds) {
      s.x.push_back(static_cast<double>(row.round));
      s.y.push_back(row.dist);
    }
    round_series.push_back(std::move(s));
  }
  write_file(out_dir / "dist_vs_round.svg",
             line_chart_svg(round_series, "subspace distance per round", "round",
                            "dist", false, true));

  nlohmann::json run_json{{"config", config_to_json(cfg)},
                          {"config_hash", config_hash(cfg)},
                          {"resolved", resolved_to_json(result.resolved)}};
  nlohmann::json trials = nlohmann::json::array();
  for (const RunTrace& trace : result.traces) {
    trials.push_back({{"init_dist", trace.init_dist},
                      {"final_dist", trace.final_dist},
                      {"eps_dp_final", trace.eps_dp_final},
                      {"wall_ms", trace.wall_ms}});
  }
  run_json["trials"] = trials;

  if (sweep != nullptr) {
    write_file(out_dir / "tradeoff.csv", tradeoff_csv(*sweep));
    Series tradeoff;
    for (const SweepRow& row : sweep->rows) {
      if (row.failed || !std::isfinite(row.eps_dp)) continue;
      tradeoff.x.push_back(row.eps_dp);
      tradeoff.y.push_back(row.median_final_dist);
    }
    write_file(out_dir / "dist_vs_eps.svg",
               line_chart_svg({tradeoff}, "utility-privacy tradeoff", "eps_dp", "dist",
                              true, false));
    nlohmann::json sweep_json{{"field", sweep->field_path}};
    nlohmann::json rows = nlohmann::json::array();
    for (const SweepRow& row : sweep->rows) {
      nlohmann::json r{{"swept_value", row.swept_value}, {"failed", row.failed}};
      if (row.failed)
        r["error"] = row.error;
      else
        r["median_final_dist"] = row.median_final_dist;
      rows.push_back(std::move(r));
    }
    sweep_json["rows"] = rows;
    run_json["sweep"] = sweep_json;
  }

  write_file(out_dir / "run.json", run_json.dump(2) + "\n");
}

}  // namespace centaur
