// SPDX-License-Identifier: Apache-2.0
#include <gridshield/commands.hpp>
#include <gridshield/errors.hpp>

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gridshield {

namespace fs = std::filesystem;
using Eigen::Index;

namespace {

std::string write_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  const std::string path = (fs::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
  return path;
}

std::ostringstream csv_stream() {
  std::ostringstream os;
  os << std::setprecision(17);
  return os;
}

void hull_header(std::ostream& os, const char* first, Index n) {
  os << first;
  for (Index i = 0; i < n; ++i) os << ",lower_" << i + 1;
  for (Index i = 0; i < n; ++i) os << ",upper_" << i + 1;
  os << '\n';
}

void hull_row(std::ostream& os, long step, const IntervalBox& h) {
  os << step;
  for (Index i = 0; i < h.dimension(); ++i) os << ',' << h.lower[i];
  for (Index i = 0; i < h.dimension(); ++i) os << ',' << h.upper[i];
  os << '\n';
}

}  // namespace

SafesetFiles write_safeset(const Config& config, std::size_t day, int t0, bool band,
                           const std::string& out_dir) {
  const GridParams& g = config.env.grid;
  if (t0 < 0 || t0 >= g.horizon_T)
    throw std::invalid_argument("t0 must lie in [0, " + std::to_string(g.horizon_T) + ")");
  const ExogenousSeries series = load_data(config, day + 1);
  MicrogridEnv env(config.env, series);
  env.reset(day, config.seed);
  const SolverSettings& solver = config.env.shield.solver;

  const auto seq = env.safe_sets(static_cast<std::size_t>(t0), static_cast<std::size_t>(t0));
  std::ostringstream hull = csv_stream();
  hull_header(hull, "step", g.n());
  nlohmann::json sets = nlohmann::json::array();
  for (std::size_t k = 0; k < seq->sets.size(); ++k) {
    hull_row(hull, static_cast<long>(k), interval_hull(seq->sets[k], solver));
    sets.push_back(nlohmann::json::parse(to_json(seq->sets[k])));
  }
  const nlohmann::json doc = {{"v", kObservationVersion},
                              {"day", day},
                              {"t0", t0},
                              {"H", g.islanding_H},
                              {"forecast_lower", seq->forecast_used.d_lower},
                              {"sets", sets}};

  const std::string stem = "safeset_day" + std::to_string(day) + "_t" + std::to_string(t0);
  SafesetFiles files;
  files.hull_csv = write_file(out_dir, stem + ".csv", hull.str());
  files.sets_json = write_file(out_dir, stem + ".json", doc.dump());

  if (band) {
    std::ostringstream os = csv_stream();
    hull_header(os, "t", g.n());
    for (int t = 0; t < g.horizon_T; ++t) {
      const auto s = env.safe_sets(static_cast<std::size_t>(t), static_cast<std::size_t>(t));
      hull_row(os, t, interval_hull(s->initial(), solver));
    }
    files.band_csv = write_file(out_dir, "safeband_day" + std::to_string(day) + ".csv", os.str());
  }
  return files;
}

std::string format_trace_csv(const EpisodeTrace& tr, Index n, Index m) {
  std::ostringstream os = csv_stream();
  os << "t";
  for (Index i = 0; i < n; ++i) os << ",e_" << i + 1;
  os << ",d";
  for (const char* stem : {"proposed", "safe"}) {
    for (Index i = 0; i < n; ++i) os << ',' << stem << "_storage_" << i + 1;
    for (Index j = 0; j < m; ++j) os << ',' << stem << "_market_" << j + 1;
  }
  for (Index i = 0; i < n; ++i) os << ",e_next_" << i + 1;
  os << ",correction,cost,penalty,reward,violation,shield_time,balance_residual,rate_excess,"
        "containment_residual,complementarity,mode_pinned\n";
  for (const StepRecord& r : tr.steps) {
    os << r.t;
    for (Index i = 0; i < n; ++i) os << ',' << r.e[i];
    os << ',' << r.d;
    for (const Action* a : {&r.proposed, &r.safe}) {
      for (Index i = 0; i < n; ++i) os << ',' << a->p_storage[i];
      for (Index j = 0; j < m; ++j) os << ',' << a->p_market[j];
    }
    for (Index i = 0; i < n; ++i) os << ',' << r.e_next[i];
    os << ',' << r.correction << ',' << r.cost << ',' << r.penalty << ',' << r.reward << ','
       << r.violation << ',' << r.shield_time << ',' << r.balance_residual << ','
       << r.rate_excess << ',' << r.containment_residual << ',' << r.complementarity << ','
       << (r.mode_pinned ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string format_metrics_csv(const Metrics& metrics) {
  std::ostringstream os = csv_stream();
  os << "metric,value\n";
  for (const auto& [name, value] : metrics.rows) os << name << ',' << value << '\n';
  return os.str();
}

std::string format_metrics_table(const Metrics& metrics) {
  std::size_t width = 0;
  for (const auto& row : metrics.rows) width = std::max(width, row.first.size());
  std::ostringstream os;
  for (const auto& [name, value] : metrics.rows)
    os << std::left << std::setw(static_cast<int>(width) + 2) << name << std::right
       << std::setw(14) << std::setprecision(6) << value << '\n';
  return os.str();
}

std::string format_audit_csv(const Metrics& metrics) {
  std::ostringstream os = csv_stream();
  os << "metric,value\n";
  for (const auto& [name, value] : metrics.audit) os << name << ',' << value << '\n';
  return os.str();
}

SimulationFiles write_run_outputs(const GridParams& params, const std::vector<EpisodeTrace>& traces,
                                  const Metrics& metrics, const std::string& out_dir,
                                  const std::string& trace_prefix) {
  SimulationFiles files;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const EpisodeTrace& tr = traces[k];
    std::string name = trace_prefix + std::to_string(tr.day);
    if (trace_prefix != "trace_day") name = trace_prefix + std::to_string(k) + "_day" + std::to_string(tr.day);
    files.traces.push_back(write_file(out_dir, name + ".csv", format_trace_csv(tr, params.n(), params.m())));
  }
  files.metrics_csv = write_file(out_dir, "metrics.csv", format_metrics_csv(metrics));
  files.metrics_txt = write_file(out_dir, "metrics.txt", format_metrics_table(metrics));
  files.audit_csv = write_file(out_dir, "audit.csv", format_audit_csv(metrics));
  return files;
}

RunResult run_simulation(const Config& config, const std::string& agent_name, std::size_t n_days,
                         const std::string& out_dir, SimulationFiles* files) {
  if (n_days == 0) throw std::invalid_argument("at least one day is required");
  auto agent = make_agent(agent_name);
  const ExogenousSeries series = load_data(config, n_days);
  std::vector<std::size_t> days(n_days);
  for (std::size_t d = 0; d < n_days; ++d) days[d] = d;
  RunResult result = run_days(config.env, series, *agent, days, config.seed);
  SimulationFiles written = write_run_outputs(config.env.grid, result.traces, result.metrics, out_dir);
  if (files) *files = std::move(written);
  return result;
}

}  // namespace gridshield
