// SPDX-License-Identifier: Apache-2.0
//
// File-producing front-end operations shared by the C API and the CLI.
#pragma once

#include <gridshield/config.hpp>
#include <gridshield/environment.hpp>

#include <string>
#include <vector>

namespace gridshield {

struct SafesetFiles {
  std::string hull_csv;
  std::string sets_json;
  std::string band_csv;  // empty unless requested
};

/// Safe set sequence for `day` at step t0 (forecasts known at t0), as a hull
/// CSV `step,lower_1..,upper_1..` and the full sets as JSON. With `band`,
/// also the per-step hull of the current safe set over the whole day.
/// Throws EmptySafeSetError for ill-posed scenarios.
SafesetFiles write_safeset(const Config& config, std::size_t day, int t0, bool band,
                           const std::string& out_dir);

struct SimulationFiles {
  std::vector<std::string> traces;
  std::string metrics_csv;
  std::string metrics_txt;
  std::string audit_csv;
};

/// Runs `agent` over days 0..n_days-1 and writes one trace CSV per day plus
/// the metric tables.
RunResult run_simulation(const Config& config, const std::string& agent, std::size_t n_days,
                         const std::string& out_dir, SimulationFiles* files = nullptr);

/// Writers used by run_simulation and by the service's trace recording.
SimulationFiles write_run_outputs(const GridParams& params, const std::vector<EpisodeTrace>& traces,
                                  const Metrics& metrics, const std::string& out_dir,
                                  const std::string& trace_prefix = "trace_day");
std::string format_trace_csv(const EpisodeTrace& trace, Eigen::Index n, Eigen::Index m);
std::string format_metrics_csv(const Metrics& metrics);
std::string format_metrics_table(const Metrics& metrics);
std::string format_audit_csv(const Metrics& metrics);

}  // namespace gridshield
