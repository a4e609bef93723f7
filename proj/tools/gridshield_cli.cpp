// SPDX-License-Identifier: Apache-2.0
//
// gridshield command-line front end. Exit codes: 0 success, 1 I/O or other
// failure, 2 config or usage error, 3 ill-posed scenario, 4 solver failure.
#include <gridshield/gridshield.h>

#include "CLI11.hpp"
#include "json.hpp"

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>

namespace {

int exit_code(gs_status s) {
  switch (s) {
    case GS_OK: return 0;
    case GS_ERR_CONFIG:
    case GS_ERR_INVALID_ARGUMENT: return 2;
    case GS_ERR_ILL_POSED: return 3;
    case GS_ERR_SOLVER: return 4;
    default: return 1;
  }
}

int report(gs_status s, const char* what) {
  if (s != GS_OK) std::cerr << "gridshield: " << what << ": " << gs_last_error() << '\n';
  return exit_code(s);
}

struct ConfigHandle {
  gs_config* p = nullptr;
  ~ConfigHandle() { gs_config_free(p); }
};

struct Options {
  std::string config_path;
  std::optional<std::size_t> day;
  std::size_t days = 1;
  std::string mode;
  std::string agent = "greedy";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string endpoint = "stdio";
  int t0 = 0;
  bool band = false;
};

// Loads --config and folds the flag overrides into it.
gs_status load(const Options& o, ConfigHandle& cfg) {
  gs_status s = o.config_path.empty() ? gs_config_default(&cfg.p)
                                      : gs_config_load_file(o.config_path.c_str(), &cfg.p);
  if (s != GS_OK) return s;
  nlohmann::json patch = nlohmann::json::object();
  if (!o.mode.empty() && o.mode != "external") patch["shield"]["mode"] = o.mode;
  if (o.seed) patch["seed"] = *o.seed;
  if (!o.out.empty()) patch["output_dir"] = o.out;
  return patch.empty() ? GS_OK : gs_config_override(cfg.p, patch.dump().c_str());
}

std::string output_dir(const ConfigHandle& cfg) {
  char* text = nullptr;
  if (gs_config_to_json(cfg.p, &text) != GS_OK) return "gridshield-out";
  const std::string dir = nlohmann::json::parse(text).value("output_dir", "gridshield-out");
  gs_string_free(text);
  return dir;
}

int run_safeset(const Options& o) {
  ConfigHandle cfg;
  if (gs_status s = load(o, cfg); s != GS_OK) return report(s, "config");
  const std::string dir = output_dir(cfg);
  const gs_status s = gs_safeset_write(cfg.p, o.day.value_or(0), o.t0, o.band ? 1 : 0, dir.c_str());
  if (s == GS_OK) std::cout << "safe sets written to " << dir << '\n';
  return report(s, "safeset");
}

int serve(const Options& o, ConfigHandle& cfg, bool record) {
  const std::size_t days = std::max<std::size_t>(o.days, 1);
  const std::string dir = output_dir(cfg);
  if (o.endpoint == "stdio" || o.endpoint == "-")
    return report(gs_serve_fd(cfg.p, days, 0, 1, record ? dir.c_str() : nullptr), "serve");

  // Signals are taken synchronously by one thread; workers inherit the mask.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  gs_server* srv = nullptr;
  if (gs_status s = gs_server_start(cfg.p, days, o.endpoint.c_str(), &srv); s != GS_OK)
    return report(s, "serve");
  std::cerr << "gridshield: listening on port " << gs_server_port(srv) << std::endl;
  std::thread waiter([&set, srv] {
    int sig = 0;
    sigwait(&set, &sig);
    gs_server_stop(srv);
  });
  gs_server_wait(srv);
  waiter.join();
  gs_status s = GS_OK;
  if (record) s = gs_server_write_outputs(srv, dir.c_str());
  gs_server_free(srv);
  std::cerr << "gridshield: stopped" << std::endl;
  return report(s, "serve");
}

int run_simulate(const Options& o) {
  ConfigHandle cfg;
  if (gs_status s = load(o, cfg); s != GS_OK) return report(s, "config");
  if (o.mode == "external") return serve(o, cfg, true);
  const std::string dir = output_dir(cfg);
  char* metrics = nullptr;
  std::size_t aborted = 0;
  gs_status first_abort = GS_OK;
  const gs_status s =
      gs_simulate(cfg.p, o.agent.c_str(), o.days, dir.c_str(), &metrics, &aborted, &first_abort);
  if (s != GS_OK) return report(s, "simulate");
  const nlohmann::json m = nlohmann::json::parse(metrics);
  gs_string_free(metrics);
  for (const auto& [k, v] : m["metrics"].items())
    std::printf("%-24s %14.6g\n", k.c_str(), v.get<double>());
  std::cout << "outputs written to " << dir << '\n';
  if (aborted > 0) {
    std::cerr << "gridshield: " << aborted << " episode(s) aborted, see the traces\n";
    return exit_code(first_abort);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe economic dispatch for micro grids"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--mode", o.mode, "full_shield, baseline_shield or external")
        ->check(CLI::IsMember({"full_shield", "baseline_shield", "external"}));
  };

  CLI::App* safeset = app.add_subcommand("safeset", "Write safe set hulls for one instant");
  common(safeset);
  safeset->add_option("--day", o.day, "Day index");
  safeset->add_option("--t0", o.t0, "Step within the day");
  safeset->add_flag("--band", o.band, "Also write the whole-day safe band");

  CLI::App* simulate = app.add_subcommand("simulate", "Run days and write traces and metrics");
  common(simulate);
  simulate->add_option("--days", o.days, "Number of days")->check(CLI::PositiveNumber);
  simulate->add_option("--agent", o.agent, "greedy or random");
  simulate->add_option("--endpoint", o.endpoint, "Service endpoint for --mode external");

  CLI::App* serve_cmd = app.add_subcommand("serve", "Serve the environment protocol");
  common(serve_cmd);
  serve_cmd->add_option("--days", o.days, "Days available to sessions")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--endpoint", o.endpoint, "stdio, host:port or tcp://host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (safeset->parsed()) return run_safeset(o);
  if (simulate->parsed()) return run_simulate(o);
  ConfigHandle cfg;
  if (gs_status s = load(o, cfg); s != GS_OK) return report(s, "config");
  return serve(o, cfg, o.mode == "external");
}
