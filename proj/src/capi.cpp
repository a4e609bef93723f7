// SPDX-License-Identifier: Apache-2.0
#include <gridshield/gridshield.h>

#include <gridshield/commands.hpp>
#include <gridshield/config.hpp>
#include <gridshield/errors.hpp>
#include <gridshield/server.hpp>
#include <gridshield/session.hpp>

#include "json.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <string>

using namespace gridshield;

struct gs_config {
  Config c;
};
struct gs_env {
  std::unique_ptr<MicrogridEnv> env;
  std::optional<Action> last_safe;
};
struct gs_session {
  std::unique_ptr<Session> session;
};
struct gs_server {
  std::unique_ptr<Server> server;
};

namespace {

thread_local std::string last_error;

gs_status fail(gs_status s, const std::string& what) {
  last_error = what;
  return s;
}

// Runs f, translating exceptions into status codes.
template <class F>
gs_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const ConfigError& e) {
    return fail(GS_ERR_CONFIG, e.what());
  } catch (const DataError& e) {
    return fail(GS_ERR_CONFIG, e.what());
  } catch (const EmptySafeSetError& e) {
    return fail(GS_ERR_ILL_POSED, e.what());
  } catch (const SolverError& e) {
    return fail(GS_ERR_SOLVER, e.what());
  } catch (const ShieldInfeasibleError& e) {
    return fail(GS_ERR_SOLVER, e.what());
  } catch (const IoError& e) {
    return fail(GS_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(GS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(GS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GS_ERR_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

gs_status status_of_abort(const std::string& reason) {
  return reason.rfind("ill-posed", 0) == 0 ? GS_ERR_ILL_POSED : GS_ERR_SOLVER;
}

std::string metrics_json(const Metrics& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m.rows) j["metrics"][k] = v;
  for (const auto& [k, v] : m.audit) j["audit"][k] = v;
  return j.dump();
}

void write_obs(const Observation& obs, double* out, std::size_t len) {
  const std::vector<double> v = obs.to_vector();
  if (len < v.size())
    throw std::invalid_argument("observation buffer holds " + std::to_string(len) + ", needs " +
                                std::to_string(v.size()));
  std::copy(v.begin(), v.end(), out);
}

#define GS_REQUIRE(cond, msg) \
  if (!(cond)) return fail(GS_ERR_INVALID_ARGUMENT, msg)

}  // namespace

extern "C" {

const char* gs_version(void) { return "0.1.0"; }
const char* gs_last_error(void) { return last_error.c_str(); }
void gs_string_free(char* s) { std::free(s); }

gs_status gs_config_default(gs_config** out) {
  GS_REQUIRE(out, "out is null");
  return guarded([&] {
    *out = new gs_config{default_config()};
    return GS_OK;
  });
}

gs_status gs_config_load_file(const char* path, gs_config** out) {
  GS_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = new gs_config{load_config(path)};
    return GS_OK;
  });
}

gs_status gs_config_load_string(const char* json, gs_config** out) {
  GS_REQUIRE(json && out, "null argument");
  return guarded([&] {
    *out = new gs_config{parse_config(json)};
    return GS_OK;
  });
}

gs_status gs_config_override(gs_config* cfg, const char* patch_json) {
  GS_REQUIRE(cfg && patch_json, "null argument");
  return guarded([&] {
    cfg->c = apply_overrides(cfg->c, patch_json);
    return GS_OK;
  });
}

gs_status gs_config_to_json(const gs_config* cfg, char** out_json) {
  GS_REQUIRE(cfg && out_json, "null argument");
  return guarded([&] {
    *out_json = dup_string(config_to_json(cfg->c));
    return GS_OK;
  });
}

void gs_config_free(gs_config* cfg) { delete cfg; }

gs_status gs_safeset_write(const gs_config* cfg, size_t day, int t0, int band, const char* out_dir) {
  GS_REQUIRE(cfg, "config is null");
  return guarded([&] {
    write_safeset(cfg->c, day, t0, band != 0, out_dir ? out_dir : cfg->c.output_dir);
    return GS_OK;
  });
}

gs_status gs_simulate(const gs_config* cfg, const char* agent, size_t n_days, const char* out_dir,
                      char** out_metrics_json, size_t* out_aborted, gs_status* out_status_of_abort) {
  GS_REQUIRE(cfg && agent, "null argument");
  return guarded([&] {
    const RunResult r = run_simulation(cfg->c, agent, n_days, out_dir ? out_dir : cfg->c.output_dir);
    std::size_t aborted = 0;
    gs_status first = GS_OK;
    for (const EpisodeTrace& tr : r.traces) {
      if (!tr.aborted) continue;
      if (aborted++ == 0) first = status_of_abort(tr.abort_reason);
    }
    if (out_aborted) *out_aborted = aborted;
    if (out_status_of_abort) *out_status_of_abort = first;
    if (out_metrics_json) *out_metrics_json = dup_string(metrics_json(r.metrics));
    return GS_OK;
  });
}

gs_status gs_env_create(const gs_config* cfg, size_t n_days, gs_env** out) {
  GS_REQUIRE(cfg && out, "null argument");
  return guarded([&] {
    auto env = std::make_unique<MicrogridEnv>(cfg->c.env, load_data(cfg->c, n_days));
    *out = new gs_env{std::move(env), std::nullopt};
    return GS_OK;
  });
}

gs_status gs_env_dims(const gs_env* env, size_t* n, size_t* m, size_t* obs_dim) {
  GS_REQUIRE(env, "env is null");
  const EnvConfig& c = env->env->config();
  if (n) *n = static_cast<size_t>(c.grid.n());
  if (m) *m = static_cast<size_t>(c.grid.m());
  if (obs_dim) *obs_dim = Observation::layout(c.grid.n(), c.forecast.horizons).size();
  return GS_OK;
}

gs_status gs_env_reset(gs_env* env, size_t day, uint64_t seed, double* obs, size_t obs_len) {
  GS_REQUIRE(env, "env is null");
  return guarded([&] {
    if (day >= env->env->num_days())
      throw std::invalid_argument("day " + std::to_string(day) + " is outside the series");
    const Observation o = env->env->reset(day, seed);
    env->last_safe.reset();
    if (obs) write_obs(o, obs, obs_len);
    return GS_OK;
  });
}

gs_status gs_env_step(gs_env* env, const double* action, size_t action_len, double* obs,
                      size_t obs_len, double* reward, int* done, double info[5]) {
  GS_REQUIRE(env && action, "null argument");
  return guarded([&] {
    const GridParams& g = env->env->config().grid;
    if (action_len != static_cast<size_t>(g.input_dim()))
      throw std::invalid_argument("action must have " + std::to_string(g.input_dim()) + " entries");
    if (!env->env->active()) throw std::invalid_argument("no active episode");
    const Eigen::VectorXd u =
        Eigen::Map<const Eigen::VectorXd>(action, static_cast<Eigen::Index>(action_len));
    if (!u.allFinite()) throw std::invalid_argument("action entries must be finite");
    const StepResult r = env->env->step(Action::from_stacked(u, g.n()));
    if (obs) write_obs(r.obs, obs, obs_len);
    if (reward) *reward = r.reward;
    if (done) *done = r.done ? 1 : 0;
    if (info) {
      info[0] = r.record.correction;
      info[1] = r.record.violation;
      info[2] = r.record.cost;
      info[3] = r.record.penalty;
      info[4] = r.record.shield_time;
    }
    if (!r.error.empty()) {
      env->last_safe.reset();
      return fail(status_of_abort(r.error), r.error);
    }
    env->last_safe = r.record.safe;
    return GS_OK;
  });
}

gs_status gs_env_last_safe_action(const gs_env* env, double* action, size_t action_len) {
  GS_REQUIRE(env && action, "null argument");
  if (!env->last_safe) return fail(GS_ERR_INVALID_ARGUMENT, "no safe action recorded yet");
  const Eigen::VectorXd u = env->last_safe->stacked();
  GS_REQUIRE(action_len >= static_cast<size_t>(u.size()), "action buffer too small");
  std::copy(u.data(), u.data() + u.size(), action);
  return GS_OK;
}

void gs_env_free(gs_env* env) { delete env; }

gs_status gs_session_create(const gs_config* cfg, size_t n_days, gs_session** out) {
  GS_REQUIRE(cfg && out, "null argument");
  return guarded([&] {
    *out = new gs_session{std::make_unique<Session>(cfg->c, load_data(cfg->c, n_days))};
    return GS_OK;
  });
}

gs_status gs_session_handle(gs_session* s, const char* frame, char** out_reply) {
  GS_REQUIRE(s && frame && out_reply, "null argument");
  return guarded([&] {
    *out_reply = dup_string(s->session->handle(frame));
    return GS_OK;
  });
}

void gs_session_free(gs_session* s) { delete s; }

gs_status gs_server_start(const gs_config* cfg, size_t n_days, const char* endpoint, gs_server** out) {
  GS_REQUIRE(cfg && endpoint && out, "null argument");
  return guarded([&] {
    const TcpEndpoint ep = parse_endpoint(endpoint);
    *out = new gs_server{std::make_unique<Server>(cfg->c, load_data(cfg->c, n_days), ep)};
    return GS_OK;
  });
}

int gs_server_port(const gs_server* srv) { return srv ? srv->server->port() : -1; }

gs_status gs_server_stop(gs_server* srv) {
  GS_REQUIRE(srv, "server is null");
  return guarded([&] {
    srv->server->stop();
    return GS_OK;
  });
}

gs_status gs_server_wait(gs_server* srv) {
  GS_REQUIRE(srv, "server is null");
  return guarded([&] {
    srv->server->wait();
    return GS_OK;
  });
}

gs_status gs_server_write_outputs(const gs_server* srv, const char* out_dir) {
  GS_REQUIRE(srv && out_dir, "null argument");
  return guarded([&] {
    const std::vector<EpisodeTrace> traces = srv->server->traces();
    write_run_outputs(srv->server->config().env.grid, traces, compute_metrics(traces), out_dir,
                      "trace_episode");
    return GS_OK;
  });
}

void gs_server_free(gs_server* srv) { delete srv; }

gs_status gs_serve_fd(const gs_config* cfg, size_t n_days, int in_fd, int out_fd, const char* out_dir) {
  GS_REQUIRE(cfg, "config is null");
  return guarded([&] {
    const std::vector<EpisodeTrace> traces = serve_stream(cfg->c, load_data(cfg->c, n_days), in_fd, out_fd);
    if (out_dir)
      write_run_outputs(cfg->c.env.grid, traces, compute_metrics(traces), out_dir, "trace_episode");
    return GS_OK;
  });
}

}  // extern "C"
