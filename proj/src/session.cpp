// SPDX-License-Identifier: Apache-2.0
#include <gridshield/errors.hpp>
#include <gridshield/session.hpp>

#include "json.hpp"

#include <cmath>

namespace gridshield {

using nlohmann::json;

namespace {

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json error_frame(const std::string& what) {
  return {{"v", kProtocolVersion}, {"error", what}};
}

std::vector<double> finite_array(const json& j, const char* what) {
  if (!j.is_array()) throw ProtocolError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& v : j) {
    if (!v.is_number()) throw ProtocolError(std::string(what) + " must hold only numbers");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ProtocolError(std::string(what) + " entries must be finite");
    out.push_back(x);
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

Session::Session(const Config& config, ExogenousSeries series, std::shared_ptr<SafeSetCache> cache,
                 EpisodeSink sink)
    : config_(config), env_(config.env, std::move(series), std::move(cache)), sink_(std::move(sink)) {}

void Session::flush_episode() {
  if (episode_open_ && sink_) sink_(env_.trace());
  episode_open_ = false;
}

std::string Session::handle(const std::string& frame) {
  try {
    return dispatch(frame);
  } catch (const ProtocolError& e) {
    return error_frame(e.what()).dump();
  } catch (const json::exception& e) {
    return error_frame(std::string("malformed frame: ") + e.what()).dump();
  } catch (const EmptySafeSetError& e) {
    return error_frame(std::string("ill-posed scenario: ") + e.what()).dump();
  } catch (const std::exception& e) {
    return error_frame(e.what()).dump();
  } catch (...) {
    return error_frame("internal error").dump();
  }
}

std::string Session::dispatch(const std::string& frame) {
  if (frame.size() > kMaxFrameBytes) throw ProtocolError("frame exceeds 1 MiB");
  if (closed_) throw ProtocolError("session is closed");
  json req;
  try {
    req = json::parse(frame);
  } catch (const json::parse_error&) {
    throw ProtocolError("frame is not valid JSON");
  }
  if (!req.is_object()) throw ProtocolError("frame must be a JSON object");
  if (req.contains("v") && !(req["v"].is_number_integer() && req["v"].get<long long>() == kProtocolVersion))
    throw ProtocolError("unsupported protocol version, expected 1");
  if (!req.contains("op") || !req["op"].is_string()) throw ProtocolError("missing string field 'op'");
  const std::string op = req["op"].get<std::string>();
  const GridParams& g = config_.env.grid;

  if (op == "reset") {
    // Non-negative integers parse as unsigned.
    if (!req.contains("seed") || !req["seed"].is_number_unsigned())
      throw ProtocolError("reset needs a non-negative integer 'seed'");
    const std::uint64_t seed = req["seed"].get<std::uint64_t>();
    std::size_t day = static_cast<std::size_t>(seed % env_.num_days());
    if (req.contains("day")) {
      const json& d = req["day"];
      if (!d.is_number_integer() || d.get<long long>() < 0 ||
          static_cast<std::size_t>(d.get<long long>()) >= env_.num_days())
        throw ProtocolError("'day' must be an integer in [0, " + std::to_string(env_.num_days()) + ")");
      day = static_cast<std::size_t>(d.get<long long>());
    }
    flush_episode();
    const Observation obs = env_.reset(day, seed);
    episode_open_ = true;
    return json{{"v", kProtocolVersion}, {"obs", obs.to_vector()}, {"day", day}, {"t", 0}}.dump();
  }

  if (op == "step") {
    if (!env_.active()) throw ProtocolError("no active episode, send reset first");
    if (!req.contains("action")) throw ProtocolError("step needs 'action'");
    const std::vector<double> a = finite_array(req["action"], "'action'");
    if (static_cast<Eigen::Index>(a.size()) != g.input_dim())
      throw ProtocolError("'action' must have " + std::to_string(g.input_dim()) + " entries, got " +
                          std::to_string(a.size()));
    const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
    const StepResult res = env_.step(Action::from_stacked(u, g.n()));
    json info = {{"correction", res.record.correction},
                 {"violation", res.record.violation},
                 {"cost", res.record.cost},
                 {"penalty", res.record.penalty},
                 {"shield_time", res.record.shield_time}};
    if (res.error.empty()) {
      info["safe_action"] = vector_json(res.record.safe.stacked());
    } else {
      info["safe_action"] = json::array();
      info["error"] = res.error;
    }
    json reply = {{"v", kProtocolVersion},
                  {"obs", res.obs.to_vector()},
                  {"reward", res.reward},
                  {"done", res.done},
                  {"info", info}};
    if (res.done) flush_episode();
    return reply.dump();
  }

  if (op == "describe") {
    return json{{"v", kProtocolVersion},
                {"n", g.n()},
                {"m", g.m()},
                {"action_dim", g.input_dim()},
                {"obs_layout", Observation::layout(g.n(), config_.env.forecast.horizons)},
                {"T", g.horizon_T},
                {"H", g.islanding_H},
                {"days", env_.num_days()},
                {"mode", to_string(config_.env.mode)}}
        .dump();
  }

  if (op == "close") {
    flush_episode();
    closed_ = true;
    return json{{"v", kProtocolVersion}, {"closed", true}}.dump();
  }

  throw ProtocolError("unknown op '" + op + "'");
}

}  // namespace gridshield
