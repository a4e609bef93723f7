// SPDX-License-Identifier: Apache-2.0
#include <gridshield/config.hpp>
#include <gridshield/errors.hpp>

#include "json.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace gridshield {

using nlohmann::json;

namespace {

// Reads typed members of one JSON object and rejects keys nobody asked for.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  void allow(std::initializer_list<const char*> keys) {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) throw ConfigError("unknown key '" + child(it.key()) + "'");
    }
  }

  void number(const char* key, double& out) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError("'" + child(key) + "' must be a number");
    out = v.get<double>();
  }

  void integer(const char* key, int& out) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError("'" + child(key) + "' must be an integer");
    out = v.get<int>();
  }

  void unsigned64(const char* key, std::uint64_t& out) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError("'" + child(key) + "' must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void string(const char* key, std::string& out) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError("'" + child(key) + "' must be a string");
    out = v.get<std::string>();
  }

  const json* member(const char* key) const { return j_.contains(key) ? &j_.at(key) : nullptr; }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  std::string where() const { return path_.empty() ? "configuration" : "'" + path_ + "'"; }
  const json& j_;
  std::string path_;
};

StorageParams read_storage(const json& j, const std::string& path) {
  StorageParams s;
  Reader r(j, path);
  r.allow({"p_bar_B", "p_underline_B", "e_bar_B", "e_underline_B", "eta_D", "eta_C", "mu", "gamma"});
  r.number("p_bar_B", s.p_max);
  r.number("p_underline_B", s.p_min);
  r.number("e_bar_B", s.e_max);
  r.number("e_underline_B", s.e_min);
  r.number("eta_D", s.eta_d);
  r.number("eta_C", s.eta_c);
  r.number("mu", s.mu);
  r.number("gamma", s.gamma);
  return s;
}

struct MarketEntry {
  MarketParams params;
  double phi_b = 0.30, phi_s = 0.06;
};

MarketEntry read_market(const json& j, const std::string& path) {
  MarketEntry m;
  Reader r(j, path);
  r.allow({"p_bar_M", "p_underline_M", "phi_B", "phi_S"});
  r.number("p_bar_M", m.params.p_max);
  r.number("p_underline_M", m.params.p_min);
  r.number("phi_B", m.phi_b);
  r.number("phi_S", m.phi_s);
  if (m.phi_b < 0.0 || m.phi_s < 0.0) throw ConfigError("'" + path + "' prices must be >= 0");
  return m;
}

// Synthetic prices live with the first market; keep them next to the config.
struct Prices {
  double buy = 0.30, sell = 0.06;
};

Config from_json(const json& root) {
  Config c = default_config();
  Prices prices;
  Reader top(root, "");
  top.allow({"grid", "forecast", "shield", "solver", "data", "seed", "output_dir"});
  top.unsigned64("seed", c.seed);
  top.string("output_dir", c.output_dir);

  GridParams& g = c.env.grid;
  if (const json* jg = top.member("grid")) {
    Reader r(*jg, "grid");
    r.allow({"tau", "T", "H", "storages", "markets"});
    r.number("tau", g.tau);
    r.integer("T", g.horizon_T);
    r.integer("H", g.islanding_H);
    if (const json* js = r.member("storages")) {
      if (!js->is_array()) throw ConfigError("'grid.storages' must be an array");
      g.storages.clear();
      for (std::size_t i = 0; i < js->size(); ++i)
        g.storages.push_back(read_storage((*js)[i], "grid.storages[" + std::to_string(i) + "]"));
    }
    if (const json* jm = r.member("markets")) {
      if (!jm->is_array()) throw ConfigError("'grid.markets' must be an array");
      g.markets.clear();
      for (std::size_t i = 0; i < jm->size(); ++i) {
        const MarketEntry e = read_market((*jm)[i], "grid.markets[" + std::to_string(i) + "]");
        g.markets.push_back(e.params);
        if (i == 0) prices = {e.phi_b, e.phi_s};
      }
    }
  }
  c.data.price_buy = prices.buy;
  c.data.price_sell = prices.sell;

  ForecastModel& f = c.env.forecast;
  if (const json* jf = top.member("forecast")) {
    Reader r(*jf, "forecast");
    r.allow({"smoothing_window", "smoothing_passes", "base_amplitude_gen", "base_amplitude_load",
             "growth_coefficient", "growth_law", "horizons", "islanding_source"});
    r.integer("smoothing_window", f.smoothing_window);
    r.integer("smoothing_passes", f.smoothing_passes);
    r.number("base_amplitude_gen", f.base_amplitude_gen);
    r.number("base_amplitude_load", f.base_amplitude_load);
    r.number("growth_coefficient", f.growth_coefficient);
    std::string law = to_string(f.growth_law), source = to_string(f.islanding_source);
    r.string("growth_law", law);
    r.string("islanding_source", source);
    try {
      f.growth_law = growth_law_from_string(law);
      f.islanding_source = islanding_source_from_string(source);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("forecast: ") + e.what());
    }
    if (const json* jh = r.member("horizons")) {
      if (!jh->is_array()) throw ConfigError("'forecast.horizons' must be an array");
      f.horizons.clear();
      for (const json& h : *jh) {
        if (!h.is_number_integer()) throw ConfigError("'forecast.horizons' must hold integers");
        f.horizons.push_back(h.get<int>());
      }
    }
  }

  if (const json* js = top.member("shield")) {
    Reader r(*js, "shield");
    r.allow({"mode", "alpha", "beta", "violation_penalty", "complementarity_tol"});
    std::string mode = to_string(c.env.mode);
    r.string("mode", mode);
    try {
      c.env.mode = shield_mode_from_string(mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("shield: ") + e.what());
    }
    r.number("alpha", c.env.alpha);
    r.number("beta", c.env.beta);
    r.number("violation_penalty", c.env.violation_penalty);
    r.number("complementarity_tol", c.env.shield.complementarity_tol);
  }

  if (const json* js = top.member("solver")) {
    Reader r(*js, "solver");
    r.allow({"tol_feas", "max_iterations"});
    r.number("tol_feas", c.env.shield.solver.tol_feas);
    r.integer("max_iterations", c.env.shield.solver.max_iterations);
  }

  if (const json* jd = top.member("data")) {
    Reader r(*jd, "data");
    r.allow({"source", "path", "profile"});
    r.string("source", c.data.source);
    r.string("path", c.data.path);
    r.string("profile", c.data.profile);
  }

  // Semantic checks.
  try {
    validate(g);
    validate(f);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (g.markets.empty()) throw ConfigError("grid.markets: at least one market is required");
  if (!(c.env.alpha >= 0.0) || !(c.env.beta >= 0.0) || !(c.env.violation_penalty >= 0.0))
    throw ConfigError("shield: alpha, beta and violation_penalty must be >= 0");
  if (!(c.env.shield.solver.tol_feas > 0.0) || c.env.shield.solver.max_iterations < 1)
    throw ConfigError("solver: tol_feas must be > 0 and max_iterations >= 1");
  if (c.data.source != "synthetic" && c.data.source != "csv")
    throw ConfigError("data.source must be 'synthetic' or 'csv', got '" + c.data.source + "'");
  if (c.data.source == "csv" && c.data.path.empty())
    throw ConfigError("data.path is required when data.source is 'csv'");
  if (c.data.source == "synthetic") {
    try {
      synth_profile(c.data.profile);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("data.profile: ") + e.what());
    }
  }
  for (int h : f.horizons)
    if (h > g.horizon_T) throw ConfigError("forecast.horizons must not exceed grid.T");
  if (g.islanding_H > g.horizon_T) throw ConfigError("grid.H must not exceed grid.T");
  return c;
}

json to_json_value(const Config& c) {
  const GridParams& g = c.env.grid;
  json storages = json::array(), markets = json::array();
  for (const StorageParams& s : g.storages)
    storages.push_back({{"p_bar_B", s.p_max}, {"p_underline_B", s.p_min}, {"e_bar_B", s.e_max},
                        {"e_underline_B", s.e_min}, {"eta_D", s.eta_d}, {"eta_C", s.eta_c},
                        {"mu", s.mu}, {"gamma", s.gamma}});
  for (const MarketParams& m : g.markets)
    markets.push_back({{"p_bar_M", m.p_max}, {"p_underline_M", m.p_min},
                       {"phi_B", c.data.price_buy}, {"phi_S", c.data.price_sell}});
  const ForecastModel& f = c.env.forecast;
  return {
      {"grid",
       {{"tau", g.tau}, {"T", g.horizon_T}, {"H", g.islanding_H}, {"storages", storages},
        {"markets", markets}}},
      {"forecast",
       {{"smoothing_window", f.smoothing_window},
        {"smoothing_passes", f.smoothing_passes},
        {"base_amplitude_gen", f.base_amplitude_gen},
        {"base_amplitude_load", f.base_amplitude_load},
        {"growth_coefficient", f.growth_coefficient},
        {"growth_law", to_string(f.growth_law)},
        {"horizons", f.horizons},
        {"islanding_source", to_string(f.islanding_source)}}},
      {"shield",
       {{"mode", to_string(c.env.mode)},
        {"alpha", c.env.alpha},
        {"beta", c.env.beta},
        {"violation_penalty", c.env.violation_penalty},
        {"complementarity_tol", c.env.shield.complementarity_tol}}},
      {"solver",
       {{"tol_feas", c.env.shield.solver.tol_feas},
        {"max_iterations", c.env.shield.solver.max_iterations}}},
      {"data", {{"source", c.data.source}, {"path", c.data.path}, {"profile", c.data.profile}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir}};
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
}

}  // namespace

Config default_config() { return Config{}; }

Config parse_config(const std::string& json_text) {
  try {
    return from_json(parse_text(json_text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const Config& config, int indent) {
  return to_json_value(config).dump(indent);
}

Config apply_overrides(const Config& config, const std::string& patch_json) {
  json doc = to_json_value(config);
  doc.merge_patch(parse_text(patch_json));
  try {
    return from_json(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
}

ExogenousSeries load_data(const Config& c, std::size_t min_days) {
  const GridParams& g = c.env.grid;
  const std::size_t steps = static_cast<std::size_t>(g.horizon_T);
  if (c.data.source == "synthetic") {
    SynthProfile profile = synth_profile(c.data.profile);
    profile.price_buy = c.data.price_buy;
    profile.price_sell = c.data.price_sell;
    return synth_days(c.seed, std::max<std::size_t>(min_days, 1), profile, steps, g.tau);
  }
  ExogenousSeries s = load_series(c.data.path);
  const std::size_t days = s.num_days(steps);
  if (days < std::max<std::size_t>(min_days, 1))
    throw DataError("'" + c.data.path + "' holds " + std::to_string(days) + " whole days of " +
                    std::to_string(steps) + " steps, " + std::to_string(min_days) + " needed");
  return s;
}

}  // namespace gridshield
