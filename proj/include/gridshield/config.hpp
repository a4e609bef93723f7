// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: one JSON document, every key optional, unknown keys
// rejected. Defaults reproduce the two-battery residential case study.
#pragma once

#include <gridshield/environment.hpp>
#include <gridshield/exogenous.hpp>

#include <cstdint>
#include <string>

namespace gridshield {

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" | "csv"
  std::string path;                  // csv only
  std::string profile = "default";   // synthetic only
  // Constant synthetic prices, taken from the first market's phi_B / phi_S.
  double price_buy = 0.30;
  double price_sell = 0.06;
};

struct Config {
  EnvConfig env;
  DataConfig data;
  std::uint64_t seed = 0;
  std::string output_dir = "gridshield-out";
};

Config default_config();

/// Throws ConfigError with the offending key path.
Config parse_config(const std::string& json_text);
Config load_config(const std::string& path);

/// Full document including defaults; parse_config(config_to_json(c)) == c.
std::string config_to_json(const Config& config, int indent = 2);

/// RFC 7386 merge patch of `patch_json` onto the config's JSON form.
Config apply_overrides(const Config& config, const std::string& patch_json);

/// The exogenous series the config points at. Synthetic data gets
/// `min_days` days; CSV data must hold at least that many whole days.
ExogenousSeries load_data(const Config& config, std::size_t min_days);

}  // namespace gridshield
