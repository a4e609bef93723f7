// SPDX-License-Identifier: Apache-2.0
//
// Exogenous time series: household load, PV generation and market prices,
// one value per step, in blocks of T steps per day.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gridshield {

struct ExogenousSeries {
  std::vector<double> load;        // kW, <= 0
  std::vector<double> generation;  // kW, >= 0
  std::vector<double> price_buy;   // currency/kWh
  std::vector<double> price_sell;  // currency/kWh

  std::size_t size() const { return load.size(); }
  /// Net load d = load + generation at step t.
  double net(std::size_t t) const { return load[t] + generation[t]; }
  std::size_t num_days(std::size_t steps_per_day) const;

  void append(const ExogenousSeries& other);
  /// Steps [first, first + count).
  ExogenousSeries slice(std::size_t first, std::size_t count) const;
};

/// Throws DataError naming the first offending series and index.
void validate(const ExogenousSeries& series);

/// CSV with header `t_min,load_kw,pv_kw,price_buy,price_sell`. Throws
/// DataError with the 1-based data row on any schema, number or sign problem.
ExogenousSeries load_series(const std::string& path);
ExogenousSeries parse_series(const std::string& text);

/// Writes the CSV read by load_series; t_min counts from 0.
void save_series(const std::string& path, const ExogenousSeries& series);
std::string format_series(const ExogenousSeries& series);

/// Shape parameters of the synthetic household day.
struct SynthProfile {
  double pv_peak_min = 2.5;       // kW
  double pv_peak_max = 4.0;       // kW
  double pv_sunrise = 6.0;        // hour of day
  double pv_sunset = 20.0;        // hour of day
  double cloud_depth = 0.3;       // max fractional PV dip from passing clouds
  double load_base = 0.3;         // kW
  double morning_peak = 1.2;      // kW above base
  double morning_hour = 7.5;
  double morning_width = 1.0;     // hours
  double evening_peak = 2.0;      // kW above base
  double evening_hour = 19.0;
  double evening_width = 1.5;     // hours
  double load_scale_jitter = 0.2; // day-level load scale drawn from 1 +- jitter
  double load_noise = 0.05;       // kW, per-step uniform jitter
  double price_buy = 0.30;
  double price_sell = 0.06;
};

/// "default" or "stress" (weak PV, heavy evening demand). Throws
/// std::invalid_argument on other names.
SynthProfile synth_profile(const std::string& name);

/// One day of `steps` samples, `tau` hours apart, starting at midnight.
/// Deterministic for (seed, day_index, profile).
ExogenousSeries synth_day(std::uint64_t seed, std::size_t day_index, const SynthProfile& profile,
                          std::size_t steps = 1440, double tau = 1.0 / 60.0);

ExogenousSeries synth_days(std::uint64_t seed, std::size_t n_days, const SynthProfile& profile,
                           std::size_t steps = 1440, double tau = 1.0 / 60.0);

}  // namespace gridshield
