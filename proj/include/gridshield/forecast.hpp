// SPDX-License-Identifier: Apache-2.0
//
// Synthetic forecasts: smoothed truth plus bounded uniform noise whose
// amplitude grows with the prediction offset.
#pragma once

#include <gridshield/exogenous.hpp>
#include <gridshield/reach.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace gridshield {

enum class GrowthLaw { Compound, Linear };
/// Where the islanding window's per-step lower bound comes from.
enum class IslandingSource { Independent, Shared };

struct ForecastModel {
  int smoothing_window = 144;
  int smoothing_passes = 2;
  double base_amplitude_gen = 0.05;   // kW
  double base_amplitude_load = 0.01;  // kW
  double growth_coefficient = 1.0014;
  GrowthLaw growth_law = GrowthLaw::Compound;
  std::vector<int> horizons{120, 240, 360, 480};
  IslandingSource islanding_source = IslandingSource::Independent;
};

/// Throws std::invalid_argument.
void validate(const ForecastModel& model);

GrowthLaw growth_law_from_string(const std::string& name);
IslandingSource islanding_source_from_string(const std::string& name);
const char* to_string(GrowthLaw law);
const char* to_string(IslandingSource source);

/// Noise amplitude at offset k: base*g^k (compound) or base*(1 + (g-1)k).
double noise_amplitude(double base, int k, const ForecastModel& model);

/// `passes` centered moving averages; the window spans offsets
/// [-window/2, window - window/2 - 1] and is truncated at the ends.
std::vector<double> moving_average(const std::vector<double>& v, int window, int passes);

/// Forecasts at the configured horizons, index-aligned with model.horizons.
struct HorizonForecasts {
  std::vector<double> load, generation, price_buy, price_sell;
};

class Forecaster {
public:
  Forecaster(const ExogenousSeries& series, ForecastModel model, std::uint64_t seed);

  const ForecastModel& model() const { return model_; }
  std::size_t size() const { return load_.size(); }
  const std::vector<double>& smoothed_load() const { return load_; }
  const std::vector<double>& smoothed_generation() const { return gen_; }

  /// Forecasts made at t_know for t_know + h. Throws std::out_of_range when a
  /// horizon leaves the series.
  HorizonForecasts at_horizons(std::size_t t_know) const;

  /// Lower bound of the net load for steps first .. first+count-1, made with
  /// knowledge at t_know <= first.
  ForecastLowerBound islanding_window(std::size_t t_know, std::size_t first, int count) const;

private:
  std::vector<double> noise(std::size_t t_know, std::uint32_t stream, std::size_t count) const;

  ExogenousSeries truth_;
  ForecastModel model_;
  std::uint64_t seed_;
  std::vector<double> load_, gen_, price_buy_, price_sell_;
};

}  // namespace gridshield
