// SPDX-License-Identifier: Apache-2.0
#include <gridshield/forecast.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace gridshield {

namespace {

enum Stream : std::uint32_t { kObsLoad = 1, kObsGen = 2, kIslandLoad = 3, kIslandGen = 4 };

}  // namespace

void validate(const ForecastModel& m) {
  if (m.smoothing_window < 1) throw std::invalid_argument("smoothing_window must be >= 1");
  if (m.smoothing_passes < 0) throw std::invalid_argument("smoothing_passes must be >= 0");
  if (!(m.base_amplitude_gen >= 0.0) || !(m.base_amplitude_load >= 0.0))
    throw std::invalid_argument("noise amplitudes must be >= 0");
  if (!(m.growth_coefficient >= 1.0)) throw std::invalid_argument("growth_coefficient must be >= 1");
  for (int h : m.horizons)
    if (h < 0) throw std::invalid_argument("forecast horizons must be >= 0");
}

GrowthLaw growth_law_from_string(const std::string& name) {
  if (name == "compound") return GrowthLaw::Compound;
  if (name == "linear") return GrowthLaw::Linear;
  throw std::invalid_argument("growth_law must be 'compound' or 'linear', got '" + name + "'");
}

IslandingSource islanding_source_from_string(const std::string& name) {
  if (name == "independent") return IslandingSource::Independent;
  if (name == "shared") return IslandingSource::Shared;
  throw std::invalid_argument("islanding_source must be 'independent' or 'shared', got '" +
                              name + "'");
}

const char* to_string(GrowthLaw law) {
  return law == GrowthLaw::Compound ? "compound" : "linear";
}

const char* to_string(IslandingSource source) {
  return source == IslandingSource::Independent ? "independent" : "shared";
}

double noise_amplitude(double base, int k, const ForecastModel& model) {
  if (model.growth_law == GrowthLaw::Compound)
    return base * std::pow(model.growth_coefficient, k);
  return base * (1.0 + (model.growth_coefficient - 1.0) * k);
}

std::vector<double> moving_average(const std::vector<double>& v, int window, int passes) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(v.size());
  const std::ptrdiff_t before = window / 2, after = window - window / 2 - 1;
  std::vector<double> cur = v, next(v.size());
  std::vector<double> prefix(v.size() + 1);
  for (int p = 0; p < passes; ++p) {
    prefix[0] = 0.0;
    for (std::ptrdiff_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + cur[i];
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - before);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + after);
      next[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
    cur.swap(next);
  }
  return cur;
}

Forecaster::Forecaster(const ExogenousSeries& series, ForecastModel model, std::uint64_t seed)
    : truth_(series), model_(std::move(model)), seed_(seed) {
  validate(model_);
  validate(truth_);
  const int w = model_.smoothing_window, p = model_.smoothing_passes;
  load_ = moving_average(series.load, w, p);
  gen_ = moving_average(series.generation, w, p);
  price_buy_ = moving_average(series.price_buy, w, p);
  price_sell_ = moving_average(series.price_sell, w, p);
}

std::vector<double> Forecaster::noise(std::size_t t_know, std::uint32_t stream,
                                      std::size_t count) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(t_know), stream};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> out(count);
  for (double& x : out) x = unit(rng);
  return out;
}

HorizonForecasts Forecaster::at_horizons(std::size_t t_know) const {
  const std::size_t nh = model_.horizons.size();
  const auto xi_load = noise(t_know, kObsLoad, nh);
  const auto xi_gen = noise(t_know, kObsGen, nh);
  HorizonForecasts f;
  for (std::size_t j = 0; j < nh; ++j) {
    const int h = model_.horizons[j];
    const std::size_t s = t_know + static_cast<std::size_t>(h);
    if (s >= size())
      throw std::out_of_range("forecast horizon " + std::to_string(h) + " at step " +
                              std::to_string(t_know) + " leaves the series (length " +
                              std::to_string(size()) + ")");
    f.load.push_back(std::min(
        0.0, load_[s] + noise_amplitude(model_.base_amplitude_load, h, model_) * xi_load[j]));
    f.generation.push_back(std::max(
        0.0, gen_[s] + noise_amplitude(model_.base_amplitude_gen, h, model_) * xi_gen[j]));
    f.price_buy.push_back(price_buy_[s]);
    f.price_sell.push_back(price_sell_[s]);
  }
  return f;
}

ForecastLowerBound Forecaster::islanding_window(std::size_t t_know, std::size_t first,
                                                int count) const {
  if (first < t_know) throw std::invalid_argument("islanding_window: first step precedes t_know");
  if (count < 0 || first + static_cast<std::size_t>(count) > size())
    throw std::out_of_range("islanding window [" + std::to_string(first) + ", " +
                            std::to_string(first + count) + ") leaves the series (length " +
                            std::to_string(size()) + ")");
  const int k0 = static_cast<int>(first - t_know);
  auto amplitude = [&](int k) {
    return noise_amplitude(model_.base_amplitude_load, k, model_) +
           noise_amplitude(model_.base_amplitude_gen, k, model_);
  };

  ForecastLowerBound out;
  out.d_lower.resize(static_cast<std::size_t>(count));
  if (model_.islanding_source == IslandingSource::Independent) {
    const auto xi_load = noise(t_know, kIslandLoad, static_cast<std::size_t>(count));
    const auto xi_gen = noise(t_know, kIslandGen, static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const int k = k0 + i;
      const std::size_t s = first + static_cast<std::size_t>(i);
      const double load = std::min(
          0.0, load_[s] + noise_amplitude(model_.base_amplitude_load, k, model_) * xi_load[i]);
      const double gen = std::max(
          0.0, gen_[s] + noise_amplitude(model_.base_amplitude_gen, k, model_) * xi_gen[i]);
      out.d_lower[i] = load + gen - amplitude(k);
    }
    return out;
  }

  // Shared: interpolate the horizon forecasts, anchored at the measured net
  // load at t_know, and hold the last horizon flat beyond it.
  const HorizonForecasts hf = at_horizons(t_know);
  std::vector<std::pair<int, double>> knots{{0, truth_.net(t_know)}};
  std::vector<std::size_t> order(model_.horizons.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return model_.horizons[a] < model_.horizons[b]; });
  for (std::size_t j : order)
    if (model_.horizons[j] > 0) knots.emplace_back(model_.horizons[j], hf.load[j] + hf.generation[j]);
  for (int i = 0; i < count; ++i) {
    const int k = k0 + i;
    double value = knots.back().second;
    for (std::size_t j = 1; j < knots.size(); ++j) {
      if (k <= knots[j].first) {
        const auto [ka, va] = knots[j - 1];
        const auto [kb, vb] = knots[j];
        value = va + (vb - va) * static_cast<double>(k - ka) / static_cast<double>(kb - ka);
        break;
      }
    }
    out.d_lower[i] = value - amplitude(k);
  }
  return out;
}

}  // namespace gridshield
