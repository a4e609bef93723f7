// SPDX-License-Identifier: Apache-2.0
#include <gridshield/errors.hpp>
#include <gridshield/exogenous.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gridshield {

namespace {

constexpr const char* kHeader = "t_min,load_kw,pv_kw,price_buy,price_sell";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& field, std::size_t row, const char* column) {
  std::size_t begin = field.find_first_not_of(" \t");
  std::size_t end = field.find_last_not_of(" \t");
  if (begin == std::string::npos)
    throw DataError("row " + std::to_string(row) + ": empty " + column);
  const char* first = field.data() + begin;
  const char* last = field.data() + end + 1;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw DataError("row " + std::to_string(row) + ": " + column + " is not a number: '" +
                    field + "'");
  if (!std::isfinite(v))
    throw DataError("row " + std::to_string(row) + ": " + column + " is not finite");
  return v;
}

}  // namespace

std::size_t ExogenousSeries::num_days(std::size_t steps_per_day) const {
  return steps_per_day == 0 ? 0 : size() / steps_per_day;
}

void ExogenousSeries::append(const ExogenousSeries& other) {
  load.insert(load.end(), other.load.begin(), other.load.end());
  generation.insert(generation.end(), other.generation.begin(), other.generation.end());
  price_buy.insert(price_buy.end(), other.price_buy.begin(), other.price_buy.end());
  price_sell.insert(price_sell.end(), other.price_sell.begin(), other.price_sell.end());
}

ExogenousSeries ExogenousSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) throw std::out_of_range("ExogenousSeries::slice past the end");
  auto cut = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + first, v.begin() + first + count);
  };
  return {cut(load), cut(generation), cut(price_buy), cut(price_sell)};
}

void validate(const ExogenousSeries& s) {
  const std::size_t n = s.load.size();
  if (s.generation.size() != n || s.price_buy.size() != n || s.price_sell.size() != n)
    throw DataError("series lengths differ");
  for (std::size_t t = 0; t < n; ++t) {
    const std::string at = " at step " + std::to_string(t);
    if (!std::isfinite(s.load[t]) || !std::isfinite(s.generation[t]) ||
        !std::isfinite(s.price_buy[t]) || !std::isfinite(s.price_sell[t]))
      throw DataError("non-finite value" + at);
    if (s.load[t] > 0.0) throw DataError("load must be <= 0" + at);
    if (s.generation[t] < 0.0) throw DataError("generation must be >= 0" + at);
    if (s.price_buy[t] < 0.0 || s.price_sell[t] < 0.0) throw DataError("negative price" + at);
  }
}

ExogenousSeries parse_series(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty series file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw DataError(std::string("bad header, expected '") + kHeader + "', got '" + line + "'");

  ExogenousSeries s;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != 5)
      throw DataError("row " + std::to_string(row) + ": expected 5 columns, got " +
                      std::to_string(fields.size()));
    parse_number(fields[0], row, "t_min");
    const double load = parse_number(fields[1], row, "load_kw");
    const double pv = parse_number(fields[2], row, "pv_kw");
    const double pb = parse_number(fields[3], row, "price_buy");
    const double ps = parse_number(fields[4], row, "price_sell");
    if (load > 0.0) throw DataError("row " + std::to_string(row) + ": load_kw must be <= 0");
    if (pv < 0.0) throw DataError("row " + std::to_string(row) + ": pv_kw must be >= 0");
    if (pb < 0.0 || ps < 0.0) throw DataError("row " + std::to_string(row) + ": negative price");
    s.load.push_back(load);
    s.generation.push_back(pv);
    s.price_buy.push_back(pb);
    s.price_sell.push_back(ps);
  }
  if (row == 0) throw DataError("series file has no data rows");
  return s;
}

ExogenousSeries load_series(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open series file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_series(buf.str());
}

std::string format_series(const ExogenousSeries& s) {
  validate(s);
  std::ostringstream out;
  out << kHeader << '\n' << std::setprecision(17);
  for (std::size_t t = 0; t < s.size(); ++t)
    out << t << ',' << s.load[t] << ',' << s.generation[t] << ',' << s.price_buy[t] << ','
        << s.price_sell[t] << '\n';
  return out.str();
}

void save_series(const std::string& path, const ExogenousSeries& series) {
  const std::string text = format_series(series);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write series file '" + path + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path + "'");
}

SynthProfile synth_profile(const std::string& name) {
  SynthProfile p;
  if (name == "default") return p;
  if (name == "stress") {
    p.pv_peak_min = 0.6;
    p.pv_peak_max = 1.2;
    p.load_base = 0.6;
    p.morning_peak = 1.5;
    p.evening_peak = 3.2;
    p.evening_hour = 18.5;
    p.evening_width = 2.5;
    p.load_scale_jitter = 0.1;
    return p;
  }
  throw std::invalid_argument("unknown synthetic profile '" + name + "' (default, stress)");
}

ExogenousSeries synth_day(std::uint64_t seed, std::size_t day_index, const SynthProfile& p,
                          std::size_t steps, double tau) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(day_index), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double pv_peak = p.pv_peak_min + (p.pv_peak_max - p.pv_peak_min) * unit(rng);
  const double load_scale = 1.0 + p.load_scale_jitter * (2.0 * unit(rng) - 1.0);
  // A few passing clouds, each a smooth dip.
  struct Cloud { double hour, width, depth; };
  std::vector<Cloud> clouds(3);
  for (Cloud& c : clouds)
    c = {p.pv_sunrise + (p.pv_sunset - p.pv_sunrise) * unit(rng), 0.2 + 0.8 * unit(rng),
         p.cloud_depth * unit(rng)};

  ExogenousSeries s;
  s.load.resize(steps);
  s.generation.resize(steps);
  s.price_buy.assign(steps, p.price_buy);
  s.price_sell.assign(steps, p.price_sell);
  const double daylight = p.pv_sunset - p.pv_sunrise;
  for (std::size_t t = 0; t < steps; ++t) {
    const double hour = std::fmod(static_cast<double>(t) * tau, 24.0);
    double pv = 0.0;
    if (hour > p.pv_sunrise && hour < p.pv_sunset) {
      const double phase = std::sin(std::numbers::pi * (hour - p.pv_sunrise) / daylight);
      double shade = 1.0;
      for (const Cloud& c : clouds) {
        const double z = (hour - c.hour) / c.width;
        shade -= c.depth * std::exp(-z * z);
      }
      pv = pv_peak * phase * phase * std::max(shade, 0.0);
    }
    const double zm = (hour - p.morning_hour) / p.morning_width;
    const double ze = (hour - p.evening_hour) / p.evening_width;
    const double demand = load_scale * (p.load_base + p.morning_peak * std::exp(-zm * zm) +
                                        p.evening_peak * std::exp(-ze * ze));
    const double jitter = p.load_noise * (2.0 * unit(rng) - 1.0);
    s.generation[t] = pv;
    s.load[t] = -std::max(demand + jitter, 0.0);
  }
  return s;
}

ExogenousSeries synth_days(std::uint64_t seed, std::size_t n_days, const SynthProfile& profile,
                           std::size_t steps, double tau) {
  ExogenousSeries all;
  for (std::size_t d = 0; d < n_days; ++d) all.append(synth_day(seed, d, profile, steps, tau));
  return all;
}

}  // namespace gridshield
