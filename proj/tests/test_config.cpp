// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <gridshield/config.hpp>
#include <gridshield/errors.hpp>

#include <cstdio>
#include <fstream>
#include <string>

using namespace gridshield;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool same(const Config& a, const Config& b) { return config_to_json(a) == config_to_json(b); }

}  // namespace

TEST_CASE("defaults describe the two-battery household") {
  const Config c = default_config();
  CHECK(c.env.grid.n() == 2);
  CHECK(c.env.grid.m() == 1);
  CHECK(c.env.grid.storages[0].e_min == 0.34);
  CHECK(c.env.grid.storages[1].e_max == 6.54);
  CHECK(c.env.grid.storages[0].p_max == 3.5);
  CHECK(c.env.grid.markets[0].p_max == 5.0);
  CHECK(c.env.alpha == 0.5);
  CHECK(c.env.beta == 0.5);
  CHECK(c.env.mode == ShieldMode::Full);
  CHECK(c.data.price_buy == 0.30);
  CHECK(c.data.price_sell == 0.06);
  CHECK(same(parse_config("{}"), c));
}

TEST_CASE("unknown keys and wrong types name the offending path") {
  CHECK(error_of(R"({"gird": {}})").find("gird") != std::string::npos);
  CHECK(error_of(R"({"grid": {"storages": [{"eta": 1}]}})").find("grid.storages[0].eta") != std::string::npos);
  CHECK(error_of(R"({"grid": {"tau": "fast"}})").find("grid.tau") != std::string::npos);
  CHECK(error_of(R"({"grid": {"T": 1.5}})").find("grid.T") != std::string::npos);
  CHECK(error_of(R"({"seed": -1})").find("seed") != std::string::npos);
  CHECK(error_of(R"({"shield": {"mode": "off"}})").find("shield") != std::string::npos);
  CHECK(error_of(R"({"forecast": {"growth_law": "cubic"}})").find("forecast") != std::string::npos);
  CHECK(error_of(R"({"forecast": {"horizons": [1.5]}})").find("forecast.horizons") != std::string::npos);
  CHECK(error_of(R"({"data": {"source": "csv"}})").find("data.path") != std::string::npos);
  CHECK(error_of(R"({"grid": {"markets": []}})").find("market") != std::string::npos);
  CHECK(error_of(R"({"grid": {"markets": [{"phi_B": -1}]}})").find("prices") != std::string::npos);
  CHECK(error_of(R"({"grid": {"storages": [{"eta_D": 2}]}})") != "");
  CHECK(error_of(R"({"solver": {"tol_feas": 0}})") != "");
  CHECK(error_of("[1, 2]") != "");
  CHECK(error_of("{not json") != "");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), std::exception);
}

TEST_CASE("documents round trip through JSON") {
  const Config c = parse_config(R"({
    "seed": 12345678901234,
    "output_dir": "runs/a",
    "grid": {"tau": 0.25, "T": 96, "H": 8,
             "storages": [{"p_bar_B": 2, "p_underline_B": -2, "e_bar_B": 9, "e_underline_B": 1,
                           "eta_D": 0.9, "eta_C": 0.95, "mu": 0.0, "gamma": 0.2}],
             "markets": [{"p_bar_M": 4, "p_underline_M": -3, "phi_B": 0.4, "phi_S": 0.1},
                         {"p_bar_M": 1, "p_underline_M": -1, "phi_B": 0.9, "phi_S": 0.0}]},
    "forecast": {"growth_law": "linear", "horizons": [4, 8], "islanding_source": "shared",
                 "smoothing_window": 6},
    "shield": {"mode": "baseline_shield", "alpha": 0.7, "beta": 0.2, "violation_penalty": 3},
    "solver": {"tol_feas": 1e-9, "max_iterations": 80},
    "data": {"profile": "stress"}
  })");
  CHECK(c.seed == 12345678901234ULL);
  CHECK(c.env.grid.n() == 1);
  CHECK(c.env.grid.m() == 2);
  CHECK(c.env.grid.storages[0].gamma == 0.2);
  CHECK(c.env.forecast.growth_law == GrowthLaw::Linear);
  CHECK(c.env.forecast.islanding_source == IslandingSource::Shared);
  CHECK(c.env.mode == ShieldMode::Baseline);
  CHECK(c.env.shield.solver.max_iterations == 80);
  CHECK(c.data.price_buy == 0.4);
  CHECK(c.data.price_sell == 0.1);
  CHECK(c.data.profile == "stress");
  const Config back = parse_config(config_to_json(c));
  CHECK(same(back, c));
  CHECK(back.env.grid.tau == c.env.grid.tau);
  CHECK(back.env.forecast.horizons == c.env.forecast.horizons);
  CHECK(same(parse_config(config_to_json(default_config(), -1)), default_config()));
}

TEST_CASE("merge patches override single keys") {
  const Config base = default_config();
  const Config c = apply_overrides(base, R"({"seed": 9, "shield": {"beta": 0.1}})");
  CHECK(c.seed == 9);
  CHECK(c.env.beta == 0.1);
  CHECK(c.env.alpha == base.env.alpha);
  CHECK(c.env.grid.n() == 2);
  // null removes the key and so restores the default.
  const Config reset = apply_overrides(c, R"({"shield": {"beta": null}})");
  CHECK(reset.env.beta == 0.5);
  CHECK_THROWS_AS(apply_overrides(base, R"({"shield": {"gamma": 1}})"), ConfigError);
}

TEST_CASE("load_data") {
  Config c = default_config();
  const ExogenousSeries s = load_data(c, 2);
  CHECK(s.size() == 2 * 1440);
  CHECK(s.price_buy[0] == 0.30);

  const std::string path = "gridshield_test_series.csv";
  {
    ExogenousSeries small = s.slice(0, 1440);
    std::ofstream(path) << format_series(small);
  }
  c.data.source = "csv";
  c.data.path = path;
  CHECK(load_data(c, 1).size() == 1440);
  CHECK_THROWS(load_data(c, 2));
  std::remove(path.c_str());
}
