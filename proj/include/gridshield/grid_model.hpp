// SPDX-License-Identifier: Apache-2.0
//
// Physical and economic model of the micro grid.
//
// Sign convention: injection into the grid is positive, withdrawal negative.
// A storage with p > 0 discharges, p < 0 charges. A market with p > 0 imports
// (pays the buying price), p < 0 exports (earns the selling price). Loads
// carry negative power and generators positive; d = sum(loads) + sum(gen).
//
// Units: kW, kWh, hours, currency per kWh.
#pragma once

#include <gridshield/czono.hpp>

#include <Eigen/Dense>

#include <vector>

namespace gridshield {

struct StorageParams {
  double p_max = 3.5;    // max discharge rate, kW (>= 0)
  double p_min = -3.5;   // max charge rate, kW (<= 0)
  double e_max = 6.54;   // kWh
  double e_min = 0.34;   // kWh
  double eta_d = 0.98;   // discharge efficiency
  double eta_c = 0.98;   // charge efficiency
  double mu = 0.012;     // self-discharge per hour
  double gamma = 0.15;   // degradation cost, currency/kWh
};

struct MarketParams {
  double p_max = 5.0;    // import limit, kW
  double p_min = -5.0;   // export limit, kW
};

struct GridParams {
  std::vector<StorageParams> storages;
  std::vector<MarketParams> markets;
  double tau = 1.0 / 60.0;  // hours per step
  int horizon_T = 1440;
  int islanding_H = 60;

  Eigen::Index n() const { return static_cast<Eigen::Index>(storages.size()); }
  Eigen::Index m() const { return static_cast<Eigen::Index>(markets.size()); }
  Eigen::Index input_dim() const { return n() + m(); }
  Eigen::Index split_dim() const { return 2 * n() + m(); }
};

/// Two identical batteries and one grid connection with the case-study values.
GridParams case_study_params();

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const GridParams& params);

enum class StorageMode { Discharge = 1, Charge = -1 };

/// Diagonal, entries 1 - mu_i*tau.
Eigen::MatrixXd build_A(const GridParams& params);

/// n x (n+m); storage diagonal -tau/eta_d (discharge) or -tau*eta_c (charge),
/// market columns zero.
Eigen::MatrixXd build_B(const GridParams& params, const std::vector<StorageMode>& modes);

/// Same, from +1 / -1 mode codes. Throws std::invalid_argument on other values.
Eigen::MatrixXd build_B(const GridParams& params, const std::vector<int>& mode_codes);

/// n x (2n+m) for the split input [p_discharge; p_charge; p_market].
Eigen::MatrixXd build_B_split(const GridParams& params);

/// (4n+2m) x (2n+m) rate polytope W*u_split <= w.
struct RatePolytope {
  Eigen::MatrixXd W;
  Eigen::VectorXd w;
};
RatePolytope build_rate_polytope(const GridParams& params);

/// h*u + d with h = 1 normally and market entries masked while islanding.
double balance_residual(const Eigen::VectorXd& u, double d, bool islanding, Eigen::Index n);

double storage_cost(double p, const StorageParams& storage, double tau);

double market_cost(double p, double price_buy, double price_sell, double tau);

/// One step of the piecewise storage dynamics; efficiency picked per storage
/// from the sign of its power (p >= 0 uses the discharge branch). Entries
/// beyond the first n of u are ignored. Bounds are not enforced here.
Eigen::VectorXd step_dynamics(const Eigen::VectorXd& e, const Eigen::VectorXd& u,
                              const GridParams& params);

/// The admissible state set [e_min, e_max] per storage.
IntervalBox charge_box(const GridParams& params);

/// The rate box [p_min, p_max] over the (n+m)-dimensional input.
IntervalBox rate_box(const GridParams& params);

}  // namespace gridshield
