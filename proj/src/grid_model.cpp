// SPDX-License-Identifier: Apache-2.0
#include <gridshield/grid_model.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace gridshield {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

GridParams case_study_params() {
  GridParams p;
  p.storages = {StorageParams{}, StorageParams{}};
  p.markets = {MarketParams{}};
  return p;
}

void validate(const GridParams& params) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("GridParams: " + what); };
  if (params.storages.empty()) fail("at least one storage is required");
  if (!(params.tau > 0.0)) fail("tau must be positive");
  if (params.islanding_H < 1) fail("islanding_H must be >= 1");
  if (params.horizon_T < 1) fail("horizon_T must be >= 1");
  for (std::size_t i = 0; i < params.storages.size(); ++i) {
    const StorageParams& s = params.storages[i];
    const std::string tag = "storage " + std::to_string(i) + ": ";
    if (!(s.p_min <= 0.0 && 0.0 <= s.p_max)) fail(tag + "need p_min <= 0 <= p_max");
    if (!(0.0 <= s.e_min && s.e_min <= s.e_max)) fail(tag + "need 0 <= e_min <= e_max");
    if (!(s.eta_d > 0.0 && s.eta_d <= 1.0)) fail(tag + "eta_d must lie in (0, 1]");
    if (!(s.eta_c > 0.0 && s.eta_c <= 1.0)) fail(tag + "eta_c must lie in (0, 1]");
    if (!(s.mu >= 0.0 && s.mu <= 1.0)) fail(tag + "mu must lie in [0, 1]");
    if (!(s.mu * params.tau < 1.0)) fail(tag + "mu*tau must be < 1");
    if (!(s.gamma >= 0.0)) fail(tag + "gamma must be >= 0");
  }
  for (std::size_t i = 0; i < params.markets.size(); ++i) {
    const MarketParams& mk = params.markets[i];
    if (!(mk.p_min <= 0.0 && 0.0 <= mk.p_max))
      fail("market " + std::to_string(i) + ": need p_min <= 0 <= p_max");
  }
}

MatrixXd build_A(const GridParams& params) {
  const Index n = params.n();
  MatrixXd a = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) a(i, i) = 1.0 - params.storages[i].mu * params.tau;
  return a;
}

MatrixXd build_B(const GridParams& params, const std::vector<StorageMode>& modes) {
  const Index n = params.n();
  if (static_cast<Index>(modes.size()) != n)
    throw std::invalid_argument("build_B: one mode per storage required");
  MatrixXd b = MatrixXd::Zero(n, params.input_dim());
  for (Index i = 0; i < n; ++i) {
    const StorageParams& s = params.storages[i];
    b(i, i) = modes[i] == StorageMode::Discharge ? -params.tau / s.eta_d : -params.tau * s.eta_c;
  }
  return b;
}

MatrixXd build_B(const GridParams& params, const std::vector<int>& mode_codes) {
  std::vector<StorageMode> modes;
  modes.reserve(mode_codes.size());
  for (int code : mode_codes) {
    if (code == 1)
      modes.push_back(StorageMode::Discharge);
    else if (code == -1)
      modes.push_back(StorageMode::Charge);
    else
      throw std::invalid_argument("build_B: mode must be +1 (discharge) or -1 (charge), got " +
                                  std::to_string(code));
  }
  return build_B(params, modes);
}

MatrixXd build_B_split(const GridParams& params) {
  const Index n = params.n();
  MatrixXd b = MatrixXd::Zero(n, params.split_dim());
  for (Index i = 0; i < n; ++i) {
    const StorageParams& s = params.storages[i];
    b(i, i) = -params.tau / s.eta_d;
    b(i, n + i) = -params.tau * s.eta_c;
  }
  return b;
}

RatePolytope build_rate_polytope(const GridParams& params) {
  const Index n = params.n(), m = params.m();
  RatePolytope r;
  r.W = MatrixXd::Zero(4 * n + 2 * m, 2 * n + m);
  r.w = VectorXd::Zero(4 * n + 2 * m);
  for (Index i = 0; i < n; ++i) {
    const StorageParams& s = params.storages[i];
    r.W(i, i) = 1.0;              // p_dis <= p_max
    r.w[i] = s.p_max;
    r.W(n + i, n + i) = -1.0;     // p_chg >= p_min
    r.w[n + i] = -s.p_min;
    r.W(2 * n + i, i) = -1.0;     // p_dis >= 0
    r.W(3 * n + i, n + i) = 1.0;  // p_chg <= 0
  }
  for (Index j = 0; j < m; ++j) {
    const MarketParams& mk = params.markets[j];
    r.W(4 * n + j, 2 * n + j) = 1.0;
    r.w[4 * n + j] = mk.p_max;
    r.W(4 * n + m + j, 2 * n + j) = -1.0;
    r.w[4 * n + m + j] = -mk.p_min;
  }
  return r;
}

double balance_residual(const VectorXd& u, double d, bool islanding, Index n) {
  const Index len = islanding ? std::min(n, u.size()) : u.size();
  return u.head(len).sum() + d;
}

double storage_cost(double p, const StorageParams& storage, double tau) {
  return tau * storage.gamma * std::abs(p);
}

double market_cost(double p, double price_buy, double price_sell, double tau) {
  return p >= 0.0 ? tau * price_buy * p : tau * (-price_sell * p);
}

VectorXd step_dynamics(const VectorXd& e, const VectorXd& u, const GridParams& params) {
  const Index n = params.n();
  if (e.size() != n || u.size() < n)
    throw std::invalid_argument("step_dynamics: dimension mismatch");
  VectorXd next(n);
  for (Index i = 0; i < n; ++i) {
    const StorageParams& s = params.storages[i];
    const double p = u[i];
    const double eta = p >= 0.0 ? 1.0 / s.eta_d : s.eta_c;
    next[i] = e[i] - params.tau * eta * p - params.tau * s.mu * e[i];
  }
  return next;
}

IntervalBox charge_box(const GridParams& params) {
  const Index n = params.n();
  VectorXd lo(n), hi(n);
  for (Index i = 0; i < n; ++i) {
    lo[i] = params.storages[i].e_min;
    hi[i] = params.storages[i].e_max;
  }
  return IntervalBox(lo, hi);
}

IntervalBox rate_box(const GridParams& params) {
  const Index n = params.n(), m = params.m();
  VectorXd lo(n + m), hi(n + m);
  for (Index i = 0; i < n; ++i) {
    lo[i] = params.storages[i].p_min;
    hi[i] = params.storages[i].p_max;
  }
  for (Index j = 0; j < m; ++j) {
    lo[n + j] = params.markets[j].p_min;
    hi[n + j] = params.markets[j].p_max;
  }
  return IntervalBox(lo, hi);
}

}  // namespace gridshield
