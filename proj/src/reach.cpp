// SPDX-License-Identifier: Apache-2.0
#include <gridshield/errors.hpp>
#include <gridshield/reach.hpp>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gridshield {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

StorageMode islanding_mode(double d_lower) {
  return d_lower >= 0.0 ? StorageMode::Charge : StorageMode::Discharge;
}

namespace {

// Rate bound vector selected by the mode; market entries masked to zero.
VectorXd masked_bound(double d_lower, const GridParams& params) {
  const Index n = params.n();
  VectorXd v = VectorXd::Zero(params.input_dim());
  const bool charging = islanding_mode(d_lower) == StorageMode::Charge;
  for (Index i = 0; i < n; ++i)
    v[i] = charging ? params.storages[i].p_min : params.storages[i].p_max;
  return v;
}

}  // namespace

bool islanding_input_feasible(double d_lower, const GridParams& params) {
  const VectorXd v = masked_bound(d_lower, params);
  const double total = v.sum();
  // Need h*u = -d_lower with u between 0 and the selected bound.
  const double need = -d_lower;
  return islanding_mode(d_lower) == StorageMode::Charge ? need >= total : need <= total;
}

ConstrainedZonotope islanding_input_set(double d_lower, const GridParams& params) {
  const Index dim = params.input_dim();
  const VectorXd v = masked_bound(d_lower, params);  // h' o u_sel

  std::vector<Eigen::Triplet<double>> gen, con;
  for (Index i = 0; i < dim; ++i) {
    if (v[i] == 0.0) continue;
    gen.emplace_back(i, i, 0.5 * v[i]);
    con.emplace_back(0, i, 0.5 * v[i]);
  }
  SparseMatrix g(dim, dim), f(1, dim);
  g.setFromTriplets(gen.begin(), gen.end());
  f.setFromTriplets(con.begin(), con.end());
  VectorXd b(1);
  b[0] = -d_lower - 0.5 * v.sum();
  return ConstrainedZonotope(0.5 * v, std::move(g), std::move(f), std::move(b));
}

ConstrainedZonotope one_step_backward(const ConstrainedZonotope& x_next,
                                      const ConstrainedZonotope& u_island, const MatrixXd& A,
                                      const MatrixXd& B) {
  if (A.rows() != A.cols() || A.rows() != x_next.dimension())
    throw std::invalid_argument("one_step_backward: A must be square with the state dimension");
  if (B.rows() != A.rows() || B.cols() != u_island.dimension())
    throw std::invalid_argument("one_step_backward: B dimension mismatch");
  const MatrixXd a_inv = A.inverse();
  const ConstrainedZonotope shifted = linear_map(MatrixXd(-B), u_island);
  return linear_map(a_inv, minkowski_sum(x_next, shifted));
}

SafeSetSequence compute_safe_sets(const GridParams& params, const ForecastLowerBound& forecast,
                                  const SolverSettings& settings) {
  const int horizon = params.islanding_H;
  if (static_cast<int>(forecast.d_lower.size()) != horizon)
    throw std::invalid_argument("compute_safe_sets: forecast has " +
                                std::to_string(forecast.d_lower.size()) +
                                " values, islanding horizon is " + std::to_string(horizon));

  const ConstrainedZonotope limits = from_interval(charge_box(params));
  const MatrixXd A = build_A(params);

  SafeSetSequence seq;
  seq.forecast_used = forecast;
  seq.sets.resize(static_cast<std::size_t>(horizon) + 1);
  seq.sets[horizon] = limits;

  for (int t = horizon - 1; t >= 0; --t) {
    const double d = forecast.d_lower[t];
    if (!islanding_input_feasible(d, params))
      throw EmptySafeSetError(static_cast<std::size_t>(t),
                              "islanding input set is empty at step " + std::to_string(t) +
                                  ": storages cannot balance d_lower = " + std::to_string(d) +
                                  " kW");
    const std::vector<StorageMode> modes(params.storages.size(), islanding_mode(d));
    const ConstrainedZonotope pre = one_step_backward(
        seq.sets[t + 1], islanding_input_set(d, params), A, build_B(params, modes));
    // Box first: the result keeps only the box generators, which keeps the
    // constraint rows of later steps sparse.
    seq.sets[t] = intersect(limits, pre);
  }

  if (is_empty(seq.sets[0], settings)) {
    // Emptiness propagates backward, so the empty indices form a prefix.
    int lo = 0, hi = horizon;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (is_empty(seq.sets[mid], settings))
        lo = mid;
      else
        hi = mid;
    }
    throw EmptySafeSetError(static_cast<std::size_t>(lo),
                            "safe set is empty at index " + std::to_string(lo) +
                                " of the islanding window");
  }
  return seq;
}

SafeSetCache::SafeSetCache(GridParams params, SolverSettings settings, std::size_t capacity)
    : params_(std::move(params)), settings_(settings), capacity_(std::max<std::size_t>(1, capacity)) {}

std::shared_ptr<const SafeSetSequence> SafeSetCache::get(const ForecastLowerBound& forecast) {
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(forecast.d_lower);
    if (it != entries_.end()) {
      ++hits_;
      return it->second;
    }
    ++misses_;
  }
  auto seq = std::make_shared<const SafeSetSequence>(compute_safe_sets(params_, forecast, settings_));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.emplace(forecast.d_lower, seq);
  if (inserted) {
    order_.push_back(forecast.d_lower);
    while (order_.size() > capacity_) {
      entries_.erase(order_.front());
      order_.erase(order_.begin());
    }
  }
  return it->second;
}

std::size_t SafeSetCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t SafeSetCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

}  // namespace gridshield
