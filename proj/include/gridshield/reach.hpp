// SPDX-License-Identifier: Apache-2.0
//
// Time-dependent islanding safe sets by backward reachability.
//
// Starting from the admissible charge box at the end of the islanding window,
// each backward step applies the inverse storage dynamics to the set plus the
// negated reachable input contribution, then intersects with the charge box.
// The storages are assumed to act consistently (all charge or all discharge)
// and the per-step net load is the lower bound of the forecast.
#pragma once

#include <gridshield/czono.hpp>
#include <gridshield/grid_model.hpp>

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace gridshield {

/// Lower bound of the net load forecast, one value per islanding step.
struct ForecastLowerBound {
  std::vector<double> d_lower;
};

struct SafeSetSequence {
  /// H+1 sets; sets[0] is the safe set at the start of the window, sets[H]
  /// the admissible charge box.
  std::vector<ConstrainedZonotope> sets;
  ForecastLowerBound forecast_used;

  const ConstrainedZonotope& initial() const { return sets.front(); }
};

/// Islanding admissible input set of dimension n+m. Uses the charge rate
/// bounds when d_lower >= 0 and the discharge bounds otherwise; market
/// components are pinned to zero. May be empty when the storages cannot
/// balance d_lower; see islanding_input_feasible.
ConstrainedZonotope islanding_input_set(double d_lower, const GridParams& params);

/// Whether the storages alone can balance d_lower in the consistent mode.
bool islanding_input_feasible(double d_lower, const GridParams& params);

/// Storage mode implied by the sign of the forecast lower bound.
StorageMode islanding_mode(double d_lower);

/// A^-1 (X_next + (-B) U).
ConstrainedZonotope one_step_backward(const ConstrainedZonotope& x_next,
                                      const ConstrainedZonotope& u_island,
                                      const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Throws EmptySafeSetError with the largest empty index when the scenario
/// is ill-posed, std::invalid_argument when the forecast length is not H.
SafeSetSequence compute_safe_sets(const GridParams& params, const ForecastLowerBound& forecast,
                                  const SolverSettings& settings = {});

/// Thread-safe memo of compute_safe_sets keyed on the forecast vector, for a
/// fixed set of grid parameters. Evicts the oldest entries past capacity.
class SafeSetCache {
public:
  SafeSetCache(GridParams params, SolverSettings settings, std::size_t capacity = 256);

  std::shared_ptr<const SafeSetSequence> get(const ForecastLowerBound& forecast);

  std::size_t hits() const;
  std::size_t misses() const;

private:
  GridParams params_;
  SolverSettings settings_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::map<std::vector<double>, std::shared_ptr<const SafeSetSequence>> entries_;
  std::vector<std::vector<double>> order_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace gridshield
