// SPDX-License-Identifier: Apache-2.0
//
// Random shield instances and a sampling check of projection minimality.
// Physically meaningful actions are those where no storage charges and
// discharges at once, i.e. the union over storage modes of the projection
// feasible regions with the opposite split component pinned to zero. Each
// region is sampled by hit-and-run and the best distance is reported.
#pragma once

#include "support.hpp"

#include <gridshield/errors.hpp>
#include <gridshield/reach.hpp>
#include <gridshield/shield.hpp>

namespace gstest {

struct ShieldInstance {
  gridshield::GridParams params;
  gridshield::Action proposal;
  Eigen::VectorXd x;
  gridshield::ConstrainedZonotope target;
  double d = 0.0;
};

/// Storage state near the boundary of the current safe set, target the next
/// safe set, net load within what the markets can absorb.
inline std::optional<ShieldInstance> random_shield_instance(Rng& rng) {
  using namespace gridshield;
  const double tau = rng.coin() ? 1.0 / 60.0 : 0.25;
  ShieldInstance inst;
  inst.params = random_grid(rng, rng.integer(1, 3), rng.integer(1, 2), rng.integer(3, 20), tau);
  const GridParams& p = inst.params;
  double rate = 0.0;
  for (const auto& s : p.storages) rate += std::min(s.p_max, -s.p_min);
  const double sign = rng.coin() ? 1.0 : -1.0;
  std::vector<double> d_lower(static_cast<std::size_t>(p.islanding_H));
  for (double& v : d_lower) v = sign * rng.uniform(0.1, 0.6) * rate;
  SafeSetSequence seq;
  try {
    seq = compute_safe_sets(p, ForecastLowerBound{d_lower});
  } catch (const EmptySafeSetError&) {
    return std::nullopt;
  }
  const ConstrainedZonotope& now = seq.sets[0];
  const Eigen::VectorXd vertex = support_point(now, rng.gauss_vector(p.n())).point;
  const Eigen::VectorXd other = support_point(now, rng.gauss_vector(p.n())).point;
  const double lambda = rng.uniform(0.85, 1.0);
  inst.x = lambda * vertex + (1.0 - lambda) * other;
  inst.target = seq.sets[1];
  double market = 0.0;
  for (const auto& mk : p.markets) market += std::min(mk.p_max, -mk.p_min);
  inst.d = rng.uniform(-0.8, 0.8) * market;
  inst.proposal.p_storage.resize(p.n());
  inst.proposal.p_market.resize(p.m());
  for (Eigen::Index i = 0; i < p.n(); ++i)
    inst.proposal.p_storage[i] = 1.3 * rng.uniform(p.storages[static_cast<std::size_t>(i)].p_min,
                                                   p.storages[static_cast<std::size_t>(i)].p_max);
  for (Eigen::Index j = 0; j < p.m(); ++j)
    inst.proposal.p_market[j] = 1.3 * rng.uniform(p.markets[static_cast<std::size_t>(j)].p_min,
                                                  p.markets[static_cast<std::size_t>(j)].p_max);
  return inst;
}

struct SampledDistance {
  double best = std::numeric_limits<double>::infinity();
  int samples = 0;
  int regions = 0;
  double worst_residual = 0.0;
};

inline SampledDistance sample_safe_action_distances(const ShieldInstance& inst, Rng& rng, int samples) {
  using namespace gridshield;
  const Eigen::Index n = inst.params.n();
  std::vector<QuadraticProgram> regions;
  std::vector<Eigen::VectorXd> starts;
  for (int mask = 0; mask < (1 << n); ++mask) {
    ModePin pins(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      pins[static_cast<std::size_t>(i)] = (mask >> i) & 1 ? StorageMode::Charge : StorageMode::Discharge;
    QuadraticProgram qp = build_projection_qp(inst.proposal, inst.x, inst.target, inst.d, inst.params, pins);
    const std::optional<Eigen::VectorXd> start = interior_point(qp, rng, 12);
    if (!start) continue;
    regions.push_back(std::move(qp));
    starts.push_back(*start);
  }
  SampledDistance out;
  out.regions = static_cast<int>(regions.size());
  if (regions.empty()) return out;
  const int per_region = samples / out.regions;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const QuadraticProgram& qp = regions[r];
    const Eigen::Index k = qp.num_variables();
    const auto [lo, hi] = bounds_of(qp.bounds, k);
    HitAndRun sampler(Eigen::MatrixXd(qp.eq_lhs), qp.eq_rhs, Eigen::MatrixXd(qp.ineq_lhs), qp.ineq_rhs, lo, hi);
    sampler.start(starts[r]);
    const Eigen::MatrixXd map(qp.map);
    for (int s = 0; s < per_region; ++s) {
      if (!sampler.step(rng)) break;
      const double res = sampler.residual(sampler.point());
      // Samples are only trusted when they satisfy the region to solver accuracy.
      if (res > 1e-8) {
        out.worst_residual = std::max(out.worst_residual, res);
        continue;
      }
      out.best = std::min(out.best, (qp.target - map * sampler.point()).norm());
      ++out.samples;
    }
  }
  return out;
}

}  // namespace gstest
