// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// line fails. Every tolerance is pinned below.
#include "shield_oracle.hpp"
#include "support.hpp"

#include <gridshield/config.hpp>
#include <gridshield/environment.hpp>
#include <gridshield/errors.hpp>
#include <gridshield/reach.hpp>
#include <gridshield/shield.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

using namespace gridshield;
using gstest::Rng;

namespace {

constexpr double kViolationTol = 1e-6;
constexpr double kChargeTol = 1e-9;
constexpr double kOracleTol = 2e-3;
constexpr double kOraclePitch = 1e-3;
constexpr double kMinimalityTol = 1e-6;
constexpr double kBalanceTol = 1e-8;
constexpr double kRateTol = 1e-8;
constexpr double kContainmentTol = 1e-6;
constexpr double kHullTol = 1e-9;
constexpr double kMeanTimeLimit = 0.1;
constexpr double kMaxTimeLimit = 1.0;
constexpr double kUnitTol = 1e-9;
// Printed literals carry six decimals; they agree with the exact value to
// half a unit in the last place.
constexpr double kPrintedTol = 5e-7;

constexpr std::size_t kSafetyDays = 20;
constexpr int kOracleConfigs = 50;
constexpr int kMinimalityInstances = 100;
constexpr int kMinimalitySamples = 10000;
constexpr int kShrinkConfigs = 20;

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct StepAudit {
  double max_violation = -1e300;
  double min_e = 1e300, max_e = -1e300;
  double max_balance = 0.0, max_rate = 0.0, max_containment = 0.0;
  double sum_time = 0.0, max_time = 0.0;
  std::size_t steps = 0, aborted = 0;

  void add(const std::vector<EpisodeTrace>& traces) {
    for (const EpisodeTrace& tr : traces) {
      aborted += tr.aborted ? 1 : 0;
      min_e = std::min(min_e, tr.e0.minCoeff());
      max_e = std::max(max_e, tr.e0.maxCoeff());
      for (const StepRecord& r : tr.steps) {
        max_violation = std::max(max_violation, r.violation);
        min_e = std::min(min_e, r.e_next.minCoeff());
        max_e = std::max(max_e, r.e_next.maxCoeff());
        max_balance = std::max(max_balance, std::abs(r.balance_residual));
        max_rate = std::max(max_rate, r.rate_excess);
        max_containment = std::max(max_containment, r.containment_residual);
        sum_time += r.shield_time;
        max_time = std::max(max_time, r.shield_time);
        ++steps;
      }
    }
  }
};

// Safety, post-shield feasibility and performance share the case-study runs.
void case_study_runs() {
  const auto t0 = std::chrono::steady_clock::now();
  const Config cfg = default_config();
  const ExogenousSeries data = load_data(cfg, kSafetyDays);
  std::vector<std::size_t> days(kSafetyDays);
  for (std::size_t d = 0; d < kSafetyDays; ++d) days[d] = d;

  GreedyAgent greedy;
  const RunResult greedy_run = run_days(cfg.env, data, greedy, days, 2024);
  StepAudit safety;
  safety.add(greedy_run.traces);
  const double lo = cfg.env.grid.storages[0].e_min, hi = cfg.env.grid.storages[0].e_max;
  report("safety",
         safety.aborted == 0 && safety.max_violation <= kViolationTol && safety.min_e >= lo - kChargeTol &&
             safety.max_e <= hi + kChargeTol && safety.steps == kSafetyDays * 1440,
         fmt("greedy agent, %.0f days, %.0f steps, max violation %.3e, charge in [%.6f, ", kSafetyDays,
             static_cast<double>(safety.steps), safety.max_violation, safety.min_e) +
             fmt("%.6f], aborted %.0f", safety.max_e, static_cast<double>(safety.aborted)));

  // Random proposals are far from balanced and exercise the projection harder.
  RandomAdmissibleAgent random;
  const RunResult random_run = run_days(cfg.env, data, random, {0, 1, 2, 3, 4}, 99);
  StepAudit all = safety;
  all.add(random_run.traces);
  report("post-shield feasibility",
         all.aborted == 0 && all.max_balance <= kBalanceTol && all.max_rate <= kRateTol &&
             all.max_containment <= kContainmentTol,
         fmt("%.0f steps, max |balance| %.3e, max rate excess %.3e, max containment residual %.3e",
             static_cast<double>(all.steps), all.max_balance, all.max_rate, all.max_containment));

  const double mean = all.steps ? all.sum_time / static_cast<double>(all.steps) : INFINITY;
  report("performance", mean <= kMeanTimeLimit && all.max_time <= kMaxTimeLimit,
         fmt("mean shield time %.4f s, max %.4f s over %.0f steps (wall %.0f s)", mean, all.max_time,
             static_cast<double>(all.steps), seconds_since(t0)));
}

void oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst = 0.0;
  int compared = 0, empty_agree = 0, disagreements = 0;
  for (int trial = 0; trial < kOracleConfigs; ++trial) {
    const double tau = std::vector<double>{1.0 / 60.0, 0.25, 1.0}[static_cast<std::size_t>(rng.integer(0, 2))];
    const int H = rng.integer(1, 10);
    const GridParams p = gstest::random_grid(rng, 1, rng.integer(0, 2), H, tau);
    const StorageParams& s = p.storages[0];
    // Mixed-sign net load, scaled so the window moves at most the usable span.
    const double cap = 0.9 * (s.e_max - s.e_min) / (tau * H);
    std::vector<double> d(static_cast<std::size_t>(H));
    for (double& x : d) x = rng.uniform(-std::min(s.p_max, cap), std::min(-s.p_min, cap));
    const gstest::GridInterval oracle = gstest::forced_trajectory_oracle(s, tau, d, kOraclePitch);
    if (oracle.holes) ++disagreements;
    try {
      const IntervalBox h = interval_hull(compute_safe_sets(p, ForecastLowerBound{d}).initial());
      if (oracle.empty) {
        ++disagreements;
        continue;
      }
      worst = std::max({worst, std::abs(h.lower[0] - oracle.lower), std::abs(h.upper[0] - oracle.upper)});
      ++compared;
    } catch (const EmptySafeSetError&) {
      if (oracle.empty) ++empty_agree;
      else ++disagreements;
    }
  }
  report("oracle equivalence", disagreements == 0 && worst <= kOracleTol,
         fmt("%.0f configurations, %.0f hulls compared, %.0f empty in both, worst endpoint gap %.3e", kOracleConfigs,
             compared, empty_agree, worst) +
             fmt(", emptiness disagreements %.0f (%.1f s)", disagreements, seconds_since(t0)));
}

void projection_minimality() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2002);
  int instances = 0, draws = 0, unsampled = 0;
  double worst_gain = -INFINITY;
  long samples = 0;
  while (instances < kMinimalityInstances && draws < 20 * kMinimalityInstances) {
    ++draws;
    const auto inst = gstest::random_shield_instance(rng);
    if (!inst) continue;
    SafeAction sa;
    try {
      sa = project_action(inst->proposal, inst->x, inst->target, inst->d, inst->params);
    } catch (const ShieldInfeasibleError&) {
      continue;
    }
    const gstest::SampledDistance s = gstest::sample_safe_action_distances(*inst, rng, kMinimalitySamples);
    // Instances whose safe action set has no interior to sample are not evidence either way.
    if (s.samples == 0) {
      ++unsampled;
      continue;
    }
    ++instances;
    samples += s.samples;
    worst_gain = std::max(worst_gain, sa.correction - s.best);
  }
  report("projection minimality", instances == kMinimalityInstances && worst_gain <= kMinimalityTol,
         fmt("%.0f instances, %.0f feasible samples, largest improvement over the projection %.3e", instances,
             static_cast<double>(samples), worst_gain) +
             fmt(", %.0f instances without samples skipped (%.1f s)", unsampled, seconds_since(t0)));
}

void monotone_shrinkage() {
  Rng rng(3003);
  int checked = 0, empty = 0;
  double worst = 0.0;
  // Ill-posed draws have no sets to compare and are replaced.
  while (checked < kShrinkConfigs && empty < 10 * kShrinkConfigs) {
    const int n = rng.integer(1, 3);
    const GridParams p = gstest::random_grid(rng, n, rng.integer(1, 2), rng.integer(2, 20),
                                             rng.coin() ? 1.0 / 60.0 : 0.25);
    double rate = 0.0;
    for (const auto& s : p.storages) rate += std::min(s.p_max, -s.p_min);
    const double d = rng.uniform(-0.8, 0.8) * rate;
    SafeSetSequence seq;
    try {
      seq = compute_safe_sets(p, ForecastLowerBound{std::vector<double>(static_cast<std::size_t>(p.islanding_H), d)});
    } catch (const EmptySafeSetError&) {
      ++empty;
      continue;
    }
    for (std::size_t t = 0; t + 1 < seq.sets.size(); ++t) {
      const IntervalBox a = interval_hull(seq.sets[t]), b = interval_hull(seq.sets[t + 1]);
      worst = std::max({worst, (b.lower - a.lower).maxCoeff(), (a.upper - b.upper).maxCoeff()});
    }
    ++checked;
  }
  report("monotone shrinkage", checked == kShrinkConfigs && worst <= kHullTol,
         fmt("%.0f configurations, %.0f ill-posed draws replaced, largest hull excess %.3e", checked, empty, worst));
}

void baseline_contrast() {
  Config cfg = default_config();
  cfg.data.profile = "stress";
  const ExogenousSeries data = load_data(cfg, 1);
  GreedyAgent greedy;
  cfg.env.mode = ShieldMode::Full;
  const RunResult full = run_days(cfg.env, data, greedy, {0}, 7);
  cfg.env.mode = ShieldMode::Baseline;
  const RunResult base = run_days(cfg.env, data, greedy, {0}, 7);
  const double vf = full.metrics.get("max safety violation"), vb = base.metrics.get("max safety violation");
  const bool complete = full.metrics.get("aborted episodes") == 0 && base.metrics.get("aborted episodes") == 0;
  report("baseline contrast", complete && vb > 0.0 && vf <= kViolationTol,
         fmt("stress day, greedy agent, seed 7: baseline max violation %.3e kWh, full shield %.3e kWh", vb, vf));
}

void unit_equalities() {
  const GridParams p = case_study_params();
  const double tau = p.tau;
  double worst = 0.0, worst_printed = 0.0;
  auto exact = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  auto printed = [&](double got, double literal) { worst_printed = std::max(worst_printed, std::abs(got - literal)); };

  const Eigen::MatrixXd A = build_A(p);
  exact(A(0, 0), 0.9998);
  exact(A(1, 1), 1.0 - tau * 0.012);
  const Eigen::MatrixXd Bd = build_B(p, std::vector<int>{1, 1});
  const Eigen::MatrixXd Bc = build_B(p, std::vector<int>{-1, -1});
  exact(Bd(0, 0), -tau / 0.98);
  printed(Bd(0, 0), -0.017007);
  exact(Bc(0, 0), -tau * 0.98);
  printed(Bc(0, 0), -0.016333);

  GridParams one = p;
  one.storages.resize(1);
  const Eigen::VectorXd next = step_dynamics(Eigen::VectorXd::Constant(1, 5.0), Eigen::Vector2d(1.0, 0.0), one);
  exact(next[0], 5.0 - tau / 0.98 - tau * 0.012 * 5.0);
  printed(next[0], 4.981993);
  GridParams unit = one;
  unit.tau = 1.0;
  unit.storages[0].mu = 0.0;
  exact(step_dynamics(Eigen::VectorXd::Constant(1, 5.0), Eigen::Vector2d(-1.0, 0.0), unit)[0], 5.98);

  exact(storage_cost(3.0, p.storages[0], tau), 0.0075);
  exact(storage_cost(-3.0, p.storages[0], tau), 0.0075);
  exact(market_cost(2.0, 0.30, 0.06, tau), 0.01);
  exact(market_cost(-2.0, 0.30, 0.06, tau), 0.002);
  exact(market_cost(0.0, 0.30, 0.06, tau), 0.0);

  const EnvConfig env;
  exact(reward_terms(env, 0.01, 0.2, 0.0).reward, -0.105);
  report("unit equalities", worst <= kUnitTol && worst_printed <= kPrintedTol,
         fmt("largest deviation from exact arithmetic %.3e, from six-decimal literals %.3e", worst, worst_printed));
}

}  // namespace

int main() {
  unit_equalities();
  oracle_equivalence();
  monotone_shrinkage();
  projection_minimality();
  baseline_contrast();
  case_study_runs();
  std::printf("summary: %d of 8 criteria failed\n", failures);
  return failures ? 1 : 0;
}
