// SPDX-License-Identifier: Apache-2.0
//
// Micro-grid MDP: one episode is one day of T steps. Each step shields the
// proposed action into the safe set of the next step (recomputed from the
// newest forecasts), advances the storages, and books cost and penalty.
//
// Observation vector layout, version 1:
//   e_1 .. e_n                      charge states, kWh
//   p_load, p_gen                   current load (<= 0) and generation, kW
//   price_buy, price_sell           current prices
//   load forecasts at each horizon, then generation, price_buy, price_sell
#pragma once

#include <gridshield/exogenous.hpp>
#include <gridshield/forecast.hpp>
#include <gridshield/grid_model.hpp>
#include <gridshield/reach.hpp>
#include <gridshield/shield.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace gridshield {

inline constexpr int kObservationVersion = 1;

enum class ShieldMode { Full, Baseline };

/// "full_shield" / "baseline_shield". Throws std::invalid_argument.
ShieldMode shield_mode_from_string(const std::string& name);
const char* to_string(ShieldMode mode);

struct EnvConfig {
  GridParams grid = case_study_params();
  ForecastModel forecast;
  ShieldSettings shield;
  ShieldMode mode = ShieldMode::Full;
  double alpha = 0.5;              // cost weight
  double beta = 0.5;               // correction weight
  double violation_penalty = 1.0;  // baseline only, per kWh of violation
};

struct Observation {
  Eigen::VectorXd e;
  double p_load = 0.0;
  double p_gen = 0.0;
  double price_buy = 0.0;
  double price_sell = 0.0;
  HorizonForecasts forecasts;

  double net_load() const { return p_load + p_gen; }
  std::vector<double> to_vector() const;
  /// Field names matching to_vector, e.g. "e_1", "load_fc_120".
  static std::vector<std::string> layout(Eigen::Index n, const std::vector<int>& horizons);
};

struct StepRecord {
  int t = 0;
  Eigen::VectorXd e;       // before the step
  double d = 0.0;          // net load
  Action proposed;
  Action safe;
  Eigen::VectorXd e_next;
  double correction = 0.0;
  double cost = 0.0;
  double penalty = 0.0;    // beta * correction (+ baseline violation penalty)
  double reward = 0.0;
  double violation = 0.0;  // of e_next against the next safe set
  double shield_time = 0.0;
  double balance_residual = 0.0;
  double rate_excess = 0.0;
  double containment_residual = 0.0;
  double complementarity = 0.0;
  bool mode_pinned = false;
};

struct EpisodeTrace {
  std::size_t day = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd e0;
  std::vector<StepRecord> steps;
  bool aborted = false;
  std::string abort_reason;

  double total_cost() const;
  double total_penalty() const;
  double total_reward() const;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  StepRecord record;
  /// Non-empty when the episode was aborted at this step.
  std::string error;
};

struct RewardTerms {
  double penalty = 0.0;
  double reward = 0.0;
};
/// penalty = beta * correction (+ violation_penalty * max(0, violation) in
/// baseline mode); reward = -alpha * cost - penalty.
RewardTerms reward_terms(const EnvConfig& config, double cost, double correction, double violation);

/// Builds the days' series with the following day appended (wrapping to the
/// first day) so forecasts near midnight have data to look at.
ExogenousSeries episode_series(const ExogenousSeries& all, std::size_t day, std::size_t steps_per_day);

class MicrogridEnv {
public:
  /// `series` holds whole days of grid.horizon_T steps. The cache may be
  /// shared between environments with the same grid and solver settings.
  MicrogridEnv(EnvConfig config, ExogenousSeries series,
               std::shared_ptr<SafeSetCache> cache = nullptr);

  /// Throws EmptySafeSetError when the start of the day is ill-posed.
  Observation reset(std::size_t day, std::uint64_t seed);

  /// Throws std::logic_error when no episode is active. Shield infeasibility
  /// and empty safe sets end the episode; see StepResult::error.
  StepResult step(const Action& a);

  bool active() const { return active_; }
  int time() const { return t_; }
  std::size_t num_days() const;
  const EnvConfig& config() const { return config_; }
  const EpisodeTrace& trace() const { return trace_; }
  const Observation& observation() const { return obs_; }
  const Eigen::VectorXd& state() const { return e_; }
  /// The safe set at the current step (the one e was certified against).
  const ConstrainedZonotope& safe_set() const { return safe_now_; }

  /// Safe set at step `first` from the forecasts known at `t_know`.
  std::shared_ptr<const SafeSetSequence> safe_sets(std::size_t t_know, std::size_t first) const;

private:
  Observation observe() const;

  EnvConfig config_;
  ExogenousSeries all_;
  std::shared_ptr<SafeSetCache> cache_;

  ExogenousSeries episode_;
  std::optional<Forecaster> forecaster_;
  Eigen::VectorXd e_;
  Observation obs_;
  ConstrainedZonotope safe_now_;
  EpisodeTrace trace_;
  int t_ = 0;
  bool active_ = false;
};

/// Deterministic draw from a non-empty constrained zonotope: a random LP
/// vertex mixed with the centroid of the axis-extreme points.
Eigen::VectorXd sample_state(const ConstrainedZonotope& z, std::mt19937_64& rng,
                             const SolverSettings& settings = {});

class Agent {
public:
  virtual ~Agent() = default;
  virtual void reset(std::uint64_t /*seed*/) {}
  virtual Action act(const Observation& obs, const GridParams& params) = 0;
};

/// Uniform over the rate boxes; balance is left to the shield.
class RandomAdmissibleAgent : public Agent {
public:
  void reset(std::uint64_t seed) override;
  Action act(const Observation& obs, const GridParams& params) override;

private:
  std::mt19937_64 rng_;
};

/// Storages absorb the net load evenly within their rates, the markets cover
/// what is left.
class GreedyAgent : public Agent {
public:
  Action act(const Observation& obs, const GridParams& params) override;
};

/// "random" (alias "random_admissible") or "greedy". Throws std::invalid_argument.
std::unique_ptr<Agent> make_agent(const std::string& name);

/// Table rows in order, with the names used in reports.
struct Metrics {
  std::vector<std::pair<std::string, double>> rows;
  std::vector<std::pair<std::string, double>> audit;

  double get(const std::string& name) const;
};

Metrics compute_metrics(const std::vector<EpisodeTrace>& traces);

struct RunResult {
  std::vector<EpisodeTrace> traces;
  Metrics metrics;
};

/// Runs `agent` over `days` (indices into the series) with per-day episode
/// seeds derived from `seed`.
RunResult run_days(const EnvConfig& config, const ExogenousSeries& series, Agent& agent,
                   const std::vector<std::size_t>& days, std::uint64_t seed);

}  // namespace gridshield
