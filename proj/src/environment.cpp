// SPDX-License-Identifier: Apache-2.0
#include <gridshield/environment.hpp>
#include <gridshield/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gridshield {

using Eigen::Index;
using Eigen::VectorXd;

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t day, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(day), static_cast<std::uint32_t>(day >> 32), tag};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

enum SeedTag : std::uint32_t { kForecastSeed = 11, kInitialStateSeed = 12, kAgentSeed = 13 };

double rate_excess(const Action& a, const GridParams& p) {
  double worst = 0.0;
  for (Index i = 0; i < p.n(); ++i) {
    const double v = a.p_storage[i];
    worst = std::max({worst, v - p.storages[i].p_max, p.storages[i].p_min - v});
  }
  for (Index j = 0; j < p.m(); ++j) {
    const double v = a.p_market[j];
    worst = std::max({worst, v - p.markets[j].p_max, p.markets[j].p_min - v});
  }
  return worst;
}

}  // namespace

ShieldMode shield_mode_from_string(const std::string& name) {
  if (name == "full_shield" || name == "full") return ShieldMode::Full;
  if (name == "baseline_shield" || name == "baseline") return ShieldMode::Baseline;
  throw std::invalid_argument("shield mode must be 'full_shield' or 'baseline_shield', got '" +
                              name + "'");
}

const char* to_string(ShieldMode mode) {
  return mode == ShieldMode::Full ? "full_shield" : "baseline_shield";
}

std::vector<double> Observation::to_vector() const {
  std::vector<double> v(e.data(), e.data() + e.size());
  v.insert(v.end(), {p_load, p_gen, price_buy, price_sell});
  for (const auto* series : {&forecasts.load, &forecasts.generation, &forecasts.price_buy,
                             &forecasts.price_sell})
    v.insert(v.end(), series->begin(), series->end());
  return v;
}

std::vector<std::string> Observation::layout(Index n, const std::vector<int>& horizons) {
  std::vector<std::string> names;
  for (Index i = 0; i < n; ++i) names.push_back("e_" + std::to_string(i + 1));
  names.insert(names.end(), {"p_load", "p_gen", "price_buy", "price_sell"});
  for (const char* stem : {"load_fc_", "gen_fc_", "price_buy_fc_", "price_sell_fc_"})
    for (int h : horizons) names.push_back(stem + std::to_string(h));
  return names;
}

double EpisodeTrace::total_cost() const {
  double s = 0.0;
  for (const StepRecord& r : steps) s += r.cost;
  return s;
}

RewardTerms reward_terms(const EnvConfig& config, double cost, double correction, double violation) {
  RewardTerms t;
  t.penalty = config.beta * correction;
  if (config.mode == ShieldMode::Baseline) t.penalty += config.violation_penalty * std::max(0.0, violation);
  t.reward = -config.alpha * cost - t.penalty;
  return t;
}

double EpisodeTrace::total_penalty() const {
  double s = 0.0;
  for (const StepRecord& r : steps) s += r.penalty;
  return s;
}

double EpisodeTrace::total_reward() const {
  double s = 0.0;
  for (const StepRecord& r : steps) s += r.reward;
  return s;
}

ExogenousSeries episode_series(const ExogenousSeries& all, std::size_t day, std::size_t steps) {
  const std::size_t days = all.num_days(steps);
  if (day >= days)
    throw std::out_of_range("day " + std::to_string(day) + " requested, series has " +
                            std::to_string(days) + " full days");
  ExogenousSeries s = all.slice(day * steps, steps);
  s.append(all.slice(((day + 1) % days) * steps, steps));
  return s;
}

MicrogridEnv::MicrogridEnv(EnvConfig config, ExogenousSeries series,
                           std::shared_ptr<SafeSetCache> cache)
    : config_(std::move(config)), all_(std::move(series)), cache_(std::move(cache)) {
  validate(config_.grid);
  validate(config_.forecast);
  validate(all_);
  if (num_days() == 0)
    throw DataError("series has " + std::to_string(all_.size()) +
                    " steps, less than one day of " + std::to_string(config_.grid.horizon_T));
  for (int h : config_.forecast.horizons)
    if (h > config_.grid.horizon_T)
      throw std::invalid_argument("forecast horizon " + std::to_string(h) +
                                  " exceeds the day length");
  if (config_.grid.islanding_H > config_.grid.horizon_T)
    throw std::invalid_argument("islanding horizon exceeds the day length");
  if (!cache_) cache_ = std::make_shared<SafeSetCache>(config_.grid, config_.shield.solver, 64);
}

std::size_t MicrogridEnv::num_days() const {
  return all_.num_days(static_cast<std::size_t>(config_.grid.horizon_T));
}

std::shared_ptr<const SafeSetSequence> MicrogridEnv::safe_sets(std::size_t t_know,
                                                               std::size_t first) const {
  if (!forecaster_) throw std::logic_error("safe_sets: no episode has been reset");
  return cache_->get(forecaster_->islanding_window(t_know, first, config_.grid.islanding_H));
}

Observation MicrogridEnv::observe() const {
  Observation o;
  const std::size_t t = static_cast<std::size_t>(t_);
  o.e = e_;
  o.p_load = episode_.load[t];
  o.p_gen = episode_.generation[t];
  o.price_buy = episode_.price_buy[t];
  o.price_sell = episode_.price_sell[t];
  o.forecasts = forecaster_->at_horizons(t);
  return o;
}

Observation MicrogridEnv::reset(std::size_t day, std::uint64_t seed) {
  active_ = false;
  episode_ = episode_series(all_, day, static_cast<std::size_t>(config_.grid.horizon_T));
  forecaster_.emplace(episode_, config_.forecast, derive_seed(seed, day, kForecastSeed));
  t_ = 0;

  const auto seq = safe_sets(0, 0);
  safe_now_ = seq->initial();
  std::mt19937_64 rng(derive_seed(seed, day, kInitialStateSeed));
  e_ = sample_state(safe_now_, rng, config_.shield.solver);

  trace_ = EpisodeTrace{};
  trace_.day = day;
  trace_.seed = seed;
  trace_.e0 = e_;
  obs_ = observe();
  active_ = true;
  return obs_;
}

StepResult MicrogridEnv::step(const Action& a) {
  if (!active_) throw std::logic_error("step called without an active episode");
  const GridParams& p = config_.grid;
  if (a.p_storage.size() != p.n() || a.p_market.size() != p.m())
    throw std::invalid_argument("action must have " + std::to_string(p.n()) +
                                " storage and " + std::to_string(p.m()) + " market entries");
  if (!a.p_storage.allFinite() || !a.p_market.allFinite())
    throw std::invalid_argument("action entries must be finite");

  const std::size_t t = static_cast<std::size_t>(t_);
  StepResult res;
  StepRecord& r = res.record;
  r.t = t_;
  r.e = e_;
  r.d = episode_.net(t);
  r.proposed = a;

  auto abort = [&](const std::string& why) {
    active_ = false;
    trace_.aborted = true;
    trace_.abort_reason = "step " + std::to_string(t_) + ": " + why;
    res.error = trace_.abort_reason;
    res.done = true;
    res.obs = obs_;
    return res;
  };

  ConstrainedZonotope safe_next;
  SafeAction sa;
  try {
    safe_next = safe_sets(t, t + 1)->initial();
    sa = config_.mode == ShieldMode::Full
             ? project_action(a, e_, safe_next, r.d, p, config_.shield)
             : project_action_baseline(a, e_, r.d, p, config_.shield);
  } catch (const EmptySafeSetError& ex) {
    return abort(std::string("ill-posed: ") + ex.what());
  } catch (const ShieldInfeasibleError& ex) {
    return abort(std::string("shield infeasible: ") + ex.what());
  } catch (const SolverError& ex) {
    return abort(std::string("solver failure: ") + ex.what());
  }

  r.safe = sa.action;
  r.correction = sa.correction;
  r.shield_time = sa.shield_time;
  r.complementarity = sa.complementarity;
  r.mode_pinned = sa.mode_pinned;
  r.e_next = step_dynamics(e_, sa.action.stacked(), p);
  r.balance_residual = balance_residual(sa.action.stacked(), r.d, false, p.n());
  r.rate_excess = rate_excess(sa.action, p);
  const ConstrainedZonotope target =
      config_.mode == ShieldMode::Full ? safe_next : from_interval(charge_box(p));
  r.containment_residual = certificate_residual(target, sa.factors, r.e_next);

  double cost = 0.0;
  for (Index i = 0; i < p.n(); ++i) cost += storage_cost(sa.action.p_storage[i], p.storages[i], p.tau);
  for (Index j = 0; j < p.m(); ++j)
    cost += market_cost(sa.action.p_market[j], episode_.price_buy[t], episode_.price_sell[t], p.tau);
  r.cost = cost;
  try {
    r.violation = safety_violation(r.e_next, safe_next, config_.shield.solver);
  } catch (const std::exception& ex) {
    return abort(std::string("solver failure: ") + ex.what());
  }
  const RewardTerms terms = reward_terms(config_, r.cost, r.correction, r.violation);
  r.penalty = terms.penalty;
  r.reward = terms.reward;

  e_ = r.e_next;
  safe_now_ = std::move(safe_next);
  ++t_;
  trace_.steps.push_back(r);
  res.reward = r.reward;
  res.done = t_ >= p.horizon_T;
  if (res.done) active_ = false;
  obs_ = observe();
  res.obs = obs_;
  return res;
}

VectorXd sample_state(const ConstrainedZonotope& z, std::mt19937_64& rng,
                      const SolverSettings& settings) {
  const Index n = z.dimension();
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VectorXd dir(n);
  for (Index i = 0; i < n; ++i) dir[i] = normal(rng);
  const VectorXd vertex = support_point(z, dir, settings).point;
  VectorXd center = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    VectorXd axis = VectorXd::Zero(n);
    axis[i] = 1.0;
    center += support_point(z, axis, settings).point;
    center += support_point(z, -axis, settings).point;
  }
  center /= static_cast<double>(2 * n);
  const double w = unit(rng);
  return w * vertex + (1.0 - w) * center;
}

void RandomAdmissibleAgent::reset(std::uint64_t seed) { rng_.seed(seed); }

Action RandomAdmissibleAgent::act(const Observation&, const GridParams& p) {
  Action a{VectorXd(p.n()), VectorXd(p.m())};
  for (Index i = 0; i < p.n(); ++i)
    a.p_storage[i] = std::uniform_real_distribution<double>(p.storages[i].p_min,
                                                            p.storages[i].p_max)(rng_);
  for (Index j = 0; j < p.m(); ++j)
    a.p_market[j] =
        std::uniform_real_distribution<double>(p.markets[j].p_min, p.markets[j].p_max)(rng_);
  return a;
}

Action GreedyAgent::act(const Observation& obs, const GridParams& p) {
  const double d = obs.net_load();
  Action a{VectorXd(p.n()), VectorXd::Zero(p.m())};
  double rest = -d;
  for (Index i = 0; i < p.n(); ++i) {
    a.p_storage[i] = std::clamp(-d / static_cast<double>(p.n()), p.storages[i].p_min,
                                p.storages[i].p_max);
    rest -= a.p_storage[i];
  }
  for (Index j = 0; j < p.m(); ++j)
    a.p_market[j] = std::clamp(rest / static_cast<double>(p.m()), p.markets[j].p_min,
                               p.markets[j].p_max);
  return a;
}

std::unique_ptr<Agent> make_agent(const std::string& name) {
  if (name == "random" || name == "random_admissible") return std::make_unique<RandomAdmissibleAgent>();
  if (name == "greedy") return std::make_unique<GreedyAgent>();
  throw std::invalid_argument("unknown agent '" + name + "' (random, greedy)");
}

double Metrics::get(const std::string& name) const {
  for (const auto& [k, v] : rows)
    if (k == name) return v;
  for (const auto& [k, v] : audit)
    if (k == name) return v;
  throw std::out_of_range("no metric named '" + name + "'");
}

Metrics compute_metrics(const std::vector<EpisodeTrace>& traces) {
  const double inf = std::numeric_limits<double>::infinity();
  double max_time = 0.0, sum_time = 0.0, min_e = inf, max_e = -inf, max_violation = -inf;
  double sum_cost = 0.0, sum_penalty = 0.0;
  double max_balance = 0.0, max_rate = 0.0, max_containment = 0.0, max_comp = 0.0;
  std::size_t steps = 0, pinned = 0, aborted = 0;
  for (const EpisodeTrace& tr : traces) {
    if (tr.e0.size() > 0) {
      min_e = std::min(min_e, tr.e0.minCoeff());
      max_e = std::max(max_e, tr.e0.maxCoeff());
    }
    for (const StepRecord& r : tr.steps) {
      max_time = std::max(max_time, r.shield_time);
      sum_time += r.shield_time;
      min_e = std::min(min_e, r.e_next.minCoeff());
      max_e = std::max(max_e, r.e_next.maxCoeff());
      max_violation = std::max(max_violation, r.violation);
      max_balance = std::max(max_balance, std::abs(r.balance_residual));
      max_rate = std::max(max_rate, r.rate_excess);
      max_containment = std::max(max_containment, r.containment_residual);
      max_comp = std::max(max_comp, r.complementarity);
      pinned += r.mode_pinned ? 1 : 0;
    }
    steps += tr.steps.size();
    sum_cost += tr.total_cost();
    sum_penalty += tr.total_penalty();
    aborted += tr.aborted ? 1 : 0;
  }
  const double days = traces.empty() ? 1.0 : static_cast<double>(traces.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Metrics m;
  m.rows = {{"max exec time", max_time},
            {"mean exec time", steps ? sum_time / static_cast<double>(steps) : nan},
            {"min charge state", min_e},
            {"max charge state", max_e},
            {"max safety violation", steps ? max_violation : nan},
            {"mean cost/day", sum_cost / days},
            {"mean penalty/day", sum_penalty / days}};
  m.audit = {{"steps", static_cast<double>(steps)},
             {"days", static_cast<double>(traces.size())},
             {"aborted episodes", static_cast<double>(aborted)},
             {"max balance residual", max_balance},
             {"max rate excess", max_rate},
             {"max containment residual", max_containment},
             {"max complementarity", max_comp},
             {"mode pinned steps", static_cast<double>(pinned)}};
  return m;
}

RunResult run_days(const EnvConfig& config, const ExogenousSeries& series, Agent& agent,
                   const std::vector<std::size_t>& days, std::uint64_t seed) {
  MicrogridEnv env(config, series);
  RunResult out;
  for (std::size_t day : days) {
    agent.reset(derive_seed(seed, day, kAgentSeed));
    Observation obs = env.reset(day, seed);
    bool done = false;
    while (!done) {
      StepResult res = env.step(agent.act(obs, config.grid));
      obs = std::move(res.obs);
      done = res.done;
    }
    out.traces.push_back(env.trace());
  }
  out.metrics = compute_metrics(out.traces);
  return out;
}

}  // namespace gridshield
