// SPDX-License-Identifier: Apache-2.0
#include <gridshield/errors.hpp>
#include <gridshield/shield.hpp>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace gridshield {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

VectorXd Action::stacked() const {
  VectorXd u(p_storage.size() + p_market.size());
  u << p_storage, p_market;
  return u;
}

Action Action::from_stacked(const VectorXd& u, Index n) {
  if (n < 0 || n > u.size()) throw std::invalid_argument("Action::from_stacked: bad split");
  return Action{u.head(n), u.tail(u.size() - n)};
}

namespace {

void check_inputs(const Action& a, const VectorXd& x, const ConstrainedZonotope& target,
                  const GridParams& params) {
  if (a.p_storage.size() != params.n() || a.p_market.size() != params.m())
    throw std::invalid_argument("shield: action has " + std::to_string(a.p_storage.size()) +
                                "+" + std::to_string(a.p_market.size()) +
                                " entries, grid has " + std::to_string(params.n()) + "+" +
                                std::to_string(params.m()));
  if (x.size() != params.n() || target.dimension() != params.n())
    throw std::invalid_argument("shield: state/target dimension mismatch");
  if (!a.p_storage.allFinite() || !a.p_market.allFinite() || !x.allFinite())
    throw std::invalid_argument("shield: non-finite action or state");
}

std::string describe_failure(const VectorXd& x, const ConstrainedZonotope& target, double d,
                             const SolverSettings& settings) {
  std::ostringstream os;
  os << "no admissible action keeps the next charge state safe (d = " << d << " kW, x = [";
  for (Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "], target hull ";
  try {
    const IntervalBox hull = interval_hull(target, settings);
    for (Index i = 0; i < hull.dimension(); ++i)
      os << (i ? " x " : "") << "[" << hull.lower[i] << ", " << hull.upper[i] << "]";
  } catch (const EmptySetError&) {
    os << "empty";
  }
  os << ")";
  return os.str();
}

// Below this relaxed correction (kW) the proposal is checked as it stands.
constexpr double kNearlySafe = 1e-3;

double split_complementarity(const VectorXd& split, Index n) {
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) worst = std::max(worst, std::min(split[i], -split[n + i]));
  return worst;
}

struct Candidate {
  QpSolution solution;
  bool ok = false;
};

Candidate solve_candidate(const Action& a, const VectorXd& x, const ConstrainedZonotope& target,
                          double d, const GridParams& params, const ModePin& pins,
                          const SolverSettings& settings) {
  Candidate c;
  c.solution = solve_qp(build_projection_qp(a, x, target, d, params, pins), settings);
  if (c.solution.status == SolveStatus::NumericalFailure)
    throw SolverError(std::string("shield: projection QP failed (") +
                      to_string(c.solution.status) + ")");
  c.ok = c.solution.status == SolveStatus::Optimal;
  return c;
}

SafeAction finish(const QpSolution& sol, const Action& a, const ConstrainedZonotope& target,
                  double d, const GridParams& params) {
  const Index g = target.num_generators(), n = params.n(), m = params.m();
  SafeAction out;
  out.factors = sol.x.head(g);
  out.split_input = sol.x.tail(2 * n + m);
  out.complementarity = split_complementarity(out.split_input, n);
  VectorXd u(n + m);
  u.head(n) = out.split_input.head(n) + out.split_input.segment(n, n);
  u.tail(m) = out.split_input.tail(m);
  // The solver balances to its tolerance; the market absorbs the last bit
  // exactly when it has room, since it does not enter the state.
  const double r = u.sum() + d;
  for (Index j = 0; j < m && r != 0.0; ++j) {
    const double v = u[n + j] - r;
    if (v >= params.markets[j].p_min && v <= params.markets[j].p_max) {
      u[n + j] = v;
      out.split_input[2 * n + j] = v;
      break;
    }
  }
  out.action = Action::from_stacked(u, n);
  out.correction = (a.stacked() - u).norm();
  return out;
}

// The proposal itself when it is balanced, within rates and certified into
// the target. Interior-point iterates only approach a zero distance like the
// square root of the duality gap, so an already safe proposal is confirmed
// directly instead.
std::optional<SafeAction> accept_as_is(const Action& a, const VectorXd& x,
                                       const ConstrainedZonotope& target, double d,
                                       const GridParams& params, const SolverSettings& settings) {
  const Index n = params.n(), m = params.m();
  VectorXd u = a.stacked();
  const double r = u.sum() + d;
  if (std::abs(r) > settings.tol_feas) return std::nullopt;
  for (Index j = 0; j < m && r != 0.0; ++j) {
    const double v = u[n + j] - r;
    if (v >= params.markets[j].p_min && v <= params.markets[j].p_max) {
      u[n + j] = v;
      break;
    }
  }
  if (!rate_box(params).contains(u, 0.0)) return std::nullopt;

  const VectorXd next = step_dynamics(x, u, params);
  const Index g = target.num_generators(), q = target.num_constraints();
  LinearProgram lp;
  lp.objective = VectorXd::Zero(g);
  lp.eq_lhs.resize(n + q, g);
  std::vector<Triplet> eq;
  const SparseMatrix& gen = target.generators();
  for (Index k = 0; k < gen.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(gen, k); it; ++it) eq.emplace_back(it.row(), it.col(), it.value());
  const SparseMatrix& f = target.con_lhs();
  for (Index k = 0; k < f.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(f, k); it; ++it) eq.emplace_back(n + it.row(), it.col(), it.value());
  lp.eq_lhs.setFromTriplets(eq.begin(), eq.end());
  lp.eq_rhs.resize(n + q);
  lp.eq_rhs << next - target.center(), target.con_rhs();
  lp.ineq_lhs.resize(0, g);
  lp.ineq_rhs.resize(0);
  lp.bounds = VariableBounds{VectorXd::Constant(g, -1.0), VectorXd::Constant(g, 1.0)};
  const FeasibilityResult fr = find_feasible_point(lp, settings);
  if (!fr.feasible || fr.residual > settings.tol_feas) return std::nullopt;

  SafeAction out;
  out.action = Action::from_stacked(u, n);
  out.correction = (a.stacked() - u).norm();
  out.factors = fr.x;
  out.split_input = VectorXd::Zero(2 * n + m);
  for (Index i = 0; i < n; ++i) {
    out.split_input[i] = std::max(u[i], 0.0);
    out.split_input[n + i] = std::min(u[i], 0.0);
  }
  out.split_input.tail(m) = u.tail(m);
  return out;
}

}  // namespace

QuadraticProgram build_projection_qp(const Action& a, const VectorXd& x,
                                     const ConstrainedZonotope& target, double d,
                                     const GridParams& params, const ModePin& pins) {
  check_inputs(a, x, target, params);
  if (!pins.empty() && static_cast<Index>(pins.size()) != params.n())
    throw std::invalid_argument("build_projection_qp: one pin entry per storage required");

  const Index n = params.n(), m = params.m();
  const Index g = target.num_generators(), q = target.num_constraints();
  const Index s = 2 * n + m;  // split input length
  const Index nv = g + s;

  const MatrixXd a_mat = build_A(params);
  const MatrixXd b_split = build_B_split(params);

  // [G  -B_split] v = A x - c ;  [F 0] v = b ;  [0 1'] v = -d
  std::vector<Triplet> eq;
  const SparseMatrix& gen = target.generators();
  for (Index k = 0; k < gen.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(gen, k); it; ++it) eq.emplace_back(it.row(), it.col(), it.value());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < s; ++j)
      if (b_split(i, j) != 0.0) eq.emplace_back(i, g + j, -b_split(i, j));
  const SparseMatrix& f = target.con_lhs();
  for (Index k = 0; k < f.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(f, k); it; ++it) eq.emplace_back(n + it.row(), it.col(), it.value());
  for (Index j = 0; j < s; ++j) eq.emplace_back(n + q, g + j, 1.0);

  QuadraticProgram qp;
  qp.eq_lhs.resize(n + q + 1, nv);
  qp.eq_lhs.setFromTriplets(eq.begin(), eq.end());
  qp.eq_rhs.resize(n + q + 1);
  qp.eq_rhs << a_mat * x - target.center(), target.con_rhs(), -d;

  // W u_split <= w on the split block.
  const RatePolytope rate = build_rate_polytope(params);
  std::vector<Triplet> in;
  for (Index i = 0; i < rate.W.rows(); ++i)
    for (Index j = 0; j < s; ++j)
      if (rate.W(i, j) != 0.0) in.emplace_back(i, g + j, rate.W(i, j));
  qp.ineq_lhs.resize(rate.W.rows(), nv);
  qp.ineq_lhs.setFromTriplets(in.begin(), in.end());
  qp.ineq_rhs = rate.w;

  // Factor box, plus pins as zero-width bounds.
  const double inf = std::numeric_limits<double>::infinity();
  VariableBounds bounds{VectorXd::Constant(nv, -inf), VectorXd::Constant(nv, inf)};
  bounds.lower.head(g).setConstant(-1.0);
  bounds.upper.head(g).setConstant(1.0);
  for (Index i = 0; i < static_cast<Index>(pins.size()); ++i) {
    if (!pins[i]) continue;
    const Index col = *pins[i] == StorageMode::Discharge ? g + n + i : g + i;
    bounds.lower[col] = 0.0;
    bounds.upper[col] = 0.0;
  }
  qp.bounds = std::move(bounds);

  // Z = [0 I I 0; 0 0 0 I]
  std::vector<Triplet> z;
  for (Index i = 0; i < n; ++i) {
    z.emplace_back(i, g + i, 1.0);
    z.emplace_back(i, g + n + i, 1.0);
  }
  for (Index j = 0; j < m; ++j) z.emplace_back(n + j, g + 2 * n + j, 1.0);
  qp.map.resize(n + m, nv);
  qp.map.setFromTriplets(z.begin(), z.end());
  qp.target = a.stacked();
  return qp;
}

SafeAction project_action(const Action& a, const VectorXd& x,
                          const ConstrainedZonotope& safe_next, double d,
                          const GridParams& params, const ShieldSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = params.n();

  const Candidate relaxed = solve_candidate(a, x, safe_next, d, params, {}, settings.solver);
  if (!relaxed.ok) throw ShieldInfeasibleError(describe_failure(x, safe_next, d, settings.solver));

  SafeAction out = finish(relaxed.solution, a, safe_next, d, params);
  if (out.correction <= kNearlySafe) {
    if (auto exact = accept_as_is(a, x, safe_next, d, params, settings.solver)) {
      out = std::move(*exact);
      out.shield_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return out;
    }
  }
  if (out.complementarity > settings.complementarity_tol) {
    // The relaxed optimum is not unique along p_dis + t, p_chg - t. Pinning
    // each storage to the sign of its net power usually recovers the same
    // distance; only when it does not is the relaxation really exploited.
    const double slack = 1e-7 * (1.0 + relaxed.solution.distance);
    ModePin natural(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      natural[i] = out.action.p_storage[i] >= 0.0 ? StorageMode::Discharge : StorageMode::Charge;
    Candidate c = solve_candidate(a, x, safe_next, d, params, natural, settings.solver);
    if (c.ok && c.solution.distance <= relaxed.solution.distance + slack) {
      out = finish(c.solution, a, safe_next, d, params);
    } else {
      // Enumerate the 2^n mode assignments; each is a convex QP.
      std::optional<QpSolution> best;
      for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        ModePin pins(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i)
          pins[i] = (mask >> i) & 1u ? StorageMode::Charge : StorageMode::Discharge;
        Candidate e = solve_candidate(a, x, safe_next, d, params, pins, settings.solver);
        if (e.ok && (!best || e.solution.distance < best->distance)) best = std::move(e.solution);
      }
      if (best) {
        out = finish(*best, a, safe_next, d, params);
        out.mode_pinned = true;
      }
    }
  }
  out.shield_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

SafeAction project_action_baseline(const Action& a, const VectorXd& x, double d,
                                   const GridParams& params, const ShieldSettings& settings) {
  return project_action(a, x, from_interval(charge_box(params)), d, params, settings);
}

double safety_violation(const VectorXd& x, const ConstrainedZonotope& safe,
                        const SolverSettings& settings) {
  if (x.size() != safe.dimension())
    throw std::invalid_argument("safety_violation: dimension mismatch");
  const double min_total = -support(safe, -VectorXd::Ones(x.size()), settings);
  return min_total - x.sum();
}

double certificate_residual(const ConstrainedZonotope& z, const VectorXd& factors,
                            const VectorXd& next) {
  if (factors.size() != z.num_generators() || next.size() != z.dimension())
    throw std::invalid_argument("certificate_residual: dimension mismatch");
  double r = (next - z.center() - z.generators() * factors).lpNorm<Eigen::Infinity>();
  if (z.num_constraints() > 0)
    r = std::max(r, (z.con_lhs() * factors - z.con_rhs()).lpNorm<Eigen::Infinity>());
  if (factors.size() > 0) r = std::max(r, factors.lpNorm<Eigen::Infinity>() - 1.0);
  return std::max(r, 0.0);
}

}  // namespace gridshield
