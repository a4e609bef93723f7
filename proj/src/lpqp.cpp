// SPDX-License-Identifier: Apache-2.0
#include <gridshield/lpqp.hpp>

#include "ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gridshield {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

void check_constraints(const char* who, Index n, const SparseMatrix& eq, const VectorXd& eq_rhs,
                       const SparseMatrix& ineq, const VectorXd& ineq_rhs,
                       const std::optional<VariableBounds>& bounds) {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument(std::string(who) + ": " + what);
  };
  if (eq.rows() != eq_rhs.size()) fail("equality rows and right-hand side differ in length");
  if (eq.rows() > 0 && eq.cols() != n) fail("equality matrix column count mismatch");
  if (ineq.rows() != ineq_rhs.size()) fail("inequality rows and right-hand side differ in length");
  if (ineq.rows() > 0 && ineq.cols() != n) fail("inequality matrix column count mismatch");
  if (bounds) {
    if (bounds->lower.size() != n || bounds->upper.size() != n) fail("bounds length mismatch");
  }
}

// Zero-row matrices may come with any column count; normalize to n columns.
SparseMatrix with_cols(const SparseMatrix& m, Index n) {
  if (m.rows() == 0 || m.cols() == n) {
    SparseMatrix out = m;
    if (m.rows() == 0) out.resize(0, n);
    return out;
  }
  return m;
}

detail::GeneralForm general_form(Index n, const SparseMatrix& eq, const VectorXd& eq_rhs,
                                 const SparseMatrix& ineq, const VectorXd& ineq_rhs,
                                 const std::optional<VariableBounds>& bounds) {
  detail::GeneralForm g;
  g.eq = with_cols(eq, n);
  g.eq_rhs = eq_rhs;
  g.ineq = with_cols(ineq, n);
  g.ineq_rhs = ineq_rhs;
  if (bounds) {
    g.lower = bounds->lower;
    g.upper = bounds->upper;
  } else {
    g.lower = VectorXd::Constant(n, -kInf);
    g.upper = VectorXd::Constant(n, kInf);
  }
  g.hessian.resize(n, n);
  g.linear = VectorXd::Zero(n);
  return g;
}

detail::IpmSettings ipm_settings(const SolverSettings& s) {
  detail::IpmSettings out;
  out.tolerance = std::min(1e-10, s.tol_feas * 1e-2);
  out.accept_tolerance = s.tol_feas;
  out.max_iterations = s.max_iterations;
  return out;
}

// Max-norm violation of the original rows at x (x assumed inside the bounds).
double constraint_residual(const detail::GeneralForm& g, const VectorXd& x) {
  double res = 0.0;
  if (g.eq.rows() > 0) res = std::max(res, inf_norm(g.eq * x - g.eq_rhs));
  if (g.ineq.rows() > 0) {
    const VectorXd slack = g.ineq * x - g.ineq_rhs;
    res = std::max(res, slack.cwiseMax(0.0).maxCoeff());
  }
  return res;
}

double rhs_scale(const detail::GeneralForm& g) {
  return 1.0 + std::max(inf_norm(g.eq_rhs), inf_norm(g.ineq_rhs));
}

FeasibilityResult feasibility(const detail::GeneralForm& g, const detail::LoweredForm& lowered,
                              const SolverSettings& settings) {
  FeasibilityResult out;
  const Index n = lowered.num_original;
  if (lowered.trivially_infeasible) {
    out.feasible = false;
    out.residual = kInf;
    out.x = VectorXd::Zero(n);
    return out;
  }
  const detail::IpmResult r = detail::phase_one(lowered.form, ipm_settings(settings));
  VectorXd x = r.x.head(n);
  for (Index j = 0; j < n; ++j) {
    const double lo = lowered.form.lower[j], hi = lowered.form.upper[j];
    if (std::isfinite(lo)) x[j] = std::max(x[j], lo);
    if (std::isfinite(hi)) x[j] = std::min(x[j], hi);
  }
  out.residual = r.status == detail::IpmStatus::Infeasible ? kInf : constraint_residual(g, x);
  out.feasible = out.residual <= settings.tol_feas * rhs_scale(g);
  out.x = std::move(x);
  return out;
}

}  // namespace

const char* to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical failure";
  }
  return "unknown";
}

LpSolution solve_lp(const LinearProgram& lp, const SolverSettings& settings) {
  const Index n = lp.num_variables();
  check_constraints("solve_lp", n, lp.eq_lhs, lp.eq_rhs, lp.ineq_lhs, lp.ineq_rhs, lp.bounds);

  detail::GeneralForm g =
      general_form(n, lp.eq_lhs, lp.eq_rhs, lp.ineq_lhs, lp.ineq_rhs, lp.bounds);
  g.linear = -lp.objective;
  const detail::LoweredForm lowered = detail::lower_general_form(g);

  LpSolution out;
  if (lowered.trivially_infeasible) {
    out.status = SolveStatus::Infeasible;
    return out;
  }
  const detail::IpmResult r = detail::interior_point(lowered.form, ipm_settings(settings));
  out.iterations = r.iterations;
  if (r.status == detail::IpmStatus::Converged) {
    out.status = SolveStatus::Optimal;
    out.x = r.x.head(n);
    out.value = lp.objective.dot(out.x);
    return out;
  }

  const FeasibilityResult feas = feasibility(g, lowered, settings);
  if (!feas.feasible)
    out.status = SolveStatus::Infeasible;
  else if (r.status == detail::IpmStatus::PrimalDiverged)
    out.status = SolveStatus::Unbounded;
  else
    out.status = SolveStatus::NumericalFailure;
  return out;
}

QpSolution solve_qp(const QuadraticProgram& qp, const SolverSettings& settings) {
  const Index n = qp.num_variables();
  if (qp.map.rows() != qp.target.size())
    throw std::invalid_argument("solve_qp: map rows and target length differ");
  check_constraints("solve_qp", n, qp.eq_lhs, qp.eq_rhs, qp.ineq_lhs, qp.ineq_rhs, qp.bounds);

  detail::GeneralForm g =
      general_form(n, qp.eq_lhs, qp.eq_rhs, qp.ineq_lhs, qp.ineq_rhs, qp.bounds);
  // 1/2 x'(M'M)x - (M't)'x  =  1/2 ||t - Mx||^2 - 1/2 ||t||^2
  const SparseMatrix mt = qp.map.transpose();
  g.hessian = (mt * qp.map).pruned();
  g.linear = -(mt * qp.target);
  const detail::LoweredForm lowered = detail::lower_general_form(g);

  QpSolution out;
  if (lowered.trivially_infeasible) {
    out.status = SolveStatus::Infeasible;
    return out;
  }
  const detail::IpmResult r = detail::interior_point(lowered.form, ipm_settings(settings));
  out.iterations = r.iterations;
  out.kkt_residual = std::max({r.primal_residual, r.dual_residual, r.gap});
  if (r.status == detail::IpmStatus::Converged) {
    out.status = SolveStatus::Optimal;
    out.x = r.x.head(n);
    out.distance = (qp.target - qp.map * out.x).norm();
    return out;
  }
  const FeasibilityResult feas = feasibility(g, lowered, settings);
  out.status = feas.feasible ? SolveStatus::NumericalFailure : SolveStatus::Infeasible;
  return out;
}

FeasibilityResult find_feasible_point(const LinearProgram& lp, const SolverSettings& settings) {
  const Index n = lp.num_variables();
  check_constraints("find_feasible_point", n, lp.eq_lhs, lp.eq_rhs, lp.ineq_lhs, lp.ineq_rhs,
                    lp.bounds);
  const detail::GeneralForm g =
      general_form(n, lp.eq_lhs, lp.eq_rhs, lp.ineq_lhs, lp.ineq_rhs, lp.bounds);
  return feasibility(g, detail::lower_general_form(g), settings);
}

}  // namespace gridshield
