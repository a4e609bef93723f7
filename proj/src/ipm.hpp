// SPDX-License-Identifier: Apache-2.0
//
// Sparse primal-dual interior-point method for convex QPs in the form
//
//   minimize 1/2 x'Px + q'x   s.t.  Ex = r,  lower <= x <= upper
//
// with Mehrotra predictor-corrector steps. Newton systems are solved on the
// regularized quasi-definite KKT matrix [[P+S+rho*I, E'], [E, -delta*I]] with
// a simplicial LDL' factorization and iterative refinement against the
// unregularized system.
#pragma once

#include <gridshield/lpqp.hpp>

namespace gridshield::detail {

struct StandardForm {
  SparseMatrix hessian;  // symmetric, full storage; may be all-zero
  Eigen::VectorXd linear;
  SparseMatrix eq;
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

enum class IpmStatus {
  Converged,
  Infeasible,      // detected structurally (empty row with nonzero rhs, crossed bounds)
  MaxIterations,
  PrimalDiverged,  // iterates blew up: unbounded objective suspected
  DualDiverged,    // multipliers blew up: infeasibility suspected
  NumericalError,
};

struct IpmSettings {
  double tolerance = 1e-10;        // target for scaled residuals and gap
  double accept_tolerance = 1e-8;  // accepted as converged if reached at the iteration cap
  int max_iterations = 200;
  /// Independent primal and dual step lengths on QPs too. When a run fails to
  /// converge, interior_point retries once with the other choice.
  bool separate_steps = false;
};

struct IpmResult {
  IpmStatus status = IpmStatus::NumericalError;
  Eigen::VectorXd x;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

IpmResult interior_point(const StandardForm& problem, const IpmSettings& settings);

/// Problem as posed by callers, before slack variables are introduced.
struct GeneralForm {
  SparseMatrix hessian;
  Eigen::VectorXd linear;
  SparseMatrix eq;
  Eigen::VectorXd eq_rhs;
  SparseMatrix ineq;
  Eigen::VectorXd ineq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Single-variable inequality rows become bounds; the remaining rows get one
/// nonnegative slack each, appended after the original variables.
struct LoweredForm {
  StandardForm form;
  Eigen::Index num_original = 0;
  bool trivially_infeasible = false;
};

LoweredForm lower_general_form(const GeneralForm& problem);

/// Minimizes the l1 norm of the equality residual over the bounds. The
/// returned x has the same length as the problem's variable vector.
IpmResult phase_one(const StandardForm& problem, const IpmSettings& settings);

}  // namespace gridshield::detail
