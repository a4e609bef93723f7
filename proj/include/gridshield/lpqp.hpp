// SPDX-License-Identifier: Apache-2.0
//
// Solver contracts for the linear programs behind the set queries and the
// projection quadratic program behind the shield. Everything above this
// header only sees statuses and residual tolerances, never the algorithm.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <optional>

namespace gridshield {

using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr double kDefaultFeasibilityTolerance = 1e-8;

struct SolverSettings {
  /// Feasibility / KKT residual tolerance reported to callers.
  double tol_feas = kDefaultFeasibilityTolerance;
  int max_iterations = 200;
};

/// Per-variable box. Infinite entries are allowed.
struct VariableBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// maximize objective·x  s.t.  eq_lhs·x = eq_rhs,  ineq_lhs·x <= ineq_rhs,  x in bounds.
/// Matrices with zero rows are fine; their column count must still match.
struct LinearProgram {
  Eigen::VectorXd objective;
  SparseMatrix eq_lhs;
  Eigen::VectorXd eq_rhs;
  SparseMatrix ineq_lhs;
  Eigen::VectorXd ineq_rhs;
  std::optional<VariableBounds> bounds;

  Eigen::Index num_variables() const { return objective.size(); }
};

/// minimize ||target - map·x||^2 under the same constraint layout as LinearProgram.
struct QuadraticProgram {
  Eigen::VectorXd target;
  SparseMatrix map;
  SparseMatrix eq_lhs;
  Eigen::VectorXd eq_rhs;
  SparseMatrix ineq_lhs;
  Eigen::VectorXd ineq_rhs;
  std::optional<VariableBounds> bounds;

  Eigen::Index num_variables() const { return map.cols(); }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(SolveStatus status) noexcept;

struct LpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

struct QpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;
  /// ||target - map·x||
  double distance = 0.0;
  /// Largest scaled primal/dual/complementarity residual at termination.
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct FeasibilityResult {
  bool feasible = false;
  /// Max-norm residual of the equality and inequality rows at the returned point
  /// (the point itself always satisfies the bounds).
  double residual = 0.0;
  Eigen::VectorXd x;
};

/// Throws std::invalid_argument on inconsistent dimensions.
LpSolution solve_lp(const LinearProgram& lp, const SolverSettings& settings = {});

/// Throws std::invalid_argument on inconsistent dimensions.
QpSolution solve_qp(const QuadraticProgram& qp, const SolverSettings& settings = {});

/// Decides whether the constraints of `lp` (its objective is ignored) admit a
/// point, by minimizing the l1 constraint violation over the bounds.
FeasibilityResult find_feasible_point(const LinearProgram& lp,
                                      const SolverSettings& settings = {});

}  // namespace gridshield
