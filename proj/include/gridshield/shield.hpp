// SPDX-License-Identifier: Apache-2.0
//
// Safety layer: projects a proposed set-point vector onto the actions that
// keep power balance, respect rate limits and land the next charge state in a
// target constrained zonotope.
//
// The decision vector is [beta; p_dis; p_chg; p_mkt]. Splitting storage power
// into discharge (>= 0) and charge (<= 0) parts makes the dynamics linear
// without fixing a mode. The relaxation admits simultaneous charge and
// discharge; when the optimum uses it, the projection is re-solved with each
// storage pinned to one mode and the closest mode-consistent action is kept.
#pragma once

#include <gridshield/czono.hpp>
#include <gridshield/grid_model.hpp>
#include <gridshield/lpqp.hpp>

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace gridshield {

struct Action {
  Eigen::VectorXd p_storage;
  Eigen::VectorXd p_market;

  /// [p_storage; p_market]
  Eigen::VectorXd stacked() const;
  static Action from_stacked(const Eigen::VectorXd& u, Eigen::Index n);
};

struct SafeAction {
  Action action;
  double correction = 0.0;        // ||a - a_safe||
  Eigen::VectorXd split_input;    // [p_dis; p_chg; p_mkt]
  Eigen::VectorXd factors;        // beta of the target set certifying the next state
  double shield_time = 0.0;       // seconds, QP assembly + solve
  /// max_i min(p_dis_i, -p_chg_i) of the returned split input.
  double complementarity = 0.0;
  /// True when the relaxed optimum charged and discharged a storage at once
  /// and the mode-pinned re-solve produced the result.
  bool mode_pinned = false;
};

struct ShieldSettings {
  SolverSettings solver;
  /// Simultaneous charge/discharge above this (kW) triggers the pinned re-solve.
  double complementarity_tol = 1e-7;
};

/// Pins storage i to discharge (p_chg_i = 0) or charge (p_dis_i = 0).
using ModePin = std::vector<std::optional<StorageMode>>;

/// The projection QP for proposal `a` at state x towards `target`.
QuadraticProgram build_projection_qp(const Action& a, const Eigen::VectorXd& x,
                                     const ConstrainedZonotope& target, double d,
                                     const GridParams& params, const ModePin& pins = {});

/// Throws ShieldInfeasibleError (with d, target hull and x in the message)
/// when no admissible action keeps the next state in target; SolverError on
/// numerical failure.
SafeAction project_action(const Action& a, const Eigen::VectorXd& x,
                          const ConstrainedZonotope& safe_next, double d,
                          const GridParams& params, const ShieldSettings& settings = {});

/// Same projection with the admissible charge box as the target.
SafeAction project_action_baseline(const Action& a, const Eigen::VectorXd& x, double d,
                                   const GridParams& params,
                                   const ShieldSettings& settings = {});

/// min over safe of sum(z) minus sum(x); positive means the islanding
/// guarantee is lost. Throws EmptySetError on an empty set.
double safety_violation(const Eigen::VectorXd& x, const ConstrainedZonotope& safe,
                        const SolverSettings& settings = {});

/// Max-norm residual certifying that `next` lies in z through `factors`:
/// max(|next - c - G beta|, |F beta - b|, ||beta||_inf - 1).
double certificate_residual(const ConstrainedZonotope& z, const Eigen::VectorXd& factors,
                            const Eigen::VectorXd& next);

}  // namespace gridshield
