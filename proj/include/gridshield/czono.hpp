// SPDX-License-Identifier: Apache-2.0
//
// Constrained zonotopes  { c + G*beta : ||beta||_inf <= 1, F*beta = b }.
//
// Values are immutable once built; every operation is a pure function that
// returns a new set. Representations are not unique, so set equality is only
// ever judged through support functions or interval hulls.
#pragma once

#include <gridshield/lpqp.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <string>

namespace gridshield {

/// Axis-aligned box [lower, upper].
struct IntervalBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  IntervalBox() = default;
  /// Throws std::invalid_argument on length mismatch or lower > upper.
  IntervalBox(Eigen::VectorXd lower, Eigen::VectorXd upper);

  Eigen::Index dimension() const { return lower.size(); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
};

class ConstrainedZonotope {
public:
  ConstrainedZonotope() = default;

  /// Unconstrained zonotope (q = 0).
  ConstrainedZonotope(Eigen::VectorXd center, SparseMatrix generators);

  /// Throws std::invalid_argument if generators has a row count other than
  /// center.size(), con_lhs has a column count other than generators.cols(),
  /// or con_rhs does not match con_lhs rows.
  ConstrainedZonotope(Eigen::VectorXd center, SparseMatrix generators, SparseMatrix con_lhs,
                      Eigen::VectorXd con_rhs);

  const Eigen::VectorXd& center() const { return center_; }
  const SparseMatrix& generators() const { return generators_; }
  const SparseMatrix& con_lhs() const { return con_lhs_; }
  const Eigen::VectorXd& con_rhs() const { return con_rhs_; }

  Eigen::Index dimension() const { return center_.size(); }
  Eigen::Index num_generators() const { return generators_.cols(); }
  Eigen::Index num_constraints() const { return con_rhs_.size(); }

private:
  Eigen::VectorXd center_;
  SparseMatrix generators_;
  SparseMatrix con_lhs_;
  Eigen::VectorXd con_rhs_;
};

/// The box as a zonotope: center at the midpoint, half-widths on the diagonal.
ConstrainedZonotope from_interval(const IntervalBox& box);

ConstrainedZonotope linear_map(const Eigen::MatrixXd& map, const ConstrainedZonotope& z);
ConstrainedZonotope linear_map(const SparseMatrix& map, const ConstrainedZonotope& z);

/// Adds z2's generators after z1's and stacks the constraints block-diagonally.
ConstrainedZonotope minkowski_sum(const ConstrainedZonotope& z1, const ConstrainedZonotope& z2);

/// Keeps z1's center and generators; appends z2's factors (zero generators)
/// plus the coupling rows G1*beta1 - G2*beta2 = c2 - c1. An empty result is a
/// valid value; check it with is_empty.
ConstrainedZonotope intersect(const ConstrainedZonotope& z1, const ConstrainedZonotope& z2);

/// Drops generator columns that are zero in both G and F. Not applied
/// automatically by any other operation.
ConstrainedZonotope prune_zero_generators(const ConstrainedZonotope& z);

bool is_empty(const ConstrainedZonotope& z, const SolverSettings& settings = {});

/// Membership up to settings.tol_feas on the factor equations.
bool contains(const ConstrainedZonotope& z, const Eigen::VectorXd& x,
              const SolverSettings& settings = {});

/// Smallest max-norm residual of the membership equations for x; zero (up to
/// solver accuracy) iff x is in the set.
double containment_residual(const ConstrainedZonotope& z, const Eigen::VectorXd& x,
                            const SolverSettings& settings = {});

/// max over the set of direction·x, together with a maximizer's factors.
struct SupportResult {
  double value = 0.0;
  Eigen::VectorXd factors;
  Eigen::VectorXd point;
};

/// Throws EmptySetError if z is empty, SolverError on numerical failure.
SupportResult support_point(const ConstrainedZonotope& z, const Eigen::VectorXd& direction,
                            const SolverSettings& settings = {});

double support(const ConstrainedZonotope& z, const Eigen::VectorXd& direction,
               const SolverSettings& settings = {});

/// Tightest axis-aligned enclosure. Throws EmptySetError if z is empty.
IntervalBox interval_hull(const ConstrainedZonotope& z, const SolverSettings& settings = {});

/// {"c": [...], "G": [[...], ...], "F": [[...], ...], "b": [...]}, rows in order.
std::string to_json(const ConstrainedZonotope& z);
/// Inverse of to_json. Throws std::invalid_argument on malformed input.
ConstrainedZonotope czono_from_json(const std::string& text);

}  // namespace gridshield
