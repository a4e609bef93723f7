// SPDX-License-Identifier: Apache-2.0
//
// Generators and independent oracles shared by the unit and acceptance tests.
// The oracles re-derive everything from the raw parameters and never call
// the library routine they check.
#pragma once

#include <gridshield/czono.hpp>
#include <gridshield/grid_model.hpp>
#include <gridshield/lpqp.hpp>

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace gstest {

using gridshield::ConstrainedZonotope;
using gridshield::GridParams;
using gridshield::IntervalBox;
using gridshield::SparseMatrix;

struct Rng {
  explicit Rng(std::uint64_t seed) : g(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(g); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(g); }
  double gauss() { return std::normal_distribution<double>(0.0, 1.0)(g); }
  bool coin() { return integer(0, 1) == 1; }
  Eigen::VectorXd gauss_vector(Eigen::Index k) {
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) v[i] = gauss();
    return v;
  }
  std::mt19937_64 g;
};

inline SparseMatrix sparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

inline ConstrainedZonotope interval(double lo, double hi) {
  Eigen::VectorXd l(1), u(1);
  l << lo;
  u << hi;
  return gridshield::from_interval(IntervalBox(l, u));
}

inline ConstrainedZonotope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return gridshield::from_interval(IntervalBox(lo, hi));
}

/// Random storage/market parameters in plausible physical ranges.
inline GridParams random_grid(Rng& rng, int n, int m, int H, double tau) {
  GridParams p;
  p.tau = tau;
  p.islanding_H = H;
  p.horizon_T = 1440;
  for (int i = 0; i < n; ++i) {
    gridshield::StorageParams s;
    s.e_min = rng.uniform(0.0, 1.0);
    s.e_max = s.e_min + rng.uniform(2.0, 10.0);
    s.p_max = rng.uniform(1.0, 5.0);
    s.p_min = -rng.uniform(1.0, 5.0);
    s.eta_d = rng.uniform(0.85, 1.0);
    s.eta_c = rng.uniform(0.85, 1.0);
    s.mu = rng.uniform(0.0, 0.05);
    s.gamma = rng.uniform(0.0, 0.3);
    p.storages.push_back(s);
  }
  for (int j = 0; j < m; ++j) {
    gridshield::MarketParams mk;
    mk.p_max = rng.uniform(2.0, 8.0);
    mk.p_min = -rng.uniform(2.0, 8.0);
    p.markets.push_back(mk);
  }
  return p;
}

/// Safe initial charges of a single storage under islanding, sampled on a
/// grid. With one storage and the markets cut off the balancing input is
/// forced (p = -d), so exhaustive search over admissible inputs reduces to
/// simulating that single trajectory from each grid point.
struct GridInterval {
  bool empty = true;
  double lower = 0.0;
  double upper = 0.0;
  bool holes = false;  // a non-safe grid point between two safe ones
};

inline GridInterval forced_trajectory_oracle(const gridshield::StorageParams& s, double tau,
                                             const std::vector<double>& d_lower, double pitch) {
  constexpr double slack = 1e-12;
  auto safe = [&](double e) {
    for (double d : d_lower) {
      const double p = -d;
      if (p > s.p_max + slack || p < s.p_min - slack) return false;
      const double eta = p >= 0.0 ? 1.0 / s.eta_d : s.eta_c;
      e = e - tau * eta * p - tau * s.mu * e;
      if (e < s.e_min - slack || e > s.e_max + slack) return false;
    }
    return true;
  };
  GridInterval out;
  const long count = static_cast<long>(std::floor((s.e_max - s.e_min) / pitch));
  bool seen_gap = false;
  for (long j = 0; j <= count + 1; ++j) {
    const double e = j <= count ? s.e_min + pitch * static_cast<double>(j) : s.e_max;
    if (safe(e)) {
      if (out.empty) {
        out.empty = false;
        out.lower = e;
      } else if (seen_gap) {
        out.holes = true;
      }
      out.upper = e;
    } else if (!out.empty) {
      seen_gap = true;
    }
  }
  return out;
}

/// Support function of an unconstrained zonotope: d·c + sum_i |d·g_i|.
inline double zonotope_support(const Eigen::VectorXd& c, const Eigen::MatrixXd& G,
                               const Eigen::VectorXd& d) {
  return d.dot(c) + (d.transpose() * G).cwiseAbs().sum();
}

/// Hit-and-run over {y : E y = f, lower <= y <= upper, C y <= g}.
class HitAndRun {
public:
  HitAndRun(const Eigen::MatrixXd& E, const Eigen::VectorXd& f, const Eigen::MatrixXd& C,
            const Eigen::VectorXd& g, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper)
      : C_(C), g_(g), lower_(lower), upper_(upper) {
    const Eigen::Index k = lower.size();
    // Variables with equal bounds join the equality rows.
    std::vector<Eigen::Index> fixed;
    for (Eigen::Index i = 0; i < k; ++i)
      if (upper[i] - lower[i] <= 0.0) fixed.push_back(i);
    E_ = Eigen::MatrixXd::Zero(E.rows() + static_cast<Eigen::Index>(fixed.size()), k);
    f_ = Eigen::VectorXd::Zero(E_.rows());
    if (E.rows() > 0) {
      E_.topRows(E.rows()) = E;
      f_.head(E.rows()) = f;
    }
    for (std::size_t r = 0; r < fixed.size(); ++r) {
      E_(E.rows() + static_cast<Eigen::Index>(r), fixed[r]) = 1.0;
      f_[E.rows() + static_cast<Eigen::Index>(r)] = lower[fixed[r]];
    }
    if (E_.rows() == 0) {
      basis_ = Eigen::MatrixXd::Identity(k, k);
    } else {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(E_);
      lu.setThreshold(1e-10);
      const Eigen::MatrixXd kernel = lu.kernel();
      if (lu.dimensionOfKernel() == 0) {
        basis_ = Eigen::MatrixXd::Zero(k, 0);
      } else {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
        basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(k, kernel.cols());
      }
      pinv_.compute(E_);
    }
  }

  Eigen::Index dimension() const { return basis_.cols(); }

  /// Largest violation of the constraint system at y.
  double residual(const Eigen::VectorXd& y) const {
    double r = 0.0;
    if (E_.rows() > 0) r = std::max(r, (E_ * y - f_).cwiseAbs().maxCoeff());
    if (C_.rows() > 0) r = std::max(r, (C_ * y - g_).maxCoeff());
    r = std::max(r, (lower_ - y).maxCoeff());
    r = std::max(r, (y - upper_).maxCoeff());
    return r;
  }

  void start(const Eigen::VectorXd& y) { y_ = y; }
  const Eigen::VectorXd& point() const { return y_; }

  /// One chord move. Returns false when no direction has positive length.
  bool step(Rng& rng) {
    if (basis_.cols() == 0) return false;
    Eigen::VectorXd dir = basis_ * rng.gauss_vector(basis_.cols());
    dir.normalize();
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    auto clip = [&](double slope, double room) {
      // slope * t <= room
      if (std::abs(slope) < 1e-14) return;
      const double t = room / slope;
      if (slope > 0) tmax = std::min(tmax, t);
      else tmin = std::max(tmin, t);
    };
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      clip(dir[i], upper_[i] - y_[i]);
      clip(-dir[i], y_[i] - lower_[i]);
    }
    if (C_.rows() > 0) {
      const Eigen::VectorXd slope = C_ * dir;
      const Eigen::VectorXd room = g_ - C_ * y_;
      for (Eigen::Index r = 0; r < slope.size(); ++r) clip(slope[r], room[r]);
    }
    tmin = std::min(tmin, 0.0);
    tmax = std::max(tmax, 0.0);
    if (!(tmax > tmin) || !std::isfinite(tmin) || !std::isfinite(tmax)) return false;
    y_ += rng.uniform(tmin, tmax) * dir;
    // Keep the equality drift and bound round-off out of the samples.
    if (++moves_ % 50 == 0 && E_.rows() > 0) y_ -= pinv_.solve(E_ * y_ - f_);
    y_ = y_.cwiseMax(lower_).cwiseMin(upper_);
    return true;
  }

private:
  Eigen::MatrixXd E_;
  Eigen::VectorXd f_;
  Eigen::MatrixXd C_;
  Eigen::VectorXd g_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  Eigen::MatrixXd basis_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> pinv_;
  Eigen::VectorXd y_;
  long moves_ = 0;
};

/// Bounds of a program, with absent bounds read as infinite.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> bounds_of(
    const std::optional<gridshield::VariableBounds>& b, Eigen::Index k) {
  if (b) return {b->lower, b->upper};
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(k, -inf), Eigen::VectorXd::Constant(k, inf)};
}

/// A relative-interior point of the QP's feasible region: the mean of
/// vertices maximizing random objectives. Empty when the region is empty.
inline std::optional<Eigen::VectorXd> interior_point(const gridshield::QuadraticProgram& qp, Rng& rng,
                                                     int vertices, const gridshield::SolverSettings& s = {}) {
  gridshield::LinearProgram lp;
  lp.eq_lhs = qp.eq_lhs;
  lp.eq_rhs = qp.eq_rhs;
  lp.ineq_lhs = qp.ineq_lhs;
  lp.ineq_rhs = qp.ineq_rhs;
  lp.bounds = qp.bounds;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(qp.num_variables());
  int found = 0;
  for (int v = 0; v < vertices; ++v) {
    lp.objective = rng.gauss_vector(qp.num_variables());
    const gridshield::LpSolution sol = gridshield::solve_lp(lp, s);
    if (sol.status == gridshield::SolveStatus::Infeasible) return std::nullopt;
    if (sol.status != gridshield::SolveStatus::Optimal) continue;
    sum += sol.x;
    ++found;
  }
  if (found == 0) return std::nullopt;
  return Eigen::VectorXd(sum / found);
}

}  // namespace gstest
