// SPDX-License-Identifier: Apache-2.0
#include "ipm.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace gridshield::detail {

namespace {

using Eigen::Index;
using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPrimalRegularization = 1e-9;
constexpr double kDualRegularization = 1e-9;
constexpr double kPrimalBlowup = 1e10;
constexpr double kDualBlowup = 1e12;

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Core solver on a problem without fixed variables or empty rows.
class Solver {
public:
  Solver(const StandardForm& p, const IpmSettings& s) : p_(p), s_(s) {
    n_ = p.linear.size();
    m_ = p.rhs.size();
    has_lower_.resize(n_);
    has_upper_.resize(n_);
    for (Index j = 0; j < n_; ++j) {
      has_lower_[j] = std::isfinite(p.lower[j]);
      has_upper_[j] = std::isfinite(p.upper[j]);
      num_bounds_ += static_cast<int>(has_lower_[j]) + static_cast<int>(has_upper_[j]);
    }
    et_ = p.eq.transpose();
  }

  IpmResult run() {
    IpmResult result;
    initialize();
    if (!build_kkt()) {
      result.status = IpmStatus::NumericalError;
      return result;
    }

    const double r_norm = inf_norm(p_.rhs);
    const double q_norm = inf_norm(p_.linear);
    int stalls = 0;

    for (int it = 0; it <= s_.max_iterations; ++it) {
      compute_slacks();
      const VectorXd rp = p_.eq * x_ - p_.rhs;
      const VectorXd rd = p_.hessian * x_ + p_.linear - et_ * y_ - zl_ + zu_;
      const double mu = complementarity();
      const double pobj = 0.5 * x_.dot(p_.hessian * x_) + p_.linear.dot(x_);

      result.primal_residual = inf_norm(rp) / (1.0 + r_norm);
      result.dual_residual = inf_norm(rd) / (1.0 + q_norm);
      result.gap = num_bounds_ > 0 ? mu * num_bounds_ / (1.0 + std::abs(pobj)) : 0.0;
      result.iterations = it;
      result.objective = pobj;

      const double worst =
          std::max({result.primal_residual, result.dual_residual, result.gap});
      if (worst <= s_.tolerance) {
        result.status = IpmStatus::Converged;
        break;
      }
      if (inf_norm(x_) > kPrimalBlowup) {
        result.status = IpmStatus::PrimalDiverged;
        break;
      }
      if (std::max({inf_norm(y_), inf_norm(zl_), inf_norm(zu_)}) > kDualBlowup) {
        result.status = IpmStatus::DualDiverged;
        break;
      }
      if (it == s_.max_iterations || stalls >= 8) {
        result.status = worst <= s_.accept_tolerance ? IpmStatus::Converged
                                                     : IpmStatus::MaxIterations;
        break;
      }

      // Barrier diagonal.
      VectorXd sigma = VectorXd::Zero(n_);
      for (Index j = 0; j < n_; ++j) {
        if (has_lower_[j]) sigma[j] += zl_[j] / sl_[j];
        if (has_upper_[j]) sigma[j] += zu_[j] / su_[j];
      }
      sigma_ = sigma;
      if (!factorize()) {
        result.status = IpmStatus::NumericalError;
        break;
      }

      // Predictor.
      VectorXd tl = VectorXd::Zero(n_), tu = VectorXd::Zero(n_);
      for (Index j = 0; j < n_; ++j) {
        if (has_lower_[j]) tl[j] = -sl_[j] * zl_[j];
        if (has_upper_[j]) tu[j] = -su_[j] * zu_[j];
      }
      Direction aff = direction(rp, rd, tl, tu);
      const double ap_aff = primal_step(aff);
      const double ad_aff = dual_step(aff);
      double sigma_c = 0.0;
      if (num_bounds_ > 0 && mu > 0.0) {
        double mu_aff = 0.0;
        for (Index j = 0; j < n_; ++j) {
          if (has_lower_[j])
            mu_aff += (sl_[j] + ap_aff * aff.dx[j]) * (zl_[j] + ad_aff * aff.dzl[j]);
          if (has_upper_[j])
            mu_aff += (su_[j] - ap_aff * aff.dx[j]) * (zu_[j] + ad_aff * aff.dzu[j]);
        }
        mu_aff /= num_bounds_;
        sigma_c = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);
      }

      // Corrector.
      for (Index j = 0; j < n_; ++j) {
        if (has_lower_[j]) tl[j] = sigma_c * mu - sl_[j] * zl_[j] - aff.dx[j] * aff.dzl[j];
        if (has_upper_[j]) tu[j] = sigma_c * mu - su_[j] * zu_[j] + aff.dx[j] * aff.dzu[j];
      }
      Direction dir = direction(rp, rd, tl, tu);
      if (!aff.dx.allFinite() || !dir.dx.allFinite() || !dir.dy.allFinite() ||
          !dir.dzl.allFinite() || !dir.dzu.allFinite()) {
        // A slack hit zero in floating point; the current iterate is the best we get.
        result.status = worst <= s_.accept_tolerance ? IpmStatus::Converged
                                                     : IpmStatus::NumericalError;
        break;
      }

      const double eta = mu < 1e-6 ? 0.9999 : 0.995;
      double ap = std::min(1.0, eta * primal_step(dir));
      double ad = std::min(1.0, eta * dual_step(dir));
      if (!quadratic_free_ && !s_.separate_steps) ap = ad = std::min(ap, ad);
      stalls = (ap < 1e-10 && ad < 1e-10) ? stalls + 1 : 0;

      x_ += ap * dir.dx;
      y_ += ad * dir.dy;
      zl_ += ad * dir.dzl;
      zu_ += ad * dir.dzu;
      for (Index j = 0; j < n_; ++j) {
        // Keep multipliers of absent bounds exactly zero.
        if (!has_lower_[j]) zl_[j] = 0.0;
        if (!has_upper_[j]) zu_[j] = 0.0;
      }
    }
    result.x = x_;
    return result;
  }

private:
  struct Direction {
    VectorXd dx, dy, dzl, dzu;
  };

  void initialize() {
    x_.resize(n_);
    for (Index j = 0; j < n_; ++j) {
      const double l = p_.lower[j], u = p_.upper[j];
      if (has_lower_[j] && has_upper_[j])
        x_[j] = 0.5 * (l + u);
      else if (has_lower_[j])
        x_[j] = l + 1.0;
      else if (has_upper_[j])
        x_[j] = u - 1.0;
      else
        x_[j] = 0.0;
    }
    y_ = VectorXd::Zero(m_);
    zl_ = VectorXd::Zero(n_);
    zu_ = VectorXd::Zero(n_);
    for (Index j = 0; j < n_; ++j) {
      if (has_lower_[j]) zl_[j] = 1.0;
      if (has_upper_[j]) zu_[j] = 1.0;
    }
    quadratic_free_ = p_.hessian.nonZeros() == 0;
    sl_ = VectorXd::Ones(n_);
    su_ = VectorXd::Ones(n_);
  }

  void compute_slacks() {
    for (Index j = 0; j < n_; ++j) {
      sl_[j] = has_lower_[j] ? x_[j] - p_.lower[j] : 1.0;
      su_[j] = has_upper_[j] ? p_.upper[j] - x_[j] : 1.0;
    }
  }

  double complementarity() const {
    if (num_bounds_ == 0) return 0.0;
    double acc = 0.0;
    for (Index j = 0; j < n_; ++j) {
      if (has_lower_[j]) acc += sl_[j] * zl_[j];
      if (has_upper_[j]) acc += su_[j] * zu_[j];
    }
    return acc / num_bounds_;
  }

  // Lower triangle of the KKT matrix with every diagonal entry present.
  bool build_kkt() {
    std::vector<Triplet> trips;
    trips.reserve(p_.hessian.nonZeros() + p_.eq.nonZeros() + n_ + m_);
    for (Index col = 0; col < p_.hessian.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(p_.hessian, col); it; ++it)
        if (it.row() >= it.col()) trips.emplace_back(it.row(), it.col(), it.value());
    for (Index col = 0; col < p_.eq.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(p_.eq, col); it; ++it)
        trips.emplace_back(n_ + it.row(), it.col(), it.value());
    for (Index i = 0; i < n_ + m_; ++i) trips.emplace_back(i, i, 0.0);

    kkt_.resize(n_ + m_, n_ + m_);
    kkt_.setFromTriplets(trips.begin(), trips.end());
    kkt_.makeCompressed();

    hess_diag_ = VectorXd::Zero(n_);
    for (Index col = 0; col < p_.hessian.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(p_.hessian, col); it; ++it)
        if (it.row() == it.col()) hess_diag_[col] += it.value();

    diag_pos_.resize(n_ + m_);
    const int* outer = kkt_.outerIndexPtr();
    const int* inner = kkt_.innerIndexPtr();
    for (Index c = 0; c < n_ + m_; ++c) {
      if (outer[c] >= outer[c + 1] || inner[outer[c]] != c) return false;
      diag_pos_[c] = outer[c];
    }
    ldlt_.analyzePattern(kkt_);
    return ldlt_.info() == Eigen::Success;
  }

  bool factorize() {
    double* values = kkt_.valuePtr();
    for (double reg : {kPrimalRegularization, 1e-7, 1e-5}) {
      for (Index j = 0; j < n_; ++j) values[diag_pos_[j]] = hess_diag_[j] + sigma_[j] + reg;
      for (Index i = 0; i < m_; ++i) values[diag_pos_[n_ + i]] = -std::max(reg, kDualRegularization);
      ldlt_.factorize(kkt_);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  // Product with the unregularized KKT matrix.
  VectorXd kkt_times(const VectorXd& v) const {
    VectorXd out(n_ + m_);
    const auto vx = v.head(n_);
    const auto vw = v.tail(m_);
    out.head(n_) = p_.hessian * vx + sigma_.cwiseProduct(vx) + et_ * vw;
    out.tail(m_) = p_.eq * vx;
    return out;
  }

  VectorXd solve_kkt(const VectorXd& rhs) const {
    VectorXd v = ldlt_.solve(rhs);
    const double scale = 1.0 + inf_norm(rhs);
    for (int k = 0; k < 3; ++k) {
      const VectorXd res = rhs - kkt_times(v);
      if (inf_norm(res) <= 1e-15 * scale) break;
      v += ldlt_.solve(res);
    }
    return v;
  }

  Direction direction(const VectorXd& rp, const VectorXd& rd, const VectorXd& tl,
                      const VectorXd& tu) const {
    VectorXd rhs(n_ + m_);
    for (Index j = 0; j < n_; ++j) {
      double v = -rd[j];
      if (has_lower_[j]) v += tl[j] / sl_[j];
      if (has_upper_[j]) v -= tu[j] / su_[j];
      rhs[j] = v;
    }
    rhs.tail(m_) = -rp;
    const VectorXd sol = solve_kkt(rhs);

    Direction d;
    d.dx = sol.head(n_);
    d.dy = -sol.tail(m_);
    d.dzl = VectorXd::Zero(n_);
    d.dzu = VectorXd::Zero(n_);
    for (Index j = 0; j < n_; ++j) {
      if (has_lower_[j]) d.dzl[j] = (tl[j] - zl_[j] * d.dx[j]) / sl_[j];
      if (has_upper_[j]) d.dzu[j] = (tu[j] + zu_[j] * d.dx[j]) / su_[j];
    }
    return d;
  }

  double primal_step(const Direction& d) const {
    double a = kInf;
    for (Index j = 0; j < n_; ++j) {
      if (has_lower_[j] && d.dx[j] < 0.0) a = std::min(a, -sl_[j] / d.dx[j]);
      if (has_upper_[j] && d.dx[j] > 0.0) a = std::min(a, su_[j] / d.dx[j]);
    }
    return std::min(a, 1.0 / 0.9999);
  }

  double dual_step(const Direction& d) const {
    double a = kInf;
    for (Index j = 0; j < n_; ++j) {
      if (has_lower_[j] && d.dzl[j] < 0.0) a = std::min(a, -zl_[j] / d.dzl[j]);
      if (has_upper_[j] && d.dzu[j] < 0.0) a = std::min(a, -zu_[j] / d.dzu[j]);
    }
    return std::min(a, 1.0 / 0.9999);
  }

  const StandardForm& p_;
  const IpmSettings& s_;
  Index n_ = 0, m_ = 0;
  int num_bounds_ = 0;
  bool quadratic_free_ = true;
  std::vector<bool> has_lower_, has_upper_;
  SparseMatrix et_;
  SparseMatrix kkt_;
  std::vector<Index> diag_pos_;
  VectorXd hess_diag_, sigma_;
  VectorXd x_, y_, zl_, zu_, sl_, su_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

}  // namespace

IpmResult interior_point(const StandardForm& problem, const IpmSettings& settings) {
  const Index n = problem.linear.size();
  const Index m = problem.rhs.size();

  // Eliminate fixed variables.
  std::vector<Index> free_of(n, -1);
  VectorXd fixed = VectorXd::Zero(n);
  Index n_free = 0;
  for (Index j = 0; j < n; ++j) {
    const double l = problem.lower[j], u = problem.upper[j];
    if (l > u) {
      IpmResult r;
      r.status = IpmStatus::Infeasible;
      r.x = VectorXd::Zero(n);
      return r;
    }
    if (std::isfinite(l) && std::isfinite(u) && u - l <= 1e-14 * (1.0 + std::abs(l))) {
      fixed[j] = 0.5 * (l + u);
    } else {
      free_of[j] = n_free++;
    }
  }

  VectorXd rhs = problem.rhs - problem.eq * fixed;
  VectorXd lin = problem.linear + problem.hessian * fixed;

  // Rows left without free variables.
  std::vector<Index> row_nnz(m, 0);
  std::vector<Triplet> trips;
  trips.reserve(problem.eq.nonZeros());
  for (Index col = 0; col < problem.eq.outerSize(); ++col) {
    if (free_of[col] < 0) continue;
    for (SparseMatrix::InnerIterator it(problem.eq, col); it; ++it)
      if (it.value() != 0.0) ++row_nnz[it.row()];
  }
  std::vector<Index> row_of(m, -1);
  Index m_kept = 0;
  const double scale = 1.0 + inf_norm(problem.rhs);
  for (Index i = 0; i < m; ++i) {
    if (row_nnz[i] > 0) {
      row_of[i] = m_kept++;
    } else if (std::abs(rhs[i]) > settings.accept_tolerance * scale) {
      IpmResult r;
      r.status = IpmStatus::Infeasible;
      r.x = fixed;
      return r;
    }
  }

  StandardForm reduced;
  reduced.linear.resize(n_free);
  reduced.lower.resize(n_free);
  reduced.upper.resize(n_free);
  for (Index j = 0; j < n; ++j) {
    if (free_of[j] < 0) continue;
    reduced.linear[free_of[j]] = lin[j];
    reduced.lower[free_of[j]] = problem.lower[j];
    reduced.upper[free_of[j]] = problem.upper[j];
  }
  reduced.rhs.resize(m_kept);
  for (Index i = 0; i < m; ++i)
    if (row_of[i] >= 0) reduced.rhs[row_of[i]] = rhs[i];

  for (Index col = 0; col < problem.eq.outerSize(); ++col) {
    if (free_of[col] < 0) continue;
    for (SparseMatrix::InnerIterator it(problem.eq, col); it; ++it)
      if (row_of[it.row()] >= 0 && it.value() != 0.0)
        trips.emplace_back(row_of[it.row()], free_of[col], it.value());
  }
  reduced.eq.resize(m_kept, n_free);
  reduced.eq.setFromTriplets(trips.begin(), trips.end());

  trips.clear();
  for (Index col = 0; col < problem.hessian.outerSize(); ++col) {
    if (free_of[col] < 0) continue;
    for (SparseMatrix::InnerIterator it(problem.hessian, col); it; ++it)
      if (free_of[it.row()] >= 0 && it.value() != 0.0)
        trips.emplace_back(free_of[it.row()], free_of[col], it.value());
  }
  reduced.hessian.resize(n_free, n_free);
  reduced.hessian.setFromTriplets(trips.begin(), trips.end());

  IpmResult result;
  if (n_free == 0) {
    result.status = IpmStatus::Converged;
  } else {
    result = Solver(reduced, settings).run();
    if (result.status == IpmStatus::MaxIterations || result.status == IpmStatus::NumericalError) {
      IpmSettings other = settings;
      other.separate_steps = !settings.separate_steps;
      IpmResult retry = Solver(reduced, other).run();
      if (retry.status != IpmStatus::MaxIterations && retry.status != IpmStatus::NumericalError)
        result = std::move(retry);
    }
  }

  VectorXd x = fixed;
  for (Index j = 0; j < n; ++j)
    if (free_of[j] >= 0 && result.x.size() == n_free) x[j] = result.x[free_of[j]];
  result.x = std::move(x);
  result.objective = 0.5 * result.x.dot(problem.hessian * result.x) + problem.linear.dot(result.x);
  return result;
}

LoweredForm lower_general_form(const GeneralForm& p) {
  LoweredForm out;
  const Index n = p.linear.size();
  VectorXd lower = p.lower, upper = p.upper;

  const Eigen::SparseMatrix<double, Eigen::RowMajor> ineq = p.ineq;
  std::vector<Index> general_rows;
  for (Index i = 0; i < ineq.rows(); ++i) {
    Index count = 0, col = -1;
    double coef = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ineq, i); it; ++it) {
      if (it.value() == 0.0) continue;
      ++count;
      col = it.col();
      coef = it.value();
    }
    const double d = p.ineq_rhs[i];
    if (count == 0) {
      if (d < 0.0) out.trivially_infeasible = true;
    } else if (count == 1) {
      if (coef > 0.0)
        upper[col] = std::min(upper[col], d / coef);
      else
        lower[col] = std::max(lower[col], d / coef);
    } else {
      general_rows.push_back(i);
    }
  }
  for (Index j = 0; j < n; ++j) {
    if (lower[j] > upper[j]) {
      // Bounds touching up to rounding collapse to a point.
      if (lower[j] - upper[j] <= 1e-12 * (1.0 + std::abs(lower[j])))
        lower[j] = upper[j] = 0.5 * (lower[j] + upper[j]);
      else
        out.trivially_infeasible = true;
    }
  }

  const Index ns = static_cast<Index>(general_rows.size());
  const Index me = p.eq.rows();
  StandardForm& f = out.form;
  out.num_original = n;

  std::vector<Triplet> trips;
  trips.reserve(p.eq.nonZeros() + ineq.nonZeros() + ns);
  for (Index col = 0; col < p.eq.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(p.eq, col); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (Index k = 0; k < ns; ++k) {
    const Index i = general_rows[k];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ineq, i); it; ++it)
      trips.emplace_back(me + k, it.col(), it.value());
    trips.emplace_back(me + k, n + k, 1.0);
  }
  f.eq.resize(me + ns, n + ns);
  f.eq.setFromTriplets(trips.begin(), trips.end());

  f.rhs.resize(me + ns);
  f.rhs.head(me) = p.eq_rhs;
  for (Index k = 0; k < ns; ++k) f.rhs[me + k] = p.ineq_rhs[general_rows[k]];

  f.linear = VectorXd::Zero(n + ns);
  f.linear.head(n) = p.linear;
  f.lower.resize(n + ns);
  f.upper.resize(n + ns);
  f.lower.head(n) = lower;
  f.upper.head(n) = upper;
  f.lower.tail(ns).setZero();
  f.upper.tail(ns).setConstant(kInf);

  f.hessian.resize(n + ns, n + ns);
  if (p.hessian.nonZeros() > 0) {
    trips.clear();
    for (Index col = 0; col < p.hessian.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(p.hessian, col); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    f.hessian.setFromTriplets(trips.begin(), trips.end());
  }
  return out;
}

IpmResult phase_one(const StandardForm& problem, const IpmSettings& settings) {
  const Index n = problem.linear.size();
  const Index m = problem.rhs.size();

  StandardForm f;
  std::vector<Triplet> trips;
  trips.reserve(problem.eq.nonZeros() + 2 * m);
  for (Index col = 0; col < problem.eq.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(problem.eq, col); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (Index i = 0; i < m; ++i) {
    trips.emplace_back(i, n + i, 1.0);
    trips.emplace_back(i, n + m + i, -1.0);
  }
  f.eq.resize(m, n + 2 * m);
  f.eq.setFromTriplets(trips.begin(), trips.end());
  f.rhs = problem.rhs;
  f.linear = VectorXd::Zero(n + 2 * m);
  f.linear.tail(2 * m).setOnes();
  f.lower.resize(n + 2 * m);
  f.upper.resize(n + 2 * m);
  f.lower.head(n) = problem.lower;
  f.upper.head(n) = problem.upper;
  f.lower.tail(2 * m).setZero();
  f.upper.tail(2 * m).setConstant(kInf);
  f.hessian.resize(n + 2 * m, n + 2 * m);

  IpmResult r = interior_point(f, settings);
  r.x = r.x.head(n).eval();
  return r;
}

}  // namespace gridshield::detail
