// SPDX-License-Identifier: Apache-2.0
#include <gridshield/czono.hpp>
#include <gridshield/errors.hpp>

#include "json.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gridshield {

namespace {

using Eigen::Index;
using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

void append(std::vector<Triplet>& trips, const SparseMatrix& m, Index row0, Index col0,
            double scale = 1.0) {
  for (Index col = 0; col < m.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(m, col); it; ++it)
      trips.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
}

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& trips) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

void require_same_dimension(const char* op, const ConstrainedZonotope& a,
                            const ConstrainedZonotope& b) {
  if (a.dimension() != b.dimension())
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.dimension()) + " vs " +
                                std::to_string(b.dimension()) + ")");
}

LinearProgram factor_program(const ConstrainedZonotope& z) {
  const Index g = z.num_generators();
  LinearProgram lp;
  lp.objective = VectorXd::Zero(g);
  lp.eq_lhs = z.con_lhs();
  lp.eq_rhs = z.con_rhs();
  lp.ineq_lhs.resize(0, g);
  lp.ineq_rhs.resize(0);
  lp.bounds = VariableBounds{VectorXd::Constant(g, -1.0), VectorXd::Constant(g, 1.0)};
  return lp;
}

}  // namespace

IntervalBox::IntervalBox(VectorXd lo, VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size())
    throw std::invalid_argument("IntervalBox: lower and upper differ in length");
  for (Index i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i]))
      throw std::invalid_argument("IntervalBox: lower > upper at index " + std::to_string(i));
}

bool IntervalBox::contains(const VectorXd& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  return true;
}

ConstrainedZonotope::ConstrainedZonotope(VectorXd center, SparseMatrix generators)
    : center_(std::move(center)), generators_(std::move(generators)) {
  if (generators_.rows() != center_.size())
    throw std::invalid_argument("ConstrainedZonotope: generators rows != center length");
  con_lhs_.resize(0, generators_.cols());
  con_rhs_.resize(0);
}

ConstrainedZonotope::ConstrainedZonotope(VectorXd center, SparseMatrix generators,
                                         SparseMatrix con_lhs, VectorXd con_rhs)
    : center_(std::move(center)),
      generators_(std::move(generators)),
      con_lhs_(std::move(con_lhs)),
      con_rhs_(std::move(con_rhs)) {
  if (generators_.rows() != center_.size())
    throw std::invalid_argument("ConstrainedZonotope: generators rows != center length");
  if (con_lhs_.rows() == 0 && con_lhs_.cols() != generators_.cols())
    con_lhs_.resize(0, generators_.cols());
  if (con_lhs_.cols() != generators_.cols())
    throw std::invalid_argument("ConstrainedZonotope: constraint columns != generator count");
  if (con_lhs_.rows() != con_rhs_.size())
    throw std::invalid_argument("ConstrainedZonotope: constraint rows != rhs length");
  generators_.makeCompressed();
  con_lhs_.makeCompressed();
}

ConstrainedZonotope from_interval(const IntervalBox& box) {
  if (box.lower.size() != box.upper.size())
    throw std::invalid_argument("from_interval: lower and upper differ in length");
  const Index k = box.lower.size();
  const VectorXd half = 0.5 * (box.upper - box.lower);
  std::vector<Triplet> trips;
  for (Index i = 0; i < k; ++i)
    if (half[i] != 0.0) trips.emplace_back(i, i, half[i]);
  return ConstrainedZonotope(box.lower + half, from_triplets(k, k, trips));
}

ConstrainedZonotope linear_map(const SparseMatrix& map, const ConstrainedZonotope& z) {
  if (map.cols() != z.dimension())
    throw std::invalid_argument("linear_map: matrix has " + std::to_string(map.cols()) +
                                " columns, set has dimension " +
                                std::to_string(z.dimension()));
  SparseMatrix g = map * z.generators();
  return ConstrainedZonotope(map * z.center(), std::move(g), z.con_lhs(), z.con_rhs());
}

ConstrainedZonotope linear_map(const Eigen::MatrixXd& map, const ConstrainedZonotope& z) {
  return linear_map(SparseMatrix(map.sparseView()), z);
}

ConstrainedZonotope minkowski_sum(const ConstrainedZonotope& z1, const ConstrainedZonotope& z2) {
  require_same_dimension("minkowski_sum", z1, z2);
  const Index k = z1.dimension();
  const Index g1 = z1.num_generators(), g2 = z2.num_generators();
  const Index q1 = z1.num_constraints(), q2 = z2.num_constraints();

  std::vector<Triplet> trips;
  trips.reserve(z1.generators().nonZeros() + z2.generators().nonZeros());
  append(trips, z1.generators(), 0, 0);
  append(trips, z2.generators(), 0, g1);
  SparseMatrix g = from_triplets(k, g1 + g2, trips);

  trips.clear();
  trips.reserve(z1.con_lhs().nonZeros() + z2.con_lhs().nonZeros());
  append(trips, z1.con_lhs(), 0, 0);
  append(trips, z2.con_lhs(), q1, g1);
  SparseMatrix f = from_triplets(q1 + q2, g1 + g2, trips);

  VectorXd b(q1 + q2);
  b << z1.con_rhs(), z2.con_rhs();
  return ConstrainedZonotope(z1.center() + z2.center(), std::move(g), std::move(f), std::move(b));
}

ConstrainedZonotope intersect(const ConstrainedZonotope& z1, const ConstrainedZonotope& z2) {
  require_same_dimension("intersect", z1, z2);
  const Index k = z1.dimension();
  const Index g1 = z1.num_generators(), g2 = z2.num_generators();
  const Index q1 = z1.num_constraints(), q2 = z2.num_constraints();

  std::vector<Triplet> trips;
  append(trips, z1.generators(), 0, 0);
  SparseMatrix g = from_triplets(k, g1 + g2, trips);

  trips.clear();
  trips.reserve(z1.con_lhs().nonZeros() + z2.con_lhs().nonZeros() +
                z1.generators().nonZeros() + z2.generators().nonZeros());
  append(trips, z1.con_lhs(), 0, 0);
  append(trips, z2.con_lhs(), q1, g1);
  append(trips, z1.generators(), q1 + q2, 0);
  append(trips, z2.generators(), q1 + q2, g1, -1.0);
  SparseMatrix f = from_triplets(q1 + q2 + k, g1 + g2, trips);

  VectorXd b(q1 + q2 + k);
  b << z1.con_rhs(), z2.con_rhs(), z2.center() - z1.center();
  return ConstrainedZonotope(z1.center(), std::move(g), std::move(f), std::move(b));
}

ConstrainedZonotope prune_zero_generators(const ConstrainedZonotope& z) {
  const Index g = z.num_generators();
  std::vector<bool> used(g, false);
  for (const SparseMatrix* m : {&z.generators(), &z.con_lhs()})
    for (Index col = 0; col < m->outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(*m, col); it; ++it)
        if (it.value() != 0.0) used[col] = true;

  std::vector<Index> new_col(g, -1);
  Index kept = 0;
  for (Index j = 0; j < g; ++j)
    if (used[j]) new_col[j] = kept++;

  auto remap = [&](const SparseMatrix& m) {
    std::vector<Triplet> trips;
    for (Index col = 0; col < m.outerSize(); ++col)
      if (new_col[col] >= 0)
        for (SparseMatrix::InnerIterator it(m, col); it; ++it)
          trips.emplace_back(it.row(), new_col[col], it.value());
    return from_triplets(m.rows(), kept, trips);
  };
  return ConstrainedZonotope(z.center(), remap(z.generators()), remap(z.con_lhs()), z.con_rhs());
}

bool is_empty(const ConstrainedZonotope& z, const SolverSettings& settings) {
  if (z.num_constraints() == 0) return false;
  return !find_feasible_point(factor_program(z), settings).feasible;
}

namespace {

LinearProgram membership_program(const ConstrainedZonotope& z, const VectorXd& x) {
  if (x.size() != z.dimension())
    throw std::invalid_argument("contains: point dimension mismatch");
  const Index k = z.dimension(), q = z.num_constraints(), g = z.num_generators();
  LinearProgram lp = factor_program(z);
  std::vector<Triplet> trips;
  append(trips, z.generators(), 0, 0);
  append(trips, z.con_lhs(), k, 0);
  lp.eq_lhs = from_triplets(k + q, g, trips);
  lp.eq_rhs.resize(k + q);
  lp.eq_rhs << x - z.center(), z.con_rhs();
  return lp;
}

}  // namespace

bool contains(const ConstrainedZonotope& z, const VectorXd& x, const SolverSettings& settings) {
  return find_feasible_point(membership_program(z, x), settings).feasible;
}

double containment_residual(const ConstrainedZonotope& z, const VectorXd& x,
                            const SolverSettings& settings) {
  return find_feasible_point(membership_program(z, x), settings).residual;
}

SupportResult support_point(const ConstrainedZonotope& z, const VectorXd& direction,
                            const SolverSettings& settings) {
  if (direction.size() != z.dimension())
    throw std::invalid_argument("support: direction dimension mismatch");
  LinearProgram lp = factor_program(z);
  lp.objective = z.generators().transpose() * direction;
  const LpSolution sol = solve_lp(lp, settings);
  switch (sol.status) {
    case SolveStatus::Optimal: break;
    case SolveStatus::Infeasible: throw EmptySetError("support: the set is empty");
    default:
      throw SolverError(std::string("support: LP solver reported ") + to_string(sol.status));
  }
  SupportResult out;
  out.factors = sol.x;
  out.point = z.center() + z.generators() * sol.x;
  out.value = direction.dot(z.center()) + sol.value;
  return out;
}

double support(const ConstrainedZonotope& z, const VectorXd& direction,
               const SolverSettings& settings) {
  return support_point(z, direction, settings).value;
}

IntervalBox interval_hull(const ConstrainedZonotope& z, const SolverSettings& settings) {
  const Index k = z.dimension();
  VectorXd lo(k), hi(k);
  for (Index i = 0; i < k; ++i) {
    VectorXd e = VectorXd::Zero(k);
    e[i] = 1.0;
    hi[i] = support(z, e, settings);
    lo[i] = -support(z, -e, settings);
    // Solver noise can cross a degenerate (zero-width) axis.
    if (lo[i] > hi[i]) lo[i] = hi[i] = 0.5 * (lo[i] + hi[i]);
  }
  return IntervalBox(lo, hi);
}

namespace {

nlohmann::json rows_json(const SparseMatrix& m) {
  const Eigen::MatrixXd d(m);
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < d.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < d.cols(); ++j) row.push_back(d(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

VectorXd vector_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array())
    throw std::invalid_argument(std::string("czono json: missing array '") + key + "'");
  const auto& a = j[key];
  VectorXd v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Index>(i)] = a[i].get<double>();
  return v;
}

SparseMatrix matrix_from(const nlohmann::json& j, const char* key, Index cols_hint) {
  if (!j.contains(key) || !j[key].is_array())
    throw std::invalid_argument(std::string("czono json: missing array '") + key + "'");
  const auto& rows = j[key];
  const Index r = static_cast<Index>(rows.size());
  Index c = cols_hint;
  if (r > 0) c = static_cast<Index>(rows[0].size());
  std::vector<Triplet> trips;
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c)
      throw std::invalid_argument(std::string("czono json: ragged matrix '") + key + "'");
    for (Index jx = 0; jx < c; ++jx) {
      const double v = row[static_cast<std::size_t>(jx)].get<double>();
      if (v != 0.0) trips.emplace_back(i, jx, v);
    }
  }
  return from_triplets(r, c, trips);
}

}  // namespace

std::string to_json(const ConstrainedZonotope& z) {
  nlohmann::json j;
  j["c"] = std::vector<double>(z.center().data(), z.center().data() + z.center().size());
  j["G"] = rows_json(z.generators());
  j["F"] = rows_json(z.con_lhs());
  j["b"] = std::vector<double>(z.con_rhs().data(), z.con_rhs().data() + z.con_rhs().size());
  return j.dump();
}

ConstrainedZonotope czono_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("czono json: ") + e.what());
  }
  try {
    VectorXd c = vector_from(j, "c");
    SparseMatrix g = matrix_from(j, "G", 0);
    SparseMatrix f = matrix_from(j, "F", g.cols());
    VectorXd b = vector_from(j, "b");
    return ConstrainedZonotope(std::move(c), std::move(g), std::move(f), std::move(b));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("czono json: ") + e.what());
  }
}

}  // namespace gridshield
