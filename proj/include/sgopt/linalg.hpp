/*
 Copyright 2026 The SGOPT Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

/**
 * @file
 * @brief Dense kernels for the local subproblems of variable elimination.
 *
 * Everything here works on small dense blocks. A local system is laid out as
 * [frontal | separator | rhs]; each row is either a finite-weight row or a hard
 * constraint. Constraints never carry a numeric weight.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sgopt/errors.hpp"

namespace sgopt {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Relative threshold below which a pivot counts as zero.
inline constexpr double kPivotTolerance = 1e-12;

/// Weight of one row of a least-squares system: finite (w >= 0) or a hard constraint.
struct RowWeight {
  enum class Kind { Finite, Constraint };

  Kind kind = Kind::Finite;
  double value = 1.0;

  static RowWeight finite(double w) {
    if (!(w >= 0.0)) throw SolverError(ErrorKind::DimensionMismatch, "negative row weight");
    return {Kind::Finite, w};
  }
  static RowWeight constraint() { return {Kind::Constraint, 0.0}; }

  bool is_constraint() const { return kind == Kind::Constraint; }
  bool operator==(const RowWeight&) const = default;
};

namespace detail {

/// Householder reflector H = I - beta v v^T acting on rows [row, row + v.size()).
template <typename Scalar>
struct Reflector {
  Index row = 0;
  VectorX<Scalar> v;
  Scalar beta = Scalar(0);
};

/// Zeroes column `col` of `m` below `row` by one reflection applied to columns
/// [col, m.cols()). Returns false when no reflection was needed.
template <typename Scalar>
bool reflect_column(MatrixX<Scalar>& m, Index row, Index col, Reflector<Scalar>& out) {
  using std::abs;
  using std::sqrt;
  const Index n = m.rows() - row;
  out.row = row;
  out.beta = Scalar(0);
  if (n <= 1) return false;
  auto x = m.col(col).segment(row, n);
  const Scalar tail = x.tail(n - 1).squaredNorm();
  if (tail == Scalar(0)) return false;
  const Scalar norm = sqrt(x(0) * x(0) + tail);
  const Scalar alpha = x(0) >= Scalar(0) ? -norm : norm;
  out.v = x;
  out.v(0) -= alpha;
  out.beta = Scalar(2) / out.v.squaredNorm();
  const Index width = m.cols() - col;
  auto block = m.block(row, col, n, width);
  const RowVectorX<Scalar> w = out.beta * (out.v.transpose() * block);
  block.noalias() -= out.v * w;
  m(row, col) = alpha;
  m.col(col).segment(row + 1, n - 1).setZero();
  return true;
}

template <typename Scalar, typename Derived>
void apply_reflector(const Reflector<Scalar>& h, Eigen::MatrixBase<Derived>& b) {
  if (h.beta == Scalar(0)) return;
  auto block = b.middleRows(h.row, h.v.size());
  const RowVectorX<Scalar> w = h.beta * (h.v.transpose() * block);
  block.noalias() -= h.v * w;
}

template <typename Scalar>
Scalar max_abs(const MatrixX<Scalar>& m) {
  return m.size() == 0 ? Scalar(0) : m.cwiseAbs().maxCoeff();
}

}  // namespace detail

/**
 * @brief Householder QR of a dense matrix with nonnegative R diagonal.
 *
 * r() is min(rows, cols) x cols and upper trapezoidal. apply_qt() maps a right-hand
 * side b to Q^T b, so that ||A x - b||^2 = ||R x - (Q^T b).head(k)||^2 + ||(Q^T b).tail||^2.
 */
template <typename Scalar>
class HouseholderFactorization {
 public:
  explicit HouseholderFactorization(const MatrixX<Scalar>& a) : rows_(a.rows()) {
    MatrixX<Scalar> work = a;
    const Index k = std::min(a.rows(), a.cols());
    flips_.assign(static_cast<std::size_t>(k), false);
    for (Index j = 0; j < k; ++j) {
      detail::Reflector<Scalar> h;
      if (detail::reflect_column(work, j, j, h)) reflectors_.push_back(std::move(h));
      if (work(j, j) < Scalar(0)) {
        work.row(j).rightCols(work.cols() - j) *= Scalar(-1);
        flips_[static_cast<std::size_t>(j)] = true;
      }
    }
    r_ = work.topRows(k).template triangularView<Eigen::Upper>();
  }

  const MatrixX<Scalar>& r() const { return r_; }
  Index rank_bound() const { return r_.rows(); }

  template <typename Derived>
  MatrixX<Scalar> apply_qt(const Eigen::MatrixBase<Derived>& b) const {
    if (b.rows() != rows_) throw SolverError(ErrorKind::DimensionMismatch, "apply_qt: row count");
    MatrixX<Scalar> out = b;
    for (const auto& h : reflectors_) detail::apply_reflector(h, out);
    for (std::size_t j = 0; j < flips_.size(); ++j)
      if (flips_[j]) out.row(static_cast<Index>(j)) *= Scalar(-1);
    return out;
  }

 private:
  Index rows_;
  MatrixX<Scalar> r_;
  std::vector<detail::Reflector<Scalar>> reflectors_;
  std::vector<bool> flips_;
};

template <typename Scalar>
HouseholderFactorization<Scalar> qr_factorize(const MatrixX<Scalar>& a) {
  if (a.rows() < 1 || a.cols() < 1) throw SolverError(ErrorKind::DimensionMismatch, "qr_factorize: empty matrix");
  return HouseholderFactorization<Scalar>(a);
}

/// Output of one local elimination.
///
/// conditional_rows spans [frontal | separator | rhs]; its frontal block is upper
/// triangular with positive diagonal. marginal_rows spans [separator | rhs] only.
template <typename Scalar>
struct EliminationResult {
  MatrixX<Scalar> conditional_rows;
  std::vector<RowWeight> conditional_weights;
  MatrixX<Scalar> marginal_rows;
  std::vector<RowWeight> marginal_weights;
  /// Squared residual of finite rows left with no separator coefficients.
  Scalar constant_cost = Scalar(0);

  bool is_constrained() const {
    return std::any_of(conditional_weights.begin(), conditional_weights.end(),
                       [](const RowWeight& w) { return w.is_constraint(); });
  }
};

/**
 * @brief Eliminates the first `frontal_cols` columns of a mixed finite/constraint system.
 *
 * Constraint rows are reduced first with partial pivoting; each pivot row becomes a
 * constraint row of the conditional and is substituted into every other row. The
 * frontal columns no constraint pins are then triangularized with Householder
 * reflections over the finite rows. Finite rows are pre-scaled by sqrt(w).
 *
 * For every assignment of the frontal and separator variables satisfying the
 * constraints, the finite residual of the input equals the residual of the
 * conditional's finite rows plus the marginal's finite rows plus constant_cost.
 */
template <typename Scalar>
EliminationResult<Scalar> constrained_eliminate(const MatrixX<Scalar>& system, std::span<const RowWeight> weights,
                                                Index frontal_cols) {
  using std::abs;
  using std::sqrt;
  const Index cols = system.cols();
  if (static_cast<Index>(weights.size()) != system.rows())
    throw SolverError(ErrorKind::DimensionMismatch, "constrained_eliminate: one weight per row");
  if (frontal_cols < 0 || frontal_cols + 1 > cols)
    throw SolverError(ErrorKind::DimensionMismatch, "constrained_eliminate: frontal columns exceed system");
  const Index f = frontal_cols;
  const Index sep = cols - 1 - f;

  std::vector<Index> constraint_idx, finite_idx;
  for (Index i = 0; i < system.rows(); ++i) {
    const auto& w = weights[static_cast<std::size_t>(i)];
    if (w.is_constraint())
      constraint_idx.push_back(i);
    else if (w.value > 0.0)
      finite_idx.push_back(i);
  }
  MatrixX<Scalar> con(static_cast<Index>(constraint_idx.size()), cols);
  for (std::size_t r = 0; r < constraint_idx.size(); ++r) con.row(static_cast<Index>(r)) = system.row(constraint_idx[r]);
  MatrixX<Scalar> fin(static_cast<Index>(finite_idx.size()), cols);
  for (std::size_t r = 0; r < finite_idx.size(); ++r) {
    const Scalar s = sqrt(Scalar(weights[static_cast<std::size_t>(finite_idx[r])].value));
    fin.row(static_cast<Index>(r)) = s * system.row(finite_idx[r]);
  }

  std::vector<Scalar> col_scale(static_cast<std::size_t>(f), Scalar(0));
  for (Index j = 0; j < f; ++j) {
    Scalar m(0);
    if (con.rows() > 0) m = std::max(m, Scalar(con.col(j).cwiseAbs().maxCoeff()));
    if (fin.rows() > 0) m = std::max(m, Scalar(fin.col(j).cwiseAbs().maxCoeff()));
    col_scale[static_cast<std::size_t>(j)] = m;
  }
  // Largest magnitude each constraint row has held, coefficients and rhs apart.
  // Cancellation error in a reduced row is relative to these, not to its final size.
  std::vector<Scalar> row_scale(static_cast<std::size_t>(con.rows())), rhs_scale(row_scale.size());
  for (Index r = 0; r < con.rows(); ++r) {
    row_scale[static_cast<std::size_t>(r)] = con.row(r).head(cols - 1).cwiseAbs().maxCoeff();
    rhs_scale[static_cast<std::size_t>(r)] = abs(con(r, cols - 1));
  }
  const Scalar finite_scale = detail::max_abs<Scalar>(fin.leftCols(cols - 1));

  auto is_zero_pivot = [&](Scalar value, Index j) {
    const Scalar scale = col_scale[static_cast<std::size_t>(j)];
    return scale == Scalar(0) || abs(value) < Scalar(kPivotTolerance) * scale;
  };

  // Constraint pivoting.
  std::vector<Index> pivot_row_of(static_cast<std::size_t>(f), -1);
  std::vector<bool> used(static_cast<std::size_t>(con.rows()), false);
  for (Index j = 0; j < f; ++j) {
    Index best = -1;
    Scalar best_abs(0);
    for (Index r = 0; r < con.rows(); ++r) {
      if (used[static_cast<std::size_t>(r)]) continue;
      if (abs(con(r, j)) > best_abs) {
        best_abs = abs(con(r, j));
        best = r;
      }
    }
    if (best < 0 || is_zero_pivot(best_abs, j)) continue;
    used[static_cast<std::size_t>(best)] = true;
    pivot_row_of[static_cast<std::size_t>(j)] = best;
    const RowVectorX<Scalar> p = con.row(best);
    const Scalar p_coeff = p.head(cols - 1).cwiseAbs().maxCoeff();
    for (Index r = 0; r < con.rows(); ++r) {
      if (used[static_cast<std::size_t>(r)] || con(r, j) == Scalar(0)) continue;
      const Scalar alpha = con(r, j) / p(j);
      con.row(r) -= alpha * p;
      con(r, j) = Scalar(0);
      auto& rs = row_scale[static_cast<std::size_t>(r)];
      auto& hs = rhs_scale[static_cast<std::size_t>(r)];
      rs = std::max(rs, abs(alpha) * p_coeff);
      hs = std::max(hs, abs(alpha * p(cols - 1)));
    }
    if (fin.rows() > 0) {
      const VectorX<Scalar> factors = fin.col(j) / p(j);
      fin.noalias() -= factors * p;
      fin.col(j).setZero();
    }
  }

  // Householder over the frontal columns left unpinned.
  std::vector<Index> free_cols;
  for (Index j = 0; j < f; ++j)
    if (pivot_row_of[static_cast<std::size_t>(j)] < 0) free_cols.push_back(j);
  const Index k = static_cast<Index>(free_cols.size());
  if (fin.rows() < k)
    throw SolverError(ErrorKind::RankDeficient, "frontal block is not spanned by the adjacent rows");
  detail::Reflector<Scalar> h;
  for (Index idx = 0; idx < k; ++idx) {
    const Index j = free_cols[static_cast<std::size_t>(idx)];
    detail::reflect_column(fin, idx, j, h);
    if (is_zero_pivot(fin(idx, j), j))
      throw SolverError(ErrorKind::RankDeficient, "zero pivot in frontal column " + std::to_string(j));
  }
  // Compress the leftover finite rows to at most sep + 1 rows.
  if (fin.rows() - k > sep + 1) {
    for (Index c = 0; c <= sep && k + c < fin.rows(); ++c) detail::reflect_column(fin, k + c, f + c, h);
  }

  EliminationResult<Scalar> out;

  // Conditional: row j pins frontal column j.
  out.conditional_rows.resize(f, cols);
  out.conditional_weights.resize(static_cast<std::size_t>(f));
  std::vector<Index> free_slot(static_cast<std::size_t>(f), -1);
  for (Index idx = 0; idx < k; ++idx) free_slot[static_cast<std::size_t>(free_cols[static_cast<std::size_t>(idx)])] = idx;
  for (Index j = 0; j < f; ++j) {
    const Index pr = pivot_row_of[static_cast<std::size_t>(j)];
    if (pr >= 0) {
      out.conditional_rows.row(j) = con.row(pr);
      out.conditional_weights[static_cast<std::size_t>(j)] = RowWeight::constraint();
    } else {
      out.conditional_rows.row(j) = fin.row(free_slot[static_cast<std::size_t>(j)]);
      out.conditional_weights[static_cast<std::size_t>(j)] = RowWeight::finite(1.0);
    }
  }
  // Pivot rows may still touch earlier unpinned columns; clear them with the
  // (already triangular) Householder rows.
  for (Index j = 0; j < f; ++j) {
    for (Index jp = 0; jp < j; ++jp) {
      if (free_slot[static_cast<std::size_t>(jp)] < 0) continue;
      const Scalar v = out.conditional_rows(j, jp);
      if (v == Scalar(0)) continue;
      const RowVectorX<Scalar> src = out.conditional_rows.row(jp);
      out.conditional_rows.row(j) -= (v / src(jp)) * src;
      out.conditional_rows(j, jp) = Scalar(0);
    }
    if (out.conditional_rows(j, j) < Scalar(0)) out.conditional_rows.row(j) *= Scalar(-1);
  }

  // Marginal: leftover constraint rows first, then finite rows.
  const Scalar zero_tol = Scalar(kPivotTolerance) * finite_scale;
  std::vector<RowVectorX<Scalar>> rows;
  for (Index r = 0; r < con.rows(); ++r) {
    if (used[static_cast<std::size_t>(r)]) continue;
    const RowVectorX<Scalar> row = con.row(r).tail(sep + 1);
    const auto ri = static_cast<std::size_t>(r);
    if (sep == 0 || row.head(sep).cwiseAbs().maxCoeff() <= Scalar(kPivotTolerance) * row_scale[ri]) {
      if (abs(row(sep)) > Scalar(1e-9) * std::max(Scalar(1), rhs_scale[ri]))
        throw SolverError(ErrorKind::InfeasibleConstraint, "constraint rows are mutually inconsistent");
      continue;
    }
    rows.push_back(row);
    out.marginal_weights.push_back(RowWeight::constraint());
  }
  const Index fin_end = std::min<Index>(fin.rows(), k + sep + 1);
  for (Index r = k; r < fin.rows(); ++r) {
    const RowVectorX<Scalar> row = fin.row(r).tail(sep + 1);
    if (sep == 0 || row.head(sep).cwiseAbs().maxCoeff() <= zero_tol) {
      out.constant_cost += row(sep) * row(sep);
      continue;
    }
    if (r >= fin_end) continue;  // zero after compression
    rows.push_back(row);
    out.marginal_weights.push_back(RowWeight::finite(1.0));
  }
  out.marginal_rows.resize(static_cast<Index>(rows.size()), sep + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) out.marginal_rows.row(static_cast<Index>(r)) = rows[r];
  return out;
}

/// Back-substitution for an upper-triangular system R y = d.
template <typename Scalar>
VectorX<Scalar> solve_triangular(const MatrixX<Scalar>& r, const VectorX<Scalar>& d) {
  if (r.rows() != r.cols() || r.rows() != d.size())
    throw SolverError(ErrorKind::DimensionMismatch, "solve_triangular: shape");
  const Index n = r.rows();
  VectorX<Scalar> y(n);
  for (Index i = n - 1; i >= 0; --i) {
    if (r(i, i) == Scalar(0)) throw SolverError(ErrorKind::SingularDiagonal, "zero on the diagonal");
    Scalar acc = d(i);
    for (Index j = i + 1; j < n; ++j) acc -= r(i, j) * y(j);
    y(i) = acc / r(i, i);
  }
  return y;
}

}  // namespace sgopt
