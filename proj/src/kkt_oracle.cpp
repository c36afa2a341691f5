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

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>

#include "sgopt/solvers.hpp"

namespace sgopt {

Eigen::VectorXd kkt_solve_oracle(const Eigen::MatrixXd& F, const Eigen::VectorXd& g,
                                 std::span<const RowWeight> weights) {
  const Index rows = F.rows();
  const Index n = F.cols();
  if (g.size() != rows || static_cast<Index>(weights.size()) != rows)
    throw SolverError(ErrorKind::DimensionMismatch, "kkt_solve_oracle: shapes");

  std::vector<Index> con;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(rows);
  for (Index i = 0; i < rows; ++i) {
    if (weights[static_cast<std::size_t>(i)].is_constraint())
      con.push_back(i);
    else
      w(i) = weights[static_cast<std::size_t>(i)].value;
  }
  Eigen::MatrixXd C(static_cast<Index>(con.size()), n);
  Eigen::VectorXd d(static_cast<Index>(con.size()));
  for (std::size_t r = 0; r < con.size(); ++r) {
    C.row(static_cast<Index>(r)) = F.row(con[r]);
    d(static_cast<Index>(r)) = g(con[r]);
  }

  Eigen::MatrixXd C_ind(0, n);
  Eigen::VectorXd d_ind(0);
  if (C.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(C);
    const Eigen::VectorXd y = cod.solve(d);
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    if ((C * y - d).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw SolverError(ErrorKind::InfeasibleConstraint, "constraint rows are inconsistent");
    // Keep a maximal independent subset of the constraint rows.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C.transpose());
    const Index rank = qr.rank();
    std::vector<Index> keep;
    for (Index i = 0; i < rank; ++i) keep.push_back(qr.colsPermutation().indices()(i));
    std::sort(keep.begin(), keep.end());
    C_ind.resize(rank, n);
    d_ind.resize(rank);
    for (Index i = 0; i < rank; ++i) {
      C_ind.row(i) = C.row(keep[static_cast<std::size_t>(i)]);
      d_ind(i) = d(keep[static_cast<std::size_t>(i)]);
    }
  }

  const Index c = C_ind.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + c, n + c);
  K.topLeftCorner(n, n) = F.transpose() * w.asDiagonal() * F;
  K.topRightCorner(n, c) = C_ind.transpose();
  K.bottomLeftCorner(c, n) = C_ind;
  Eigen::VectorXd rhs(n + c);
  rhs.head(n) = F.transpose() * w.asDiagonal() * g;
  rhs.tail(c) = d_ind;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) throw SolverError(ErrorKind::SingularKKT, "KKT matrix is singular");
  return lu.solve(rhs).head(n);
}

}  // namespace sgopt
