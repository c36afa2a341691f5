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

#include <Eigen/QR>

#include "sgopt/solvers.hpp"

namespace sgopt {

DenseLTIModel assemble_dense_lti(const ProblemConfig& config, const LocalDynamics& dynamics) {
  config.validate();
  const int n = config.bodies;
  const DenseTransition dense = dense_transition(expand(dynamics, config), config);
  DenseLTIModel model;
  model.A = dense.A;
  model.B = dense.B;
  model.q.resize(4 * n);
  model.q_final.resize(4 * n);
  model.q.head(2 * n).setConstant(config.weights.qx);
  model.q.tail(2 * n).setConstant(config.weights.qtheta);
  model.q_final.head(2 * n).setConstant(config.weights.qxf);
  model.q_final.tail(2 * n).setConstant(config.weights.qthetaf);
  model.r = Eigen::VectorXd::Constant(config.actuator_count(), config.weights.qu);
  return model;
}

RiccatiResult riccati_lqr(const DenseLTIModel& model, int horizon, const Eigen::VectorXd& x0) {
  const Index ns = model.A.rows();
  const Index m = model.B.cols();
  if (horizon < 1) throw SolverError(ErrorKind::DimensionMismatch, "horizon must be >= 1");
  if (model.A.cols() != ns || model.B.rows() != ns || x0.size() != ns || model.q.size() != ns ||
      model.q_final.size() != ns || model.r.size() != m)
    throw SolverError(ErrorKind::DimensionMismatch, "riccati_lqr: model shapes");

  RiccatiResult out;
  out.gains.resize(static_cast<std::size_t>(horizon - 1));
  Eigen::MatrixXd P = model.q_final.asDiagonal();
  const Eigen::MatrixXd Q = model.q.asDiagonal();
  for (int i = horizon - 2; i >= 0; --i) {
    const Eigen::MatrixXd BtP = model.B.transpose() * P;
    Eigen::MatrixXd S = BtP * model.B;
    S.diagonal() += model.r;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
    if (qr.rank() < m) throw SolverError(ErrorKind::SingularInnovation, "R + B^T P B is singular");
    Eigen::MatrixXd K = qr.solve(BtP * model.A);
    // Joseph form: a sum of PSD terms, which holds up when P grows large.
    const Eigen::MatrixXd closed = model.A - model.B * K;
    Eigen::MatrixXd next = Q;
    next.noalias() += K.transpose() * model.r.asDiagonal() * K;
    next.noalias() += closed.transpose() * (P * closed);
    P = 0.5 * (next + next.transpose());
    out.gains[static_cast<std::size_t>(i)] = std::move(K);
  }
  out.initial_cost_to_go = P;

  out.states.resize(horizon, ns);
  out.controls.resize(horizon - 1, m);
  Eigen::VectorXd x = x0;
  double cost = 0.0;
  for (int i = 0; i + 1 < horizon; ++i) {
    out.states.row(i) = x.transpose();
    const Eigen::VectorXd u = -out.gains[static_cast<std::size_t>(i)] * x;
    out.controls.row(i) = u.transpose();
    cost += x.dot(model.q.cwiseProduct(x)) + u.dot(model.r.cwiseProduct(u));
    x = model.A * x + model.B * u;
  }
  out.states.row(horizon - 1) = x.transpose();
  cost += x.dot(model.q_final.cwiseProduct(x));
  out.cost = cost;
  return out;
}

}  // namespace sgopt
