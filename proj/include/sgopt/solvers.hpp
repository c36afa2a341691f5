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

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

#include "sgopt/cartpole.hpp"
#include "sgopt/elimination.hpp"

namespace sgopt {

/// Dense discrete LTI model of the whole chain. Weights are diagonals.
struct DenseLTIModel {
  Eigen::MatrixXd A;  ///< 4N x 4N
  Eigen::MatrixXd B;  ///< 4N x M
  Eigen::VectorXd q;
  Eigen::VectorXd q_final;
  Eigen::VectorXd r;
};

DenseLTIModel assemble_dense_lti(const ProblemConfig& config, const LocalDynamics& dynamics);

struct RiccatiResult {
  Eigen::MatrixXd states;         ///< T x 4N
  Eigen::MatrixXd controls;       ///< (T-1) x M
  std::vector<Eigen::MatrixXd> gains;  ///< u_t = -gains[t] x_t
  Eigen::MatrixXd initial_cost_to_go;  ///< P_0
  double cost = 0.0;              ///< rollout cost
};

/// Finite-horizon Riccati recursion with P_{T-1} = Q_f and forward rollout.
RiccatiResult riccati_lqr(const DenseLTIModel& model, int horizon, const Eigen::VectorXd& x0);

/**
 * @brief Dense reference solver for min ||F y - g||_W^2 subject to the constraint rows.
 *
 * Redundant constraint rows are dropped after a feasibility check; the remaining
 * system is solved through the full KKT matrix. Meant for tests and small systems.
 */
Eigen::VectorXd kkt_solve_oracle(const Eigen::MatrixXd& F, const Eigen::VectorXd& g,
                                 std::span<const RowWeight> weights);

/// Dynamics seen by the outer loop: a step map and its linearization.
struct DynamicsModel {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> step;
  std::function<std::vector<StepDynamics>(const Trajectory&)> linearize;
};

DynamicsModel nonlinear_dynamics(const ProblemConfig& config, const CartPoleParams& params);
DynamicsModel linear_dynamics(const ProblemConfig& config, const LocalDynamics& dynamics);

/// Rolls the model forward, taking every control from its conditional in `bayes_net`
/// (through the extracted feedback gain) given the states actually reached. With a
/// nominal trajectory the net is read as deviations from it.
///
/// Needs an ordering that eliminates the states of step t+1 before the controls of
/// step t, and those before the states of step t (as structured_ordering does).
Trajectory closed_loop_rollout(const BayesNet& bayes_net, const ProblemConfig& config, const DynamicsModel& model,
                               const Trajectory* nominal = nullptr);

enum class RolloutMode { ClosedLoop, OpenLoop };

struct LmOptions {
  double lambda_initial = 1e-3;
  double lambda_factor = 10.0;
  double lambda_max = 1e8;
  double relative_tolerance = 1e-6;
  int max_iterations = 200;
  RolloutMode rollout = RolloutMode::ClosedLoop;
};

struct LmIteration {
  int iteration = 0;
  double lambda = 0.0;
  double cost = 0.0;
  bool accepted = false;
};

enum class LmStatus { Converged, LambdaCap, IterationLimit };

struct LmResult {
  Trajectory trajectory;
  int iterations = 0;
  int accepted_steps = 0;
  LmStatus status = LmStatus::IterationLimit;
  std::vector<double> cost_history;  ///< initial cost, then every accepted cost
  std::vector<LmIteration> log;
};

/// Zero controls rolled out from config.x0 through the nonlinear model.
Trajectory zero_control_rollout(const ProblemConfig& config, const CartPoleParams& params);

/**
 * @brief Levenberg-Marquardt outer loop around the linear graph solver.
 *
 * Each iteration linearizes about the current trajectory, builds the deviation
 * graph, adds sqrt(lambda) * delta = 0 on every variable, solves with the
 * structured ordering and rolls the model out with the updated controls. A
 * candidate is accepted iff the cost decreases (lambda /= factor), otherwise lambda
 * *= factor. Stops on a relative cost change below tolerance, lambda above the cap
 * or the iteration limit. Throws NoProgress if the cap is hit before any step was
 * accepted.
 */
LmResult iterative_sgopt(const ProblemConfig& config, const DynamicsModel& model, const Trajectory& initial_guess,
                         const LmOptions& options = {});
LmResult iterative_sgopt(const ProblemConfig& config, const CartPoleParams& params, const Trajectory& initial_guess,
                         const LmOptions& options = {});

}  // namespace sgopt
