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

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgopt/solvers.hpp"

namespace sgopt {

DynamicsModel nonlinear_dynamics(const ProblemConfig& config, const CartPoleParams& params) {
  config.validate();
  params.validate();
  DynamicsModel model;
  const auto acts = config.actuators();
  model.step = [acts, params](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return nonlinear_step<double>(x, u, acts, params);
  };
  model.linearize = [config, params](const Trajectory& traj) { return linearize_about(traj, config, params); };
  return model;
}

DynamicsModel linear_dynamics(const ProblemConfig& config, const LocalDynamics& dynamics) {
  config.validate();
  const StepDynamics step = expand(dynamics, config);
  DynamicsModel model;
  model.step = [step, config](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return linear_step(step, config, x, u);
  };
  model.linearize = [step, config](const Trajectory& traj) {
    const int n = config.bodies;
    std::vector<StepDynamics> out;
    for (int t = 0; t + 1 < traj.horizon(); ++t) {
      const Eigen::VectorXd defect =
          linear_step(step, config, traj.states.row(t).transpose(), traj.controls.row(t).transpose()) -
          traj.states.row(t + 1).transpose();
      StepDynamics s = step;
      for (int j = 0; j < n; ++j) {
        s.cart[static_cast<std::size_t>(j)].offset = defect.segment<2>(cart_offset(j));
        s.pendulum[static_cast<std::size_t>(j)].offset = defect.segment<2>(pendulum_offset(n, j));
      }
      out.push_back(std::move(s));
    }
    return out;
  };
  return model;
}

namespace {

Eigen::Vector2d state_block(const Eigen::MatrixXd& states, int t, const VariableKey& key, int bodies) {
  const Index off = key.kind == VariableKind::Cart ? cart_offset(key.body) : pendulum_offset(bodies, key.body);
  return states.row(t).segment<2>(off).transpose();
}

}  // namespace

Trajectory closed_loop_rollout(const BayesNet& bayes_net, const ProblemConfig& config, const DynamicsModel& model,
                               const Trajectory* nominal) {
  const int n = config.bodies;
  const int T = config.horizon;
  const int m = config.actuator_count();
  Trajectory out;
  out.states = Eigen::MatrixXd::Zero(T, 4 * n);
  out.controls = Eigen::MatrixXd::Zero(T - 1, m);
  const Eigen::MatrixXd zero_states = Eigen::MatrixXd::Zero(T, 4 * n);
  const Eigen::MatrixXd zero_controls = Eigen::MatrixXd::Zero(T - 1, m);
  const Eigen::MatrixXd& nom_x = nominal ? nominal->states : zero_states;
  const Eigen::MatrixXd& nom_u = nominal ? nominal->controls : zero_controls;

  std::vector<bool> state_ready(static_cast<std::size_t>(T), false);
  std::vector<int> controls_done(static_cast<std::size_t>(std::max(T - 1, 0)), 0);
  std::map<VariableKey, Eigen::VectorXd> deviations;

  auto publish_states = [&](int t) {
    for (int j = 0; j < n; ++j)
      for (const VariableKey key : {cart(j, t), pendulum(j, t)})
        deviations[key] = state_block(out.states, t, key, n) - state_block(nom_x, t, key, n);
    state_ready[static_cast<std::size_t>(t)] = true;
  };

  for (auto it = bayes_net.conditionals.rbegin(); it != bayes_net.conditionals.rend(); ++it) {
    const VariableKey& key = it->frontal;
    const int t = key.time;
    if (key.kind == VariableKind::Control) {
      if (!state_ready[static_cast<std::size_t>(t)])
        throw SolverError(ErrorKind::UnknownVariable, "control conditional reached before its state");
      const Eigen::VectorXd du = extract_feedback_gain(*it).apply(deviations);
      deviations[key] = du;
      out.controls(t, key.body) = nom_u(t, key.body) + du(0);
      ++controls_done[static_cast<std::size_t>(t)];
      continue;
    }
    if (state_ready[static_cast<std::size_t>(t)]) continue;
    if (t == 0) {
      out.states.row(0) = config.x0.transpose();
    } else {
      if (!state_ready[static_cast<std::size_t>(t - 1)] || controls_done[static_cast<std::size_t>(t - 1)] != m)
        throw SolverError(ErrorKind::UnknownVariable, "ordering does not allow a closed-loop rollout");
      out.states.row(t) =
          model.step(out.states.row(t - 1).transpose(), out.controls.row(t - 1).transpose()).transpose();
    }
    publish_states(t);
  }
  return out;
}

Trajectory zero_control_rollout(const ProblemConfig& config, const CartPoleParams& params) {
  config.validate();
  return simulate(config, params, config.x0, Eigen::MatrixXd::Zero(config.horizon - 1, config.actuator_count()),
                  NonlinearModel{});
}

namespace {

Trajectory open_loop(const ProblemConfig& config, const DynamicsModel& model, const Eigen::MatrixXd& controls) {
  Trajectory out;
  out.controls = controls;
  out.states.resize(config.horizon, config.state_dim());
  out.states.row(0) = config.x0.transpose();
  for (int t = 0; t + 1 < config.horizon; ++t)
    out.states.row(t + 1) =
        model.step(out.states.row(t).transpose(), controls.row(t).transpose()).transpose();
  return out;
}

double safe_cost(const ProblemConfig& config, const Trajectory& traj) {
  const double c = trajectory_cost(config, traj);
  return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
}

}  // namespace

LmResult iterative_sgopt(const ProblemConfig& config, const DynamicsModel& model, const Trajectory& initial_guess,
                         const LmOptions& options) {
  config.validate();
  if (config.horizon < 2) throw SolverError(ErrorKind::InvalidConfig, "swing-up needs a horizon of at least 2");
  if (!(options.lambda_initial > 0) || !(options.lambda_factor > 1) || !(options.lambda_max >= options.lambda_initial) ||
      !(options.relative_tolerance >= 0) || options.max_iterations < 1)
    throw SolverError(ErrorKind::InvalidConfig, "invalid Levenberg-Marquardt options");
  if (initial_guess.controls.rows() != config.horizon - 1 || initial_guess.controls.cols() != config.actuator_count())
    throw SolverError(ErrorKind::DimensionMismatch, "initial guess control shape");

  // Start from a dynamically consistent trajectory.
  LmResult result;
  Trajectory current = open_loop(config, model, initial_guess.controls);
  double cost = safe_cost(config, current);
  if (!std::isfinite(cost)) throw SolverError(ErrorKind::InvalidConfig, "initial guess diverges");
  result.cost_history.push_back(cost);

  const Ordering ordering = structured_ordering(config);
  double lambda = options.lambda_initial;
  result.status = LmStatus::IterationLimit;
  std::vector<StepDynamics> steps = model.linearize(current);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    FactorGraph graph = build_deviation_graph(config, steps, current);
    const double s = std::sqrt(lambda);
    std::vector<VariableKey> keys;
    for (const auto& [key, info] : graph.variables()) keys.push_back(key);
    for (const auto& key : keys) {
      const Index d = graph.dim(key);
      graph.add_factor(make_factor({key}, {s * Eigen::MatrixXd::Identity(d, d)}, Eigen::VectorXd::Zero(d)));
    }

    Trajectory candidate;
    double candidate_cost = std::numeric_limits<double>::infinity();
    try {
      const EliminationOutput elim = eliminate_graph(graph, ordering);
      if (options.rollout == RolloutMode::ClosedLoop) {
        candidate = closed_loop_rollout(elim.bayes_net, config, model, &current);
      } else {
        const Trajectory delta = to_trajectory(config, back_substitute(elim.bayes_net));
        candidate = open_loop(config, model, current.controls + delta.controls);
      }
      candidate_cost = safe_cost(config, candidate);
    } catch (const SolverError& e) {
      if (e.kind() != ErrorKind::RankDeficient && e.kind() != ErrorKind::SingularDiagonal) throw;
    }

    const bool accepted = candidate_cost < cost;
    result.log.push_back({iter, lambda, accepted ? candidate_cost : cost, accepted});
    if (accepted) {
      const double relative = (cost - candidate_cost) / std::max(cost, std::numeric_limits<double>::min());
      current = std::move(candidate);
      cost = candidate_cost;
      result.cost_history.push_back(cost);
      ++result.accepted_steps;
      lambda = std::max(lambda / options.lambda_factor, std::numeric_limits<double>::min());
      if (relative < options.relative_tolerance) {
        result.status = LmStatus::Converged;
        break;
      }
      steps = model.linearize(current);
      continue;
    }
    // A step that leaves the cost unchanged means the linearization point is already optimal.
    if (std::isfinite(candidate_cost) && std::abs(candidate_cost - cost) <= options.relative_tolerance * cost) {
      result.status = LmStatus::Converged;
      break;
    }
    lambda *= options.lambda_factor;
    if (lambda > options.lambda_max) {
      if (result.accepted_steps == 0)
        throw SolverError(ErrorKind::NoProgress, "damping reached its cap without an accepted step");
      result.status = LmStatus::LambdaCap;
      break;
    }
  }
  result.trajectory = std::move(current);
  return result;
}

LmResult iterative_sgopt(const ProblemConfig& config, const CartPoleParams& params, const Trajectory& initial_guess,
                         const LmOptions& options) {
  return iterative_sgopt(config, nonlinear_dynamics(config, params), initial_guess, options);
}

}  // namespace sgopt
