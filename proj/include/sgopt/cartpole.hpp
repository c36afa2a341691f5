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
 * @brief Chain of N cart-poles joined by spring-dampers between neighboring carts.
 *
 * Full state layout (4N): all carts first, then all pendulums,
 *   [x_0, xd_0, ..., x_{N-1}, xd_{N-1}, th_0, thd_0, ..., th_{N-1}, thd_{N-1}].
 * Angles are measured from upright; theta = pi is hanging.
 *
 * Continuous model per body j with external force F_j = u_j + s_j,
 * s_j = sum_{i in nb(j)} k (x_i - x_j) + c (xd_i - xd_j):
 *   (m_c + m_p) xdd + m_p L (thdd cos th - thd^2 sin th) = F_j
 *   L thdd + xdd cos th = g sin th
 */

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "sgopt/elimination.hpp"
#include "sgopt/factor_graph.hpp"

namespace sgopt {

struct CartPoleParams {
  double cart_mass = 1.0;
  double pendulum_mass = 0.2;
  double length = 0.5;
  double spring = 1000.0;
  double damping = 1.0;
  double gravity = 9.81;
  double dt = 0.05;

  /// Throws InvalidConfig unless every field is strictly positive. `allow_uncoupled`
  /// admits spring = damping = 0.
  void validate(bool allow_uncoupled = true) const;
};

struct ActuatorCount {
  int m = 1;
};
struct ActuationRatio {
  double rho = 0.25;
};
using Actuation = std::variant<ActuatorCount, ActuationRatio>;

struct CostWeights {
  double qx = 10.0;
  double qtheta = 10.0;
  double qu = 0.01;
  double qxf = 3000.0;
  double qthetaf = 3000.0;
};

/// M = round(rho N) clamped to [1, N]; actuator a sits on cart floor(a N / M).
std::vector<int> actuator_layout(int bodies, const Actuation& actuation);

struct ProblemConfig {
  int bodies = 3;
  Actuation actuation = ActuatorCount{2};
  int horizon = 150;
  CostWeights weights;
  Eigen::VectorXd x0;
  /// Explicit actuated carts, overriding the even layout.
  std::optional<std::vector<int>> actuated;

  std::vector<int> actuators() const;
  int actuator_count() const { return static_cast<int>(actuators().size()); }
  int state_dim() const { return 4 * bodies; }
  /// Throws InvalidConfig on inconsistent fields.
  void validate() const;
};

inline Index cart_offset(int body) { return 2 * static_cast<Index>(body); }
inline Index pendulum_offset(int bodies, int body) { return 2 * static_cast<Index>(bodies) + 2 * body; }

/// x0 with every pendulum tilted by `degrees` and everything else at rest.
Eigen::VectorXd upright_perturbed_state(int bodies, double degrees);
/// x0 with every pendulum hanging (theta = pi).
Eigen::VectorXd hanging_state(int bodies);

/// Three carts, two actuators, 150 steps, 1.15 degree tilt.
ProblemConfig validation_config();

/// Uniform discrete blocks of the chain linearized about upright. Each block maps a
/// source node at step t to a destination node at step t+1.
struct LocalDynamics {
  Eigen::Matrix2d cart_from_cart;      ///< excluding the spring-damper self terms
  Eigen::Matrix2d cart_from_pendulum;
  Eigen::Matrix2d cart_from_neighbor_cart;
  Eigen::Matrix2d pendulum_from_pendulum;
  Eigen::Matrix2d pendulum_from_cart;  ///< excluding the spring-damper self terms
  Eigen::Matrix2d pendulum_from_neighbor_cart;
  Eigen::Vector2d cart_from_control;
  Eigen::Vector2d pendulum_from_control;
  /// Zero for this model, so absent; kept for models where a neighbor's pendulum
  /// drives the cart directly.
  std::optional<Eigen::Matrix2d> cart_from_neighbor_pendulum;

  /// Own-cart blocks for a cart with `neighbor_count` spring-damper links.
  Eigen::Matrix2d cart_from_own_cart(int neighbor_count) const {
    return cart_from_cart - neighbor_count * cart_from_neighbor_cart;
  }
  Eigen::Matrix2d pendulum_from_own_cart(int neighbor_count) const {
    return pendulum_from_cart - neighbor_count * pendulum_from_neighbor_cart;
  }
};

/// Position rows carry dt^2/2 times the acceleration sensitivities, velocity rows dt times.
LocalDynamics local_linear_dynamics(const CartPoleParams& params);

/// Closed-form coupling magnitudes: neighbor cart -> pendulum
/// [[k dt^2/(2 m_c L), c dt^2/(2 m_c L)], [k dt/(m_c L), c dt/(m_c L)]] and the
/// pendulum -> cart gravity block [[m_p g dt^2/(2 m_c), 0], [m_p g dt/m_c, 0]].
struct CouplingMagnitudes {
  Eigen::Matrix2d pendulum_from_neighbor_cart;
  Eigen::Matrix2d cart_from_pendulum;
};
CouplingMagnitudes coupling_magnitudes(const CartPoleParams& params);

/// One linear term of a transition: block * value of (kind, body) at step t.
/// For controls `body` is the actuator index.
struct BlockTerm {
  VariableKind kind = VariableKind::Cart;
  int body = 0;
  Eigen::MatrixXd block;
};

/// next = sum(terms) + offset
struct Transition {
  std::vector<BlockTerm> terms;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
};

/// Per-body transitions of one time step, indexed by body.
struct StepDynamics {
  std::vector<Transition> cart;
  std::vector<Transition> pendulum;
};

/// Places the uniform blocks on every body of the chain.
StepDynamics expand(const LocalDynamics& dynamics, const ProblemConfig& config);

/// Dense [A | B] of one step (4N x (4N + M)) and its offset.
struct DenseTransition {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd offset;
};
DenseTransition dense_transition(const StepDynamics& step, const ProblemConfig& config);

Eigen::VectorXd linear_step(const StepDynamics& step, const ProblemConfig& config, const Eigen::VectorXd& state,
                            const Eigen::VectorXd& control);

struct Trajectory {
  Eigen::MatrixXd states;    ///< T x 4N
  Eigen::MatrixXd controls;  ///< (T-1) x M

  int horizon() const { return static_cast<int>(states.rows()); }
};

/// Graph of the linear OCP: 2N*T state nodes, M*(T-1) control nodes, unary
/// cost factors, one dynamics constraint per state node and t >= 1, and hard priors
/// on every t = 0 node. Factors go in time-descending blocks, costs before
/// constraints; priors come last.
FactorGraph build_ocp_graph(const ProblemConfig& config, const LocalDynamics& dynamics);
/// Time-varying dynamics: steps[t] maps step t to t+1.
FactorGraph build_ocp_graph(const ProblemConfig& config, std::span<const StepDynamics> steps);
/// Same structure over deviations from `nominal`: costs act on nominal + delta,
/// the prior pins delta_0 = x0 - nominal_0, dynamics offsets are the defects.
FactorGraph build_deviation_graph(const ProblemConfig& config, std::span<const StepDynamics> steps,
                                  const Trajectory& nominal);

/// Column order used for dense golden comparisons: per step (time descending)
/// pendulums, carts, then the controls of the previous step.
std::vector<VariableKey> figure_column_order(const ProblemConfig& config);

Ordering structured_ordering(const ProblemConfig& config);

Trajectory to_trajectory(const ProblemConfig& config, const Solution& solution);

/// Quadratic OCP cost of a trajectory (terminal weights on the last state).
double trajectory_cost(const ProblemConfig& config, const Trajectory& trajectory);

// ---------------------------------------------------------------------------
// Nonlinear model
// ---------------------------------------------------------------------------

/// Time derivative of one body (x, xd, th, thd) under external force F.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> body_derivative(const Eigen::Matrix<Scalar, 4, 1>& z, const Scalar& force,
                                            const CartPoleParams& p) {
  using std::cos;
  using std::sin;
  const Scalar s = sin(z(2));
  const Scalar c = cos(z(2));
  const Scalar thd = z(3);
  const Scalar denom = p.cart_mass + p.pendulum_mass * s * s;
  const Scalar xdd = (force + p.pendulum_mass * s * (p.length * thd * thd - p.gravity * c)) / denom;
  const Scalar thdd =
      ((p.cart_mass + p.pendulum_mass) * p.gravity * s - c * (force + p.pendulum_mass * p.length * thd * thd * s)) /
      (p.length * denom);
  Eigen::Matrix<Scalar, 4, 1> out;
  out << z(1), xdd, thd, thdd;
  return out;
}

/// One RK4 step of a single body with the force held over the step.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> body_step(const Eigen::Matrix<Scalar, 4, 1>& z, const Scalar& force,
                                      const CartPoleParams& p) {
  const double h = p.dt;
  const auto k1 = body_derivative<Scalar>(z, force, p);
  const auto k2 = body_derivative<Scalar>((z + (h / 2) * k1).eval(), force, p);
  const auto k3 = body_derivative<Scalar>((z + (h / 2) * k2).eval(), force, p);
  const auto k4 = body_derivative<Scalar>((z + h * k3).eval(), force, p);
  return z + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Mechanical energy of one uncoupled body.
double body_energy(const Eigen::Vector4d& z, const CartPoleParams& p);

/**
 * @brief One dt step of the whole chain.
 *
 * Each body is integrated with RK4 under its actuator force plus the
 * spring-damper force evaluated at the start of the step, so body j at t+1 depends
 * only on itself and its neighboring carts at t.
 */
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nonlinear_step(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& state,
                                                        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& control,
                                                        std::span<const int> actuators, const CartPoleParams& p) {
  const int n = static_cast<int>(state.size() / 4);
  if (state.size() != 4 * n || control.size() != static_cast<Index>(actuators.size()))
    throw SolverError(ErrorKind::DimensionMismatch, "nonlinear_step: state or control size");
  std::vector<Scalar> force(static_cast<std::size_t>(n), Scalar(0));
  for (std::size_t a = 0; a < actuators.size(); ++a) force[static_cast<std::size_t>(actuators[a])] += control(static_cast<Index>(a));
  for (int j = 0; j < n; ++j) {
    for (int i : {j - 1, j + 1}) {
      if (i < 0 || i >= n) continue;
      force[static_cast<std::size_t>(j)] += p.spring * (state(cart_offset(i)) - state(cart_offset(j))) +
                                            p.damping * (state(cart_offset(i) + 1) - state(cart_offset(j) + 1));
    }
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> next(state.size());
  for (int j = 0; j < n; ++j) {
    Eigen::Matrix<Scalar, 4, 1> z;
    z << state(cart_offset(j)), state(cart_offset(j) + 1), state(pendulum_offset(n, j)),
        state(pendulum_offset(n, j) + 1);
    const auto zn = body_step<Scalar>(z, force[static_cast<std::size_t>(j)], p);
    next.segment(cart_offset(j), 2) = zn.template head<2>();
    next.segment(pendulum_offset(n, j), 2) = zn.template tail<2>();
  }
  return next;
}

/// Exact Jacobians of nonlinear_step (forward-mode AD through RK4) at every step of
/// `trajectory`, as per-body blocks. offset holds the defect f(x_t, u_t) - x_{t+1}.
std::vector<StepDynamics> linearize_about(const Trajectory& trajectory, const ProblemConfig& config,
                                          const CartPoleParams& params);

struct LinearModel {
  LocalDynamics dynamics;
};
struct NonlinearModel {};
using SimulationModel = std::variant<LinearModel, NonlinearModel>;

Trajectory simulate(const ProblemConfig& config, const CartPoleParams& params, const Eigen::VectorXd& x0,
                    const Eigen::MatrixXd& controls, const SimulationModel& model);

}  // namespace sgopt
