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

#include <gtest/gtest.h>

#include <Eigen/Core>
#include <numbers>
#include <unsupported/Eigen/AutoDiff>

#include "sgopt/cartpole.hpp"
#include "test_support.hpp"

namespace sgopt {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::Random;

ProblemConfig ocp(int n, int m, int t, double degrees = 1.15) {
  ProblemConfig c;
  c.bodies = n;
  c.actuation = ActuatorCount{m};
  c.horizon = t;
  c.x0 = upright_perturbed_state(n, degrees);
  return c;
}

VectorXd step_of(const ProblemConfig& c, const CartPoleParams& p, const VectorXd& x, const VectorXd& u) {
  const auto acts = c.actuators();
  return nonlinear_step<double>(x, u, acts, p);
}

/// Dense Jacobian of the whole-chain step by central differences.
MatrixXd central_difference_jacobian(const ProblemConfig& c, const CartPoleParams& p, const VectorXd& x,
                                     const VectorXd& u, double h = 1e-6) {
  const Index ns = x.size(), m = u.size();
  MatrixXd jac(ns, ns + m);
  for (Index i = 0; i < ns + m; ++i) {
    VectorXd xp = x, xm = x, up = u, um = u;
    if (i < ns) {
      xp(i) += h;
      xm(i) -= h;
    } else {
      up(i - ns) += h;
      um(i - ns) -= h;
    }
    jac.col(i) = (step_of(c, p, xp, up) - step_of(c, p, xm, um)) / (2 * h);
  }
  return jac;
}

// ---- actuator_layout -------------------------------------------------------

TEST(ActuatorLayout, RatioRoundsAndSpreads) {
  EXPECT_EQ(actuator_layout(4, ActuationRatio{0.25}), (std::vector<int>{0}));
  EXPECT_EQ(actuator_layout(3, ActuatorCount{1}), (std::vector<int>{0}));
  EXPECT_EQ(actuator_layout(2, ActuatorCount{2}), (std::vector<int>{0, 1}));
  EXPECT_EQ(actuator_layout(10, ActuatorCount{3}), (std::vector<int>{0, 3, 6}));
  EXPECT_EQ(actuator_layout(160, ActuationRatio{0.25}).size(), 40u);
}

TEST(ActuatorLayout, ClampsToTheChain) {
  EXPECT_EQ(actuator_layout(3, ActuationRatio{0.01}).size(), 1u);
  EXPECT_EQ(actuator_layout(3, ActuationRatio{5.0}).size(), 3u);
}

// ---- local_linear_dynamics ---------------------------------------------------

TEST(LocalLinearDynamics, NeighborCartToPendulumMagnitudes) {
  const CartPoleParams p;  // k = 1000, c = 1, m_c = 1, L = 0.5, dt = 0.05
  Eigen::Matrix2d expected;
  expected << 2.5, 0.0025, 100, 0.1;
  const auto mags = coupling_magnitudes(p);
  EXPECT_LE((mags.pendulum_from_neighbor_cart - expected).cwiseAbs().maxCoeff(), 1e-12);
  const auto d = local_linear_dynamics(p);
  EXPECT_LE((d.pendulum_from_neighbor_cart.cwiseAbs() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LocalLinearDynamics, PendulumToCartGravityMagnitudes) {
  const CartPoleParams p;  // m_p = 0.2, g = 9.81
  Eigen::Matrix2d expected;
  expected << 0.0024525, 0, 0.0981, 0;
  EXPECT_LE((coupling_magnitudes(p).cart_from_pendulum - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((local_linear_dynamics(p).cart_from_pendulum.cwiseAbs() - expected).cwiseAbs().maxCoeff(), 1e-15);
  // No direct neighbor-pendulum to cart term in this model.
  EXPECT_FALSE(local_linear_dynamics(p).cart_from_neighbor_pendulum.has_value());
}

TEST(LocalLinearDynamics, UncoupledChain) {
  CartPoleParams p;
  p.spring = 0;
  p.damping = 0;
  const auto d = local_linear_dynamics(p);
  EXPECT_TRUE(d.pendulum_from_neighbor_cart.isZero(0));
  EXPECT_TRUE(d.cart_from_neighbor_cart.isZero(0));
  EXPECT_FALSE(d.cart_from_pendulum.isZero(0));  // gravity survives
}

// ---- build_ocp_graph ---------------------------------------------------------

TEST(BuildOcpGraph, TwoCartsThreeSteps) {
  const ProblemConfig c = ocp(2, 1, 3);
  const FactorGraph g = build_ocp_graph(c, local_linear_dynamics(CartPoleParams{}));
  EXPECT_EQ(g.variable_count(), 14u);
  bool found = false;
  for (const auto& f : g.factors()) {
    if (!f.is_constraint() || f.keys.front() != pendulum(0, 2)) continue;
    found = true;
    const std::set<VariableKey> keys(f.keys.begin(), f.keys.end());
    EXPECT_EQ(keys, (std::set<VariableKey>{pendulum(0, 2), pendulum(0, 1), cart(0, 1), cart(1, 1), control(0, 1)}));
  }
  EXPECT_TRUE(found);
}

TEST(BuildOcpGraph, SingleStep) {
  const ProblemConfig c = ocp(1, 1, 1);
  const FactorGraph g = build_ocp_graph(c, local_linear_dynamics(CartPoleParams{}));
  EXPECT_EQ(g.variable_count(), 2u);
  int costs = 0, priors = 0;
  for (const auto& f : g.factors()) (f.is_constraint() ? priors : costs)++;
  EXPECT_EQ(costs, 2);
  EXPECT_EQ(priors, 2);
}

TEST(BuildOcpGraph, RejectsWrongInitialState) {
  ProblemConfig c = ocp(2, 1, 3);
  c.x0 = VectorXd::Zero(5);
  EXPECT_THROW(build_ocp_graph(c, local_linear_dynamics(CartPoleParams{})), SolverError);
}

TEST(BuildOcpGraph, ConstraintsAreLocalInTimeAndSpace) {
  for (auto [n, m, t] : {std::tuple{1, 1, 4}, std::tuple{4, 2, 6}, std::tuple{7, 3, 3}}) {
    const ProblemConfig c = ocp(n, m, t);
    const auto acts = c.actuators();
    const FactorGraph g = build_ocp_graph(c, local_linear_dynamics(CartPoleParams{}));
    for (const auto& f : g.factors()) {
      if (!f.is_constraint()) {
        EXPECT_EQ(f.keys.size(), 1u);
        continue;
      }
      const VariableKey& head = f.keys.front();
      for (const auto& k : f.keys) {
        EXPECT_TRUE(k.time == head.time || k.time == head.time - 1);
        const int body = k.kind == VariableKind::Control ? acts[static_cast<std::size_t>(k.body)] : k.body;
        EXPECT_LE(std::abs(body - head.body), 1);
      }
    }
  }
}

// ---- nonlinear model -------------------------------------------------------

TEST(NonlinearStep, UprightIsAFixedPoint) {
  const ProblemConfig c = ocp(3, 2, 2);
  const VectorXd x = VectorXd::Zero(12);
  EXPECT_TRUE(step_of(c, CartPoleParams{}, x, VectorXd::Zero(2)).isZero(0));
}

TEST(NonlinearStep, HangingIsAFixedPoint) {
  const ProblemConfig c = ocp(3, 2, 2);
  const VectorXd x = hanging_state(3);
  EXPECT_LE((step_of(c, CartPoleParams{}, x, VectorXd::Zero(2)) - x).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(NonlinearStep, RejectsWrongSizes) {
  const std::vector<int> acts{0};
  EXPECT_THROW(nonlinear_step<double>(VectorXd::Zero(7), VectorXd::Zero(1), acts, CartPoleParams{}), SolverError);
  EXPECT_THROW(nonlinear_step<double>(VectorXd::Zero(8), VectorXd::Zero(2), acts, CartPoleParams{}), SolverError);
}

TEST(NonlinearStep, EnergyIsConservedWithoutCoupling) {
  // RK4 truncation error scales with dt^4; at dt = 0.005 the drift over 1000
  // steps is a few 1e-8.
  CartPoleParams p;
  p.spring = 0;
  p.damping = 0;
  p.dt = 0.005;
  const ProblemConfig c = ocp(1, 1, 2);
  VectorXd x(4);
  x << 0.0, 0.2, 1.0, 0.0;  // cart x, xd, pendulum th, thd
  const auto energy = [&](const VectorXd& s) { return body_energy(Eigen::Vector4d(s(0), s(1), s(2), s(3)), p); };
  const double e0 = energy(x);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    x = step_of(c, p, x, VectorXd::Zero(1));
    worst = std::max(worst, std::abs(energy(x) - e0));
  }
  EXPECT_LE(worst, 1e-6 * std::abs(e0));
}

TEST(NonlinearStep, JacobianMatchesCentralDifferencesAtUpright) {
  const ProblemConfig c = ocp(3, 1, 2);
  const CartPoleParams p;
  Trajectory tr{MatrixXd::Zero(2, 12), MatrixXd::Zero(1, 1)};
  const auto steps = linearize_about(tr, c, p);
  const auto dense = dense_transition(steps[0], c);
  MatrixXd ab(12, 13);
  ab << dense.A, dense.B;
  const MatrixXd fd = central_difference_jacobian(c, p, VectorXd::Zero(12), VectorXd::Zero(1));
  EXPECT_LE((ab - fd).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
}

// ---- linearize_about -------------------------------------------------------

TEST(LinearizeAbout, ConstantUprightTrajectoryIsTimeInvariant) {
  const ProblemConfig c = ocp(3, 2, 5);
  Trajectory tr{MatrixXd::Zero(5, 12), MatrixXd::Zero(4, 2)};
  const auto steps = linearize_about(tr, c, CartPoleParams{});
  ASSERT_EQ(steps.size(), 4u);
  const auto first = dense_transition(steps[0], c);
  for (const auto& s : steps) {
    const auto d = dense_transition(s, c);
    EXPECT_EQ(d.A, first.A);
    EXPECT_EQ(d.B, first.B);
    EXPECT_TRUE(d.offset.isZero(0));
  }
}

TEST(LinearizeAbout, OneHopSparsity) {
  const ProblemConfig c = ocp(5, 2, 3);
  Random rng(41);
  Trajectory tr{rng.matrix(3, 20), rng.matrix(2, 2)};
  const auto d = dense_transition(linearize_about(tr, c, CartPoleParams{})[0], c);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) {
      if (std::abs(i - j) <= 1) continue;
      EXPECT_TRUE(d.A.block(cart_offset(j), cart_offset(i), 2, 2).isZero(0));
      EXPECT_TRUE(d.A.block(pendulum_offset(5, j), cart_offset(i), 2, 2).isZero(0));
    }
  // Pendulums only drive their own body.
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i)
      if (i != j) EXPECT_TRUE(d.A.block(cart_offset(j), pendulum_offset(5, i), 2, 2).isZero(0));
}

TEST(LinearizeAbout, BlocksAssembleToTheDenseJacobian) {
  // Oracle: forward-mode derivative of the whole-chain step in one pass.
  using Dual = Eigen::AutoDiffScalar<VectorXd>;
  const int n = 4;
  const ProblemConfig c = ocp(n, 2, 2);
  const CartPoleParams p;
  const auto acts = c.actuators();
  Random rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd x = rng.matrix(4 * n, 1) * 2.0, u = rng.vector(2) * 5.0;
    const Index width = 4 * n + 2;
    Eigen::Matrix<Dual, Eigen::Dynamic, 1> xd(4 * n), ud(2);
    for (Index i = 0; i < 4 * n; ++i) xd(i) = Dual(x(i), width, i);
    for (Index i = 0; i < 2; ++i) ud(i) = Dual(u(i), width, 4 * n + i);
    const auto next = nonlinear_step<Dual>(xd, ud, acts, p);
    MatrixXd jac(4 * n, width);
    for (Index i = 0; i < 4 * n; ++i) jac.row(i) = next(i).derivatives().transpose();

    MatrixXd states(2, 4 * n);
    states.row(0) = x.transpose();
    states.row(1) = step_of(c, p, x, u).transpose();
    Trajectory tr{states, u.transpose()};
    const auto d = dense_transition(linearize_about(tr, c, p)[0], c);
    MatrixXd ab(4 * n, width);
    ab << d.A, d.B;
    EXPECT_LE((ab - jac).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, jac.cwiseAbs().maxCoeff()));
    EXPECT_LE(d.offset.cwiseAbs().maxCoeff(), 1e-12);  // the trajectory is dynamically consistent
  }
}

TEST(LinearizeAbout, RejectsMismatchedTrajectory) {
  const ProblemConfig c = ocp(2, 1, 3);
  Trajectory tr{MatrixXd::Zero(3, 7), MatrixXd::Zero(2, 1)};
  EXPECT_THROW(linearize_about(tr, c, CartPoleParams{}), SolverError);
}

// ---- simulate --------------------------------------------------------------

TEST(Simulate, LinearFromZeroStaysZero) {
  const ProblemConfig c = ocp(3, 2, 6);
  const auto tr = simulate(c, CartPoleParams{}, VectorXd::Zero(12), MatrixXd::Zero(5, 2),
                           LinearModel{local_linear_dynamics(CartPoleParams{})});
  EXPECT_EQ(tr.horizon(), 6);
  EXPECT_TRUE(tr.states.isZero(0));
}

TEST(Simulate, NonlinearFromUprightStaysUpright) {
  const ProblemConfig c = ocp(3, 2, 6);
  const auto tr = simulate(c, CartPoleParams{}, VectorXd::Zero(12), MatrixXd::Zero(5, 2), NonlinearModel{});
  EXPECT_TRUE(tr.states.isZero(0));
}

TEST(Simulate, RejectsWrongControlShape) {
  const ProblemConfig c = ocp(3, 2, 6);
  EXPECT_THROW(simulate(c, CartPoleParams{}, VectorXd::Zero(12), MatrixXd::Zero(4, 2), NonlinearModel{}), SolverError);
}

TEST(Simulate, LinearRolloutReproducesTheGraphSolution) {
  for (auto [n, m, t] : {std::tuple{1, 1, 10}, std::tuple{3, 2, 30}, std::tuple{6, 2, 15}}) {
    const ProblemConfig c = ocp(n, m, t, 3.0);
    const CartPoleParams p;
    const auto dyn = local_linear_dynamics(p);
    const auto result = solve(build_ocp_graph(c, dyn), structured_ordering(c));
    const Trajectory opt = to_trajectory(c, result.solution);
    // The open-loop chain is unstable, so a full replay amplifies rounding in the
    // controls. Each step of the optimum must still satisfy the model on its own.
    const StepDynamics step = expand(dyn, c);
    for (int k = 0; k + 1 < t; ++k) {
      const VectorXd next = linear_step(step, c, opt.states.row(k).transpose(), opt.controls.row(k).transpose());
      EXPECT_LE((next - opt.states.row(k + 1).transpose()).cwiseAbs().maxCoeff(), 1e-8) << "step " << k;
    }
    EXPECT_NEAR(trajectory_cost(c, opt), result.solution.total_cost, 1e-10 * result.solution.total_cost);
  }
}

// ---- symmetry --------------------------------------------------------------

TEST(Symmetry, MirroredChainGivesMirroredOptimum) {
  const int n = 4;
  ProblemConfig c = ocp(n, 2, 12);
  c.actuated = std::vector<int>{0, 1};
  Random rng(43);
  c.x0 = 0.05 * rng.vector(4 * n);
  ProblemConfig mc = c;
  mc.actuated = std::vector<int>{2, 3};  // cart 0 -> 3, cart 1 -> 2
  for (int j = 0; j < n; ++j) {
    mc.x0.segment(cart_offset(j), 2) = -c.x0.segment(cart_offset(n - 1 - j), 2);
    mc.x0.segment(pendulum_offset(n, j), 2) = -c.x0.segment(pendulum_offset(n, n - 1 - j), 2);
  }
  const auto dyn = local_linear_dynamics(CartPoleParams{});
  const Trajectory a = to_trajectory(c, solve(build_ocp_graph(c, dyn), structured_ordering(c)).solution);
  const Trajectory b = to_trajectory(mc, solve(build_ocp_graph(mc, dyn), structured_ordering(mc)).solution);
  for (int t = 0; t < c.horizon; ++t)
    for (int j = 0; j < n; ++j) {
      EXPECT_LE((b.states.row(t).segment(cart_offset(j), 2) + a.states.row(t).segment(cart_offset(n - 1 - j), 2))
                    .cwiseAbs()
                    .maxCoeff(),
                1e-8);
      EXPECT_LE((b.states.row(t).segment(pendulum_offset(n, j), 2) +
                 a.states.row(t).segment(pendulum_offset(n, n - 1 - j), 2))
                    .cwiseAbs()
                    .maxCoeff(),
                1e-8);
    }
  EXPECT_LE((b.controls.col(0) + a.controls.col(1)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((b.controls.col(1) + a.controls.col(0)).cwiseAbs().maxCoeff(), 1e-8);
}

// ---- config ----------------------------------------------------------------

TEST(ProblemConfig, ValidationCatchesBadInputs) {
  ProblemConfig c = ocp(3, 1, 5);
  EXPECT_NO_THROW(c.validate());
  c.horizon = 0;
  EXPECT_THROW(c.validate(), SolverError);
  c = ocp(3, 1, 5);
  c.weights.qu = -1;
  EXPECT_THROW(c.validate(), SolverError);
  CartPoleParams p;
  p.dt = 0;
  EXPECT_THROW(p.validate(), SolverError);
}

TEST(InitialStates, PresetsHaveTheExpectedLayout) {
  const VectorXd up = upright_perturbed_state(3, 1.15);
  const VectorXd down = hanging_state(3);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(up(pendulum_offset(3, j)), 1.15 * std::numbers::pi / 180.0, 1e-15);
    EXPECT_DOUBLE_EQ(down(pendulum_offset(3, j)), std::numbers::pi);
    EXPECT_DOUBLE_EQ(up(cart_offset(j)), 0.0);
  }
}

}  // namespace
}  // namespace sgopt
