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

#include "sgopt/cartpole.hpp"
#include "sgopt/factor_graph.hpp"
#include "test_support.hpp"

namespace sgopt {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::Random;

const VariableKey x = control(0, 0);
const VariableKey y = control(1, 0);
const VariableKey z = control(2, 0);
const VariableKey w = control(3, 0);

Factor scalar_factor(std::vector<VariableKey> keys, double rhs = 0.0, RowWeight weight = RowWeight::finite(1.0)) {
  std::vector<MatrixXd> blocks(keys.size(), MatrixXd::Ones(1, 1));
  return make_factor(std::move(keys), std::move(blocks), VectorXd::Constant(1, rhs), weight);
}

FactorGraph path_graph() {
  FactorGraph g;
  for (const auto& k : {x, y, z}) g.add_variable(k);
  g.add_factor(scalar_factor({x, y}));
  g.add_factor(scalar_factor({y, z}));
  return g;
}

Solution single(const VariableKey& key, double value) {
  Solution s;
  s.values[key] = VectorXd::Constant(1, value);
  return s;
}

ProblemConfig small_config(int n, int m, int t) {
  ProblemConfig c;
  c.bodies = n;
  c.actuation = ActuatorCount{m};
  c.horizon = t;
  c.x0 = upright_perturbed_state(n, 2.0);
  return c;
}

// ---- keys and factors ------------------------------------------------------

TEST(VariableKey, OrdersByTimeDescendingThenKindThenBody) {
  EXPECT_LT(cart(0, 2), cart(0, 1));
  EXPECT_LT(cart(5, 1), pendulum(0, 1));
  EXPECT_LT(pendulum(3, 1), control(0, 1));
  EXPECT_LT(cart(0, 1), cart(1, 1));
  EXPECT_EQ(to_string(pendulum(1, 0)), "th1@0");
}

TEST(Factor, RejectsMismatchedShapes) {
  EXPECT_THROW(make_factor({x}, {MatrixXd::Ones(2, 1)}, VectorXd::Zero(1)), SolverError);
  EXPECT_THROW(make_factor({cart(0, 0)}, {MatrixXd::Ones(1, 1)}, VectorXd::Zero(1)), SolverError);
  EXPECT_THROW(make_factor({x, x}, {MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1)}, VectorXd::Zero(1)), SolverError);
}

TEST(FactorGraph, UnknownKeysAreRejected) {
  FactorGraph g;
  g.add_variable(x);
  try {
    g.add_factor(scalar_factor({x, y}));
    FAIL() << "expected UnknownVariable";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownVariable);
  }
  EXPECT_THROW(neighbors(g, y), SolverError);
  EXPECT_THROW(g.dim(y), SolverError);
}

// ---- neighbors -------------------------------------------------------------

TEST(Neighbors, MiddleOfPath) { EXPECT_EQ(neighbors(path_graph(), y), (std::set<VariableKey>{x, z})); }

TEST(Neighbors, EndOfPath) { EXPECT_EQ(neighbors(path_graph(), x), (std::set<VariableKey>{y})); }

TEST(Neighbors, IsolatedVariableWithUnaryFactor) {
  FactorGraph g = path_graph();
  g.add_variable(w);
  g.add_factor(scalar_factor({w}));
  EXPECT_TRUE(neighbors(g, w).empty());
}

// ---- adjacency audit -------------------------------------------------------

TEST(FactorGraph, AdjacencySurvivesRandomEdits) {
  Random rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    FactorGraph g;
    std::vector<VariableKey> keys;
    for (int step = 0; step < 60; ++step) {
      if (keys.empty() || rng.chance(0.3)) {
        const VariableKey k{static_cast<VariableKind>(rng.integer(0, 2)), rng.integer(0, 5), rng.integer(0, 3)};
        g.add_variable(k);
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
      } else {
        std::vector<VariableKey> fk;
        for (int i = 0; i < rng.integer(1, 3); ++i) {
          const auto& k = keys[static_cast<std::size_t>(rng.integer(0, static_cast<int>(keys.size()) - 1))];
          if (std::find(fk.begin(), fk.end(), k) == fk.end()) fk.push_back(k);
        }
        std::vector<MatrixXd> blocks;
        for (const auto& k : fk) blocks.push_back(rng.matrix(2, g.dim(k)));
        g.add_factor(make_factor(fk, blocks, rng.vector(2)));
      }
      ASSERT_TRUE(g.audit_adjacency());
    }
    EXPECT_EQ(g.variable_count(), keys.size());
  }
}

// ---- assemble_dense --------------------------------------------------------

TEST(AssembleDense, SingleUnaryFactor) {
  FactorGraph g;
  g.add_variable(x);
  g.add_factor(make_factor({x}, {MatrixXd::Constant(1, 1, 2.0)}, VectorXd::Zero(1)));
  const auto d = assemble_dense(g, {x});
  EXPECT_EQ(d.F, MatrixXd::Constant(1, 1, 2.0));
  EXPECT_EQ(d.g, VectorXd::Zero(1));
  ASSERT_EQ(d.weights.size(), 1u);
  EXPECT_EQ(d.weights[0], RowWeight::finite(1.0));
}

TEST(AssembleDense, ColumnOrderMustBeAPermutation) {
  const FactorGraph g = path_graph();
  EXPECT_THROW(assemble_dense(g, {x, y}), SolverError);
  EXPECT_THROW(assemble_dense(g, {x, y, y}), SolverError);
  EXPECT_THROW(assemble_dense(g, {x, y, w}), SolverError);
}

TEST(AssembleDense, CartPoleFigureLayout) {
  const ProblemConfig config = small_config(2, 1, 3);
  const FactorGraph g = build_ocp_graph(config, local_linear_dynamics(CartPoleParams{}));
  const auto order = figure_column_order(config);
  ASSERT_EQ(order.size(), 14u);
  const std::vector<VariableKey> head{pendulum(0, 2), pendulum(1, 2), cart(0, 2), cart(1, 2), control(0, 1)};
  EXPECT_TRUE(std::equal(head.begin(), head.end(), order.begin()));
  const auto d = assemble_dense(g, order);
  EXPECT_EQ(d.F.cols(), 4 * 2 * 3 + 1 * 2);
  Index rows = 0;
  for (const auto& f : g.factors()) rows += f.rows();
  EXPECT_EQ(d.F.rows(), rows);
  EXPECT_EQ(d.weights.size(), static_cast<std::size_t>(rows));
}

TEST(AssembleDense, DimensionCountFormula) {
  for (int n : {1, 2, 5})
    for (int m = 1; m <= n; m += 2)
      for (int t : {1, 2, 7}) {
        const ProblemConfig config = small_config(n, m, t);
        const FactorGraph g = build_ocp_graph(config, local_linear_dynamics(CartPoleParams{}));
        const auto order = figure_column_order(config);
        EXPECT_EQ(assemble_dense(g, order).F.cols(), 4 * n * t + m * (t - 1));
        EXPECT_EQ(g.total_dim(), 4 * n * t + m * (t - 1));
      }
}

TEST(AssembleDense, RoundTripThroughOracleMatchesGraphSolve) {
  Random rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rg = testing::random_constrained_graph(rng);
    const auto oracle = testing::oracle_solution(rg.graph);
    const auto result = solve(rg.graph, min_degree_ordering(rg.graph));
    EXPECT_LE(testing::max_abs_difference(oracle, result.solution.values), 1e-8) << dump(rg.graph);
  }
}

// ---- residual_cost ---------------------------------------------------------

TEST(ResidualCost, ExactFitCostsNothing) {
  FactorGraph g;
  g.add_variable(x);
  g.add_factor(scalar_factor({x}, 2.0));
  const auto r = residual_cost(g, single(x, 2.0));
  EXPECT_DOUBLE_EQ(r.cost, 0.0);
  EXPECT_DOUBLE_EQ(r.max_constraint_violation, 0.0);
}

TEST(ResidualCost, UnitMiss) {
  FactorGraph g;
  g.add_variable(x);
  g.add_factor(scalar_factor({x}, 2.0));
  EXPECT_DOUBLE_EQ(residual_cost(g, single(x, 3.0)).cost, 1.0);
}

TEST(ResidualCost, ConstraintsReportViolationNotCost) {
  FactorGraph g;
  g.add_variable(x);
  g.add_factor(scalar_factor({x}, 2.0, RowWeight::constraint()));
  const auto r = residual_cost(g, single(x, 2.5));
  EXPECT_DOUBLE_EQ(r.cost, 0.0);
  EXPECT_DOUBLE_EQ(r.max_constraint_violation, 0.5);
}

TEST(ResidualCost, MissingValueIsUnknownVariable) {
  const FactorGraph g = path_graph();
  EXPECT_THROW(residual_cost(g, single(x, 1.0)), SolverError);
}

TEST(ResidualCost, InvariantUnderColumnReordering) {
  Random rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rg = testing::random_constrained_graph(rng);
    std::vector<VariableKey> order = rg.keys;
    VectorXd point(rg.graph.total_dim());
    std::vector<double> costs;
    for (int perm = 0; perm < 3; ++perm) {
      std::shuffle(order.begin(), order.end(), rng.engine());
      const auto d = assemble_dense(rg.graph, order);
      for (const auto& k : order) point.segment(d.offsets.at(k), rg.graph.dim(k)) = rg.feasible_point.at(k);
      const VectorXd r = d.F * point - d.g;
      double cost = 0.0;
      for (Index i = 0; i < r.size(); ++i)
        if (!d.weights[static_cast<std::size_t>(i)].is_constraint())
          cost += d.weights[static_cast<std::size_t>(i)].value * r(i) * r(i);
      costs.push_back(cost);
    }
    Solution s;
    s.values = rg.feasible_point;
    const auto report = residual_cost(rg.graph, s);
    for (double c : costs) EXPECT_NEAR(c, report.cost, 1e-12 * std::max(1.0, c));
    EXPECT_LE(report.max_constraint_violation, 1e-12);
  }
}

// ---- dump ------------------------------------------------------------------

TEST(Dump, OneLinePerVariableAndFactor) {
  FactorGraph g = path_graph();
  g.add_factor(scalar_factor({x}, 3.0, RowWeight::constraint()));
  const std::string text = dump(g);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3 + 3);
  EXPECT_NE(text.find("var U0@0 dim=1\n"), std::string::npos);
  EXPECT_NE(text.find("factor 2 constraint rows=1 U0@0=[1] rhs=[3]\n"), std::string::npos);
  EXPECT_NE(text.find("factor 0 finite rows=1 U0@0=[1] U1@0=[1] rhs=[0]\n"), std::string::npos);
}

}  // namespace
}  // namespace sgopt
