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
 * @brief Variable elimination on a constrained factor graph.
 *
 * Each elimination step gathers the factors touching one variable, solves the
 * local constrained least-squares problem, keeps the resulting conditional and
 * puts the marginal back on the separator. The conditionals form a Bayes net that
 * back-substitution turns into the minimizer.
 */

#include <Eigen/Dense>

#include <chrono>
#include <map>
#include <optional>
#include <vector>

#include "sgopt/factor_graph.hpp"

namespace sgopt {

struct Ordering {
  std::vector<VariableKey> sequence;

  std::size_t size() const { return sequence.size(); }
  /// True when every graph variable appears exactly once.
  bool is_permutation_of(const FactorGraph& graph) const;
};

/// Cart -> pendulum -> control, backwards in time. Controls of step t-1 follow the
/// states of step t.
Ordering structured_ordering(int bodies, int actuators, int horizon);

/// Greedy minimum degree with clique fill-in; ties broken by VariableKey order.
Ordering min_degree_ordering(const FactorGraph& graph);

/// Greedy minimum fill (fewest new edges), same clique simulation and tie-break.
/// Slower to compute than minimum degree but keeps separators flat on long chains.
Ordering min_fill_ordering(const FactorGraph& graph);

/// frontal = R^-1 (d - sum_i S_i * separator_i)
struct GaussianConditional {
  VariableKey frontal;
  std::vector<VariableKey> separator;
  Eigen::MatrixXd R;
  std::vector<Eigen::MatrixXd> S;
  Eigen::VectorXd d;
  bool is_constrained = false;

  /// Solves for the frontal given every separator value.
  Eigen::VectorXd evaluate(const std::map<VariableKey, Eigen::VectorXd>& values) const;
};

struct BayesNet {
  std::vector<GaussianConditional> conditionals;

  std::size_t size() const { return conditionals.size(); }
};

struct StepStats {
  VariableKey frontal;
  std::size_t p1 = 0;  ///< factors touching the frontal
  std::size_t p2 = 0;  ///< separator variables
  double flops_estimate = 0.0;
};

struct EliminationStats {
  std::vector<StepStats> per_step;
  std::chrono::duration<double> wall_time{0};
  double constant_cost = 0.0;

  std::size_t max_p1() const;
  std::size_t max_p2() const;
};

struct EliminationStep {
  GaussianConditional conditional;
  /// Separator factors put back into the graph: at most one constraint factor
  /// and one finite factor.
  std::vector<Factor> marginals;
  StepStats stats;
  double constant_cost = 0.0;
};

/// Mutable copy of a graph that shrinks as variables are eliminated.
class WorkingGraph {
 public:
  explicit WorkingGraph(const FactorGraph& graph);

  bool contains(const VariableKey& key) const { return dims_.contains(key); }
  std::size_t variable_count() const { return dims_.size(); }
  std::size_t factor_count() const { return live_factors_; }
  /// Live factors touching `key`, in insertion order.
  std::vector<const Factor*> adjacent(const VariableKey& key) const;

 private:
  friend EliminationStep eliminate_variable(WorkingGraph&, const VariableKey&);

  std::map<VariableKey, Index> dims_;
  std::vector<std::optional<Factor>> factors_;
  std::map<VariableKey, std::vector<std::size_t>> adjacency_;
  std::size_t live_factors_ = 0;
};

/// Eliminates `key` from the working graph.
EliminationStep eliminate_variable(WorkingGraph& graph, const VariableKey& key);

struct EliminationOutput {
  BayesNet bayes_net;
  EliminationStats stats;
};

EliminationOutput eliminate_graph(const FactorGraph& graph, const Ordering& ordering);

/// Solves the conditionals in reverse elimination order. total_cost is left at zero.
Solution back_substitute(const BayesNet& bayes_net);
/// Same, with total_cost and the constraint audit taken against the original graph.
Solution back_substitute(const BayesNet& bayes_net, const FactorGraph& graph);

struct SolveResult {
  Solution solution;
  EliminationStats stats;
  BayesNet bayes_net;
  double max_constraint_violation = 0.0;
};

SolveResult solve(const FactorGraph& graph, const Ordering& ordering);

/// Control policy u = K * separator + offset read off a control conditional.
struct FeedbackGain {
  VariableKey control_key;
  std::vector<VariableKey> separator;
  Eigen::MatrixXd K;
  Eigen::VectorXd offset;

  Eigen::VectorXd apply(const std::map<VariableKey, Eigen::VectorXd>& values) const;
};

/// K = -R^-1 [S_1 ... S_p], offset = R^-1 d.
FeedbackGain extract_feedback_gain(const GaussianConditional& conditional);

}  // namespace sgopt
