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

#include "sgopt/elimination.hpp"

#include <algorithm>
#include <set>

namespace sgopt {

std::size_t EliminationStats::max_p1() const {
  std::size_t m = 0;
  for (const auto& s : per_step) m = std::max(m, s.p1);
  return m;
}

std::size_t EliminationStats::max_p2() const {
  std::size_t m = 0;
  for (const auto& s : per_step) m = std::max(m, s.p2);
  return m;
}

Eigen::VectorXd GaussianConditional::evaluate(const std::map<VariableKey, Eigen::VectorXd>& values) const {
  Eigen::VectorXd rhs = d;
  for (std::size_t i = 0; i < separator.size(); ++i) {
    auto it = values.find(separator[i]);
    if (it == values.end()) throw SolverError(ErrorKind::UnknownVariable, "separator value " + to_string(separator[i]));
    rhs.noalias() -= S[i] * it->second;
  }
  return solve_triangular<double>(R, rhs);
}

WorkingGraph::WorkingGraph(const FactorGraph& graph) {
  for (const auto& [key, dim] : graph.variables()) {
    dims_.emplace(key, dim);
    adjacency_.emplace(key, std::vector<std::size_t>{});
  }
  factors_.reserve(graph.factor_count());
  for (const auto& f : graph.factors()) {
    const std::size_t index = factors_.size();
    for (const auto& key : f.keys) adjacency_[key].push_back(index);
    factors_.emplace_back(f);
  }
  live_factors_ = factors_.size();
}

std::vector<const Factor*> WorkingGraph::adjacent(const VariableKey& key) const {
  auto it = adjacency_.find(key);
  if (it == adjacency_.end()) throw SolverError(ErrorKind::UnknownVariable, to_string(key));
  std::vector<const Factor*> out;
  out.reserve(it->second.size());
  for (std::size_t i : it->second) out.push_back(&*factors_[i]);
  return out;
}

EliminationStep eliminate_variable(WorkingGraph& graph, const VariableKey& key) {
  auto dim_it = graph.dims_.find(key);
  if (dim_it == graph.dims_.end()) throw SolverError(ErrorKind::UnknownVariable, to_string(key));
  const Index f = dim_it->second;
  const std::vector<std::size_t> adjacent = graph.adjacency_.at(key);
  if (adjacent.empty())
    throw SolverError(ErrorKind::UnconstrainedUnboundedVariable, to_string(key) + " has no adjacent factor");

  std::set<VariableKey> separator_set;
  Index rows = 0;
  for (std::size_t i : adjacent) {
    const Factor& fac = *graph.factors_[i];
    rows += fac.rows();
    for (const auto& k : fac.keys)
      if (k != key) separator_set.insert(k);
  }
  const std::vector<VariableKey> separator(separator_set.begin(), separator_set.end());
  std::map<VariableKey, Index> column;
  column.emplace(key, 0);
  Index cols = f;
  for (const auto& k : separator) {
    column.emplace(k, cols);
    cols += graph.dims_.at(k);
  }

  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(rows, cols + 1);
  std::vector<RowWeight> weights;
  weights.reserve(static_cast<std::size_t>(rows));
  Index row = 0;
  for (std::size_t i : adjacent) {
    const Factor& fac = *graph.factors_[i];
    for (std::size_t b = 0; b < fac.keys.size(); ++b)
      system.block(row, column.at(fac.keys[b]), fac.rows(), fac.blocks[b].cols()) = fac.blocks[b];
    system.block(row, cols, fac.rows(), 1) = fac.rhs;
    for (Index r = 0; r < fac.rows(); ++r) weights.push_back(fac.weight);
    row += fac.rows();
  }

  const EliminationResult<double> local = constrained_eliminate<double>(system, weights, f);

  EliminationStep step;
  auto& cond = step.conditional;
  cond.frontal = key;
  cond.separator = separator;
  cond.R = local.conditional_rows.leftCols(f);
  for (const auto& k : separator) cond.S.push_back(local.conditional_rows.block(0, column.at(k), f, graph.dims_.at(k)));
  cond.d = local.conditional_rows.col(cols);
  cond.is_constrained = local.is_constrained();
  step.constant_cost = local.constant_cost;

  for (const bool constrained : {true, false}) {
    std::vector<Index> picked;
    for (std::size_t r = 0; r < local.marginal_weights.size(); ++r)
      if (local.marginal_weights[r].is_constraint() == constrained) picked.push_back(static_cast<Index>(r));
    if (picked.empty()) continue;
    Factor marginal;
    marginal.weight = constrained ? RowWeight::constraint() : RowWeight::finite(1.0);
    marginal.rhs.resize(static_cast<Index>(picked.size()));
    for (std::size_t r = 0; r < picked.size(); ++r) marginal.rhs(static_cast<Index>(r)) = local.marginal_rows(picked[r], cols - f);
    for (const auto& k : separator) {
      const Index c0 = column.at(k) - f;
      Eigen::MatrixXd block(static_cast<Index>(picked.size()), graph.dims_.at(k));
      for (std::size_t r = 0; r < picked.size(); ++r)
        block.row(static_cast<Index>(r)) = local.marginal_rows.block(picked[r], c0, 1, block.cols());
      if ((block.array() == 0.0).all()) continue;
      marginal.keys.push_back(k);
      marginal.blocks.push_back(std::move(block));
    }
    if (!marginal.keys.empty()) step.marginals.push_back(std::move(marginal));
  }

  // Remove the consumed factors and the variable, then add the marginals.
  for (std::size_t i : adjacent) {
    for (const auto& k : graph.factors_[i]->keys) {
      auto& list = graph.adjacency_.at(k);
      list.erase(std::remove(list.begin(), list.end(), i), list.end());
    }
    graph.factors_[i].reset();
    --graph.live_factors_;
  }
  graph.adjacency_.erase(key);
  graph.dims_.erase(dim_it);
  for (const auto& m : step.marginals) {
    const std::size_t index = graph.factors_.size();
    for (const auto& k : m.keys) graph.adjacency_.at(k).push_back(index);
    graph.factors_.emplace_back(m);
    ++graph.live_factors_;
  }

  const double n = static_cast<double>(f);
  step.stats.frontal = key;
  step.stats.p1 = adjacent.size();
  step.stats.p2 = separator.size();
  step.stats.flops_estimate = static_cast<double>(step.stats.p1) * n * std::pow(static_cast<double>(step.stats.p2) * n, 2);
  return step;
}

EliminationOutput eliminate_graph(const FactorGraph& graph, const Ordering& ordering) {
  if (!ordering.is_permutation_of(graph))
    throw SolverError(ErrorKind::UnknownVariable, "ordering is not a permutation of the graph variables");
  const auto start = std::chrono::steady_clock::now();
  EliminationOutput out;
  out.bayes_net.conditionals.reserve(ordering.size());
  out.stats.per_step.reserve(ordering.size());
  WorkingGraph working(graph);
  for (const auto& key : ordering.sequence) {
    EliminationStep step = eliminate_variable(working, key);
    out.bayes_net.conditionals.push_back(std::move(step.conditional));
    out.stats.per_step.push_back(step.stats);
    out.stats.constant_cost += step.constant_cost;
  }
  out.stats.wall_time = std::chrono::steady_clock::now() - start;
  return out;
}

Solution back_substitute(const BayesNet& bayes_net) {
  Solution solution;
  for (auto it = bayes_net.conditionals.rbegin(); it != bayes_net.conditionals.rend(); ++it)
    solution.values[it->frontal] = it->evaluate(solution.values);
  return solution;
}

Solution back_substitute(const BayesNet& bayes_net, const FactorGraph& graph) {
  Solution solution = back_substitute(bayes_net);
  solution.total_cost = residual_cost(graph, solution).cost;
  return solution;
}

SolveResult solve(const FactorGraph& graph, const Ordering& ordering) {
  SolveResult out;
  auto elim = eliminate_graph(graph, ordering);
  const auto start = std::chrono::steady_clock::now();
  out.solution = back_substitute(elim.bayes_net);
  elim.stats.wall_time += std::chrono::steady_clock::now() - start;
  const ResidualReport report = residual_cost(graph, out.solution);
  out.solution.total_cost = report.cost;
  out.max_constraint_violation = report.max_constraint_violation;
  out.bayes_net = std::move(elim.bayes_net);
  out.stats = std::move(elim.stats);
  return out;
}

Eigen::VectorXd FeedbackGain::apply(const std::map<VariableKey, Eigen::VectorXd>& values) const {
  Eigen::VectorXd u = offset;
  Index col = 0;
  for (const auto& k : separator) {
    auto it = values.find(k);
    if (it == values.end()) throw SolverError(ErrorKind::UnknownVariable, "policy input " + to_string(k));
    u.noalias() += K.middleCols(col, it->second.size()) * it->second;
    col += it->second.size();
  }
  return u;
}

FeedbackGain extract_feedback_gain(const GaussianConditional& conditional) {
  if (conditional.frontal.kind != VariableKind::Control)
    throw SolverError(ErrorKind::DimensionMismatch, "feedback gains need a control frontal");
  FeedbackGain gain;
  gain.control_key = conditional.frontal;
  gain.separator = conditional.separator;
  const Index m = conditional.R.rows();
  Index width = 0;
  for (const auto& s : conditional.S) width += s.cols();
  gain.K.resize(m, width);
  Index col = 0;
  for (const auto& s : conditional.S) {
    for (Index c = 0; c < s.cols(); ++c)
      gain.K.col(col + c) = -solve_triangular<double>(conditional.R, s.col(c));
    col += s.cols();
  }
  gain.offset = solve_triangular<double>(conditional.R, conditional.d);
  return gain;
}

}  // namespace sgopt
