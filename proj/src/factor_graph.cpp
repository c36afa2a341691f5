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

#include "sgopt/factor_graph.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace sgopt {

std::string to_string(const VariableKey& key) {
  const char* prefix = key.kind == VariableKind::Cart ? "X" : key.kind == VariableKind::Pendulum ? "th" : "U";
  return prefix + std::to_string(key.body) + "@" + std::to_string(key.time);
}

void Factor::validate() const {
  if (keys.size() != blocks.size())
    throw SolverError(ErrorKind::DimensionMismatch, "factor: one block per key");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (blocks[i].rows() != rhs.size())
      throw SolverError(ErrorKind::DimensionMismatch, "factor: block rows differ from rhs length");
    if (blocks[i].cols() != dim_of(keys[i].kind))
      throw SolverError(ErrorKind::DimensionMismatch, "factor: block width for " + to_string(keys[i]));
    for (std::size_t j = 0; j < i; ++j)
      if (keys[i] == keys[j]) throw SolverError(ErrorKind::DimensionMismatch, "factor: repeated key " + to_string(keys[i]));
  }
}

Factor make_factor(std::vector<VariableKey> keys, std::vector<Eigen::MatrixXd> blocks, Eigen::VectorXd rhs,
                   RowWeight weight) {
  Factor f{std::move(keys), std::move(blocks), std::move(rhs), weight};
  f.validate();
  return f;
}

const Eigen::VectorXd& Solution::at(const VariableKey& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw SolverError(ErrorKind::UnknownVariable, to_string(key));
  return it->second;
}

void FactorGraph::add_variable(const VariableKey& key) {
  if (variables_.emplace(key, dim_of(key.kind)).second) {
    adjacency_.emplace(key, std::vector<std::size_t>{});
    total_dim_ += dim_of(key.kind);
  }
}

std::size_t FactorGraph::add_factor(Factor factor) {
  factor.validate();
  for (const auto& key : factor.keys)
    if (!contains(key)) throw SolverError(ErrorKind::UnknownVariable, "factor references " + to_string(key));
  const std::size_t index = factors_.size();
  for (const auto& key : factor.keys) adjacency_[key].push_back(index);
  factors_.push_back(std::move(factor));
  return index;
}

Index FactorGraph::dim(const VariableKey& key) const {
  auto it = variables_.find(key);
  if (it == variables_.end()) throw SolverError(ErrorKind::UnknownVariable, to_string(key));
  return it->second;
}

const std::vector<std::size_t>& FactorGraph::adjacent_factors(const VariableKey& key) const {
  auto it = adjacency_.find(key);
  if (it == adjacency_.end()) throw SolverError(ErrorKind::UnknownVariable, to_string(key));
  return it->second;
}

bool FactorGraph::audit_adjacency() const {
  std::map<VariableKey, std::vector<std::size_t>> rebuilt;
  for (const auto& [key, dim] : variables_) rebuilt.emplace(key, std::vector<std::size_t>{});
  for (std::size_t i = 0; i < factors_.size(); ++i)
    for (const auto& key : factors_[i].keys) {
      auto it = rebuilt.find(key);
      if (it == rebuilt.end()) return false;
      it->second.push_back(i);
    }
  return rebuilt == adjacency_;
}

std::set<VariableKey> neighbors(const FactorGraph& graph, const VariableKey& key) {
  std::set<VariableKey> out;
  for (std::size_t i : graph.adjacent_factors(key))
    for (const auto& other : graph.factor(i).keys)
      if (other != key) out.insert(other);
  return out;
}

DenseSystem assemble_dense(const FactorGraph& graph, const std::vector<VariableKey>& column_order) {
  DenseSystem out;
  if (column_order.size() != graph.variable_count())
    throw SolverError(ErrorKind::UnknownVariable, "column order is not a permutation of the graph variables");
  Index offset = 0;
  for (const auto& key : column_order) {
    if (!graph.contains(key) || !out.offsets.emplace(key, offset).second)
      throw SolverError(ErrorKind::UnknownVariable, "column order mismatch at " + to_string(key));
    offset += graph.dim(key);
  }
  Index rows = 0;
  for (const auto& f : graph.factors()) rows += f.rows();
  out.F = Eigen::MatrixXd::Zero(rows, offset);
  out.g.resize(rows);
  out.weights.reserve(static_cast<std::size_t>(rows));
  Index row = 0;
  for (const auto& f : graph.factors()) {
    for (std::size_t i = 0; i < f.keys.size(); ++i)
      out.F.block(row, out.offsets.at(f.keys[i]), f.rows(), f.blocks[i].cols()) = f.blocks[i];
    out.g.segment(row, f.rows()) = f.rhs;
    for (Index r = 0; r < f.rows(); ++r) out.weights.push_back(f.weight);
    row += f.rows();
  }
  return out;
}

ResidualReport residual_cost(const FactorGraph& graph, const Solution& solution) {
  ResidualReport report;
  for (const auto& f : graph.factors()) {
    Eigen::VectorXd r = -f.rhs;
    for (std::size_t i = 0; i < f.keys.size(); ++i) r.noalias() += f.blocks[i] * solution.at(f.keys[i]);
    if (f.is_constraint())
      report.max_constraint_violation = std::max(report.max_constraint_violation, r.cwiseAbs().maxCoeff());
    else
      report.cost += f.weight.value * r.squaredNorm();
  }
  return report;
}

std::string dump(const FactorGraph& graph) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto& [key, dim] : graph.variables()) os << "var " << to_string(key) << " dim=" << dim << '\n';
  for (std::size_t i = 0; i < graph.factor_count(); ++i) {
    const auto& f = graph.factor(i);
    os << "factor " << i << (f.is_constraint() ? " constraint" : " finite") << " rows=" << f.rows();
    for (std::size_t k = 0; k < f.keys.size(); ++k) {
      os << ' ' << to_string(f.keys[k]) << "=[";
      const auto& b = f.blocks[k];
      for (Index r = 0; r < b.rows(); ++r) {
        if (r) os << ';';
        for (Index c = 0; c < b.cols(); ++c) os << (c ? "," : "") << b(r, c);
      }
      os << ']';
    }
    os << " rhs=[";
    for (Index r = 0; r < f.rhs.size(); ++r) os << (r ? "," : "") << f.rhs(r);
    os << "]\n";
  }
  return os.str();
}

}  // namespace sgopt
