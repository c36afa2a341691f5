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

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sgopt/linalg.hpp"

namespace sgopt {

enum class VariableKind { Cart = 0, Pendulum = 1, Control = 2 };

/// One graph node: a cart state, a pendulum state or a control at one time step.
///
/// Ordered by time (descending), then kind, then body index.
struct VariableKey {
  VariableKind kind = VariableKind::Cart;
  int body = 0;
  int time = 0;

  friend bool operator==(const VariableKey&, const VariableKey&) = default;
  friend std::strong_ordering operator<=>(const VariableKey& a, const VariableKey& b) {
    if (auto c = b.time <=> a.time; c != 0) return c;
    if (auto c = static_cast<int>(a.kind) <=> static_cast<int>(b.kind); c != 0) return c;
    return a.body <=> b.body;
  }
};

inline VariableKey cart(int body, int time) { return {VariableKind::Cart, body, time}; }
inline VariableKey pendulum(int body, int time) { return {VariableKind::Pendulum, body, time}; }
inline VariableKey control(int actuator, int time) { return {VariableKind::Control, actuator, time}; }

/// Cart and pendulum nodes are 2-vectors (position/velocity, angle/rate); controls are scalars.
constexpr Index dim_of(VariableKind kind) { return kind == VariableKind::Control ? 1 : 2; }

/// Short label, e.g. "X0@2", "th1@0", "U0@1".
std::string to_string(const VariableKey& key);

struct VariableInfo {
  VariableKey key;
  Index dim = 0;
};

/// Affine residual blocks * vars - rhs, either a finite cost term (square-root
/// weights already folded into the blocks) or a hard constraint.
struct Factor {
  std::vector<VariableKey> keys;
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::VectorXd rhs;
  RowWeight weight = RowWeight::finite(1.0);

  Index rows() const { return rhs.size(); }
  bool is_constraint() const { return weight.is_constraint(); }

  /// Throws DimensionMismatch on inconsistent shapes or repeated keys.
  void validate() const;
};

Factor make_factor(std::vector<VariableKey> keys, std::vector<Eigen::MatrixXd> blocks, Eigen::VectorXd rhs,
                   RowWeight weight = RowWeight::finite(1.0));

struct Solution {
  std::map<VariableKey, Eigen::VectorXd> values;
  double total_cost = 0.0;

  const Eigen::VectorXd& at(const VariableKey& key) const;
};

/// Append-only factor graph with an incrementally maintained adjacency map.
class FactorGraph {
 public:
  /// Adds a node with its kind's dimension. Re-adding an existing key is a no-op.
  void add_variable(const VariableKey& key);
  /// Returns the index of the new factor. Every key must already exist.
  std::size_t add_factor(Factor factor);

  bool contains(const VariableKey& key) const { return variables_.contains(key); }
  Index dim(const VariableKey& key) const;
  std::size_t variable_count() const { return variables_.size(); }
  std::size_t factor_count() const { return factors_.size(); }
  /// Sum of variable dimensions.
  Index total_dim() const { return total_dim_; }

  const std::map<VariableKey, Index>& variables() const { return variables_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const Factor& factor(std::size_t i) const { return factors_.at(i); }
  /// Indices of the factors touching `key`, in insertion order.
  const std::vector<std::size_t>& adjacent_factors(const VariableKey& key) const;

  /// Rebuilds adjacency from the factor list and compares with the maintained map.
  bool audit_adjacency() const;

 private:
  std::map<VariableKey, Index> variables_;
  std::vector<Factor> factors_;
  std::map<VariableKey, std::vector<std::size_t>> adjacency_;
  Index total_dim_ = 0;
};

/// Variables sharing at least one factor with `key`, excluding `key`.
std::set<VariableKey> neighbors(const FactorGraph& graph, const VariableKey& key);

struct DenseSystem {
  Eigen::MatrixXd F;
  Eigen::VectorXd g;
  std::vector<RowWeight> weights;
  /// Column offset of each variable in F.
  std::map<VariableKey, Index> offsets;
};

/// Stacks every factor (in insertion order) into [F | g] with one weight per row.
DenseSystem assemble_dense(const FactorGraph& graph, const std::vector<VariableKey>& column_order);

struct ResidualReport {
  double cost = 0.0;
  double max_constraint_violation = 0.0;
};

/// Finite-factor squared residual and worst constraint violation (infinity norm).
ResidualReport residual_cost(const FactorGraph& graph, const Solution& solution);

/// Plain-text debug dump: one line per variable, one line per factor.
std::string dump(const FactorGraph& graph);

}  // namespace sgopt
