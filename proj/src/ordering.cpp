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

#include <iterator>
#include <map>
#include <set>
#include <utility>

#include "sgopt/elimination.hpp"

namespace sgopt {

bool Ordering::is_permutation_of(const FactorGraph& graph) const {
  if (sequence.size() != graph.variable_count()) return false;
  std::set<VariableKey> seen;
  for (const auto& key : sequence)
    if (!graph.contains(key) || !seen.insert(key).second) return false;
  return true;
}

Ordering structured_ordering(int bodies, int actuators, int horizon) {
  Ordering out;
  for (int t = horizon - 1; t >= 0; --t) {
    for (int j = 0; j < bodies; ++j) out.sequence.push_back(cart(j, t));
    for (int j = 0; j < bodies; ++j) out.sequence.push_back(pendulum(j, t));
    if (t >= 1)
      for (int j = 0; j < actuators; ++j) out.sequence.push_back(control(j, t - 1));
  }
  return out;
}

namespace {

using Adjacency = std::map<VariableKey, std::set<VariableKey>>;

Adjacency variable_adjacency(const FactorGraph& graph) {
  Adjacency adj;
  for (const auto& [key, dim] : graph.variables()) adj.emplace(key, std::set<VariableKey>{});
  for (const auto& f : graph.factors())
    for (const auto& a : f.keys)
      for (const auto& b : f.keys)
        if (a != b) adj[a].insert(b);
  return adj;
}

/// Edges that eliminating `key` would add between its neighbors.
std::size_t fill_count(const Adjacency& adj, const VariableKey& key) {
  const auto& nbrs = adj.at(key);
  std::size_t fill = 0;
  for (auto a = nbrs.begin(); a != nbrs.end(); ++a) {
    const auto& adj_a = adj.at(*a);
    for (auto b = std::next(a); b != nbrs.end(); ++b)
      if (!adj_a.contains(*b)) ++fill;
  }
  return fill;
}

}  // namespace

Ordering min_fill_ordering(const FactorGraph& graph) {
  Adjacency adj = variable_adjacency(graph);
  std::map<VariableKey, std::size_t> score;
  std::set<std::pair<std::size_t, VariableKey>> queue;
  for (const auto& [key, nbrs] : adj) {
    score[key] = fill_count(adj, key);
    queue.emplace(score[key], key);
  }
  Ordering out;
  out.sequence.reserve(adj.size());
  while (!queue.empty()) {
    const VariableKey v = queue.begin()->second;
    queue.erase(queue.begin());
    score.erase(v);
    out.sequence.push_back(v);
    const std::set<VariableKey> nbrs = std::move(adj.at(v));
    adj.erase(v);
    for (const auto& a : nbrs) {
      auto& set_a = adj.at(a);
      set_a.erase(v);
      for (const auto& b : nbrs)
        if (b != a) set_a.insert(b);
    }
    // Fill scores change for the neighbors and for anything adjacent to them.
    std::set<VariableKey> touched(nbrs.begin(), nbrs.end());
    for (const auto& a : nbrs) touched.insert(adj.at(a).begin(), adj.at(a).end());
    for (const auto& a : touched) {
      auto& sc = score.at(a);
      queue.erase({sc, a});
      sc = fill_count(adj, a);
      queue.emplace(sc, a);
    }
  }
  return out;
}

Ordering min_degree_ordering(const FactorGraph& graph) {
  Adjacency adj = variable_adjacency(graph);

  std::set<std::pair<std::size_t, VariableKey>> queue;
  for (const auto& [key, nbrs] : adj) queue.emplace(nbrs.size(), key);

  Ordering out;
  out.sequence.reserve(adj.size());
  while (!queue.empty()) {
    const VariableKey v = queue.begin()->second;
    queue.erase(queue.begin());
    out.sequence.push_back(v);
    const std::set<VariableKey> nbrs = std::move(adj.at(v));
    adj.erase(v);
    for (const auto& a : nbrs) {
      auto& set_a = adj.at(a);
      queue.erase({set_a.size(), a});
      set_a.erase(v);
      for (const auto& b : nbrs)
        if (b != a) set_a.insert(b);
      queue.emplace(set_a.size(), a);
    }
  }
  return out;
}

}  // namespace sgopt
