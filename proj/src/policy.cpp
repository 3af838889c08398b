// SPDX-License-Identifier: Apache-2.0
#include "accessctl/policy.hpp"

#include <algorithm>

#include "accessctl/error.hpp"

namespace accessctl {

EntityId::EntityId(std::string name) : name_(std::move(name)) {
  if (name_.empty()) throw Error("entity name must not be empty");
  if (std::any_of(name_.begin(), name_.end(),
                  [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }))
    throw Error("entity name '" + name_ + "' contains whitespace");
}

std::string to_string(const Edge& e) { return e.first.str() + " -> " + e.second.str(); }

PolicyGraph graph_from_edges(std::set<EntityId> nodes, const std::vector<Edge>& edges) {
  PolicyGraph g;
  for (const auto& [src, dst] : edges) {
    for (const auto* end : {&src, &dst}) {
      if (!nodes.contains(*end)) throw Error("unknown entity '" + end->str() + "'");
    }
    g.edges_.insert({src, dst});
  }
  g.nodes_ = std::move(nodes);
  return g;
}

EdgeUpdate remove_edge(const PolicyGraph& g, const Edge& e) {
  if (!g.edges().contains(e)) return {g, true};
  std::vector<Edge> kept;
  for (const auto& x : g.edges())
    if (x != e) kept.push_back(x);
  return {graph_from_edges(g.nodes(), kept), false};
}

EdgeUpdate add_edge(const PolicyGraph& g, const Edge& e) {
  if (g.edges().contains(e)) return {g, true};
  std::vector<Edge> all(g.edges().begin(), g.edges().end());
  all.push_back(e);
  return {graph_from_edges(g.nodes(), all), false};
}

StatefulPolicy::StatefulPolicy(PolicyGraph base, std::set<Edge> answer_edges)
    : base_(std::move(base)), answer_edges_(std::move(answer_edges)) {
  for (const auto& [s, d] : answer_edges_) {
    if (!base_.has_edge(s, d))
      throw Error("answer edge " + to_string({s, d}) + " is not an edge of the policy");
    if (base_.has_edge(d, s))
      throw Error("answer edge " + to_string({s, d}) + " annotates an already bidirectional pair");
  }
}

}  // namespace accessctl
