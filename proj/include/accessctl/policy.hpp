// SPDX-License-Identifier: Apache-2.0
//
// Symbolic entities, directed policy graphs and stateful policies.
#pragma once

#include <compare>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace accessctl {

/// Name of a host or host group, e.g. "WebApp" or "INET".
class EntityId {
 public:
  EntityId() = default;
  /// Throws Error if `name` is empty or contains whitespace.
  explicit EntityId(std::string name);

  const std::string& str() const noexcept { return name_; }

  friend bool operator==(const EntityId&, const EntityId&) = default;
  friend auto operator<=>(const EntityId&, const EntityId&) = default;

 private:
  std::string name_;
};

using Edge = std::pair<EntityId, EntityId>;

std::string to_string(const Edge& e);

/// Directed graph over entities; an edge means "may initiate communication".
/// Self-loops are ordinary edges. Nodes and edges iterate in lexicographic
/// entity order.
class PolicyGraph {
 public:
  PolicyGraph() = default;

  const std::set<EntityId>& nodes() const noexcept { return nodes_; }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  bool has_edge(const EntityId& src, const EntityId& dst) const {
    return edges_.contains({src, dst});
  }

  friend bool operator==(const PolicyGraph&, const PolicyGraph&) = default;

 private:
  friend PolicyGraph graph_from_edges(std::set<EntityId>, const std::vector<Edge>&);
  std::set<EntityId> nodes_;
  std::set<Edge> edges_;
};

/// Validated, deduplicated graph. Throws Error naming the first edge endpoint
/// that is not among `nodes` ("unknown entity ...").
PolicyGraph graph_from_edges(std::set<EntityId> nodes, const std::vector<Edge>& edges);

struct EdgeUpdate {
  PolicyGraph graph;
  bool warning = false;  ///< set when the update was a no-op
};

EdgeUpdate remove_edge(const PolicyGraph& g, const Edge& e);
/// Inverse of remove_edge; endpoints must be nodes of `g`.
EdgeUpdate add_edge(const PolicyGraph& g, const Edge& e);

/// A policy plus answer edges: (s, d) in answer_edges lets reply packets of a
/// connection initiated by s flow back from d.
class StatefulPolicy {
 public:
  StatefulPolicy() = default;
  /// Throws Error unless every answer edge is a base edge whose reverse is
  /// not a base edge.
  StatefulPolicy(PolicyGraph base, std::set<Edge> answer_edges);

  const PolicyGraph& base() const noexcept { return base_; }
  const std::set<Edge>& answer_edges() const noexcept { return answer_edges_; }

  friend bool operator==(const StatefulPolicy&, const StatefulPolicy&) = default;

 private:
  PolicyGraph base_;
  std::set<Edge> answer_edges_;
};

/// One offending flow. `invariant_index` is 1-based in scenario order.
struct Violation {
  std::size_t invariant_index = 0;
  Edge edge;

  friend bool operator==(const Violation&, const Violation&) = default;
  friend auto operator<=>(const Violation&, const Violation&) = default;
};

}  // namespace accessctl
