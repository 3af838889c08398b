// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "accessctl/error.hpp"
#include "accessctl/policy.hpp"
#include "expected.hpp"

using namespace accessctl;
using namespace testing_support;

namespace {

std::set<EntityId> webapp_nodes() { return {E("INET"), E("WebFrnt"), E("WebApp"), E("DB"), E("Log")}; }

PolicyGraph maximal() {
  auto edges = maximal_policy_edges();
  return graph_from_edges(webapp_nodes(), {edges.begin(), edges.end()});
}

}  // namespace

TEST(EntityId, RejectsEmptyAndWhitespaceNames) {
  EXPECT_THROW(EntityId(""), Error);
  EXPECT_THROW(EntityId("Web App"), Error);
  EXPECT_THROW(EntityId("A\tB"), Error);
  EXPECT_EQ(EntityId("WebApp").str(), "WebApp");
  EXPECT_LT(E("DB"), E("INET"));
}

TEST(PolicyGraph, SingleSelfLoop) {
  auto g = graph_from_edges({E("A")}, {edge("A", "A")});
  EXPECT_EQ(g.nodes().size(), 1u);
  EXPECT_EQ(g.edges().size(), 1u);
  EXPECT_TRUE(g.has_edge(E("A"), E("A")));
}

TEST(PolicyGraph, KeepsExactlyTheGivenEdges) {
  auto g = maximal();
  EXPECT_EQ(g.edges(), maximal_policy_edges());
  EXPECT_EQ(g.edges().size(), 15u);
}

TEST(PolicyGraph, UnknownEndpointIsNamed) {
  try {
    graph_from_edges({E("A")}, {edge("A", "B")});
    FAIL() << "expected Error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unknown entity 'B'"), std::string::npos);
  }
}

TEST(PolicyGraph, DeduplicatesAndIsIdempotent) {
  auto g = graph_from_edges({E("A"), E("B")}, {edge("A", "B"), edge("A", "B")});
  EXPECT_EQ(g.edges().size(), 1u);
  auto again = graph_from_edges(g.nodes(), {g.edges().begin(), g.edges().end()});
  EXPECT_EQ(again, g);
}

TEST(PolicyGraph, RemovingTheFrontendUplinkGivesTheRefinedPolicy) {
  auto r = remove_edge(maximal(), edge("WebFrnt", "INET"));
  EXPECT_FALSE(r.warning);
  EXPECT_EQ(r.graph.edges(), refined_policy_edges());
  EXPECT_EQ(r.graph.edges().size(), 14u);
}

TEST(PolicyGraph, RemoveThenAddRestores) {
  auto g = maximal();
  auto removed = remove_edge(g, edge("Log", "Log"));
  EXPECT_FALSE(removed.graph.has_edge(E("Log"), E("Log")));
  auto restored = add_edge(removed.graph, edge("Log", "Log"));
  EXPECT_EQ(restored.graph, g);
}

TEST(PolicyGraph, AbsentEdgeRemovalWarns) {
  auto g = maximal();
  auto r = remove_edge(g, edge("DB", "INET"));
  EXPECT_TRUE(r.warning);
  EXPECT_EQ(r.graph, g);
  auto a = add_edge(g, edge("DB", "DB"));
  EXPECT_TRUE(a.warning);
  EXPECT_THROW(add_edge(g, edge("DB", "Nowhere")), Error);
}

TEST(StatefulPolicy, ValidatesBothClauses) {
  auto g = graph_from_edges({E("A"), E("B")}, {edge("A", "B")});
  EXPECT_NO_THROW(StatefulPolicy(g, {edge("A", "B")}));
  // answer edge missing from the base graph
  EXPECT_THROW(StatefulPolicy(g, {edge("B", "A")}), Error);
  auto both = graph_from_edges({E("A"), E("B")}, {edge("A", "B"), edge("B", "A")});
  // reverse already permitted
  EXPECT_THROW(StatefulPolicy(both, {edge("A", "B")}), Error);
}

TEST(Edge, Renders) { EXPECT_EQ(to_string(edge("Log", "WebFrnt")), "Log -> WebFrnt"); }
