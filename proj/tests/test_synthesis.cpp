// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "accessctl/scenario.hpp"
#include "accessctl/synthesis.hpp"
#include "expected.hpp"

using namespace accessctl;
using namespace testing_support;

namespace {

Scenario webapp() { return parse_scenario(fixture("webapp_scenario.json")).scenario; }

PolicyGraph graph(const Scenario& sc, const std::set<Edge>& edges) {
  return graph_from_edges(sc.entities, {edges.begin(), edges.end()});
}

}  // namespace

TEST(Synthesize, WebappScenarioGivesTheMaximalPolicy) {
  auto g = synthesize_policy(webapp());
  EXPECT_EQ(g.edges(), maximal_policy_edges());
}

TEST(Synthesize, NoInvariantsGiveTheCompleteGraph) {
  Scenario sc{{E("A"), E("B")}, {}};
  EXPECT_EQ(synthesize_policy(sc).edges().size(), 4u);
}

TEST(Synthesize, SingleSink) {
  Scenario sc{{E("A"), E("B")}, {InvariantInstance::sink({E("A")})}};
  EXPECT_EQ(synthesize_policy(sc).edges(),
            (std::set<Edge>{edge("A", "A"), edge("B", "B"), edge("B", "A")}));
}

TEST(Verify, RefinedPolicyComplies) {
  auto sc = webapp();
  EXPECT_TRUE(verify_policy(graph(sc, refined_policy_edges()), sc).empty());
  EXPECT_TRUE(verify_policy(synthesize_policy(sc), sc).empty());
}

TEST(Verify, StatusPageFlowViolatesTwoInvariants) {
  auto sc = webapp();
  auto edges = refined_policy_edges();
  edges.insert(edge("Log", "WebFrnt"));
  EXPECT_EQ(verify_policy(graph(sc, edges), sc),
            (std::set<Violation>{{2, edge("Log", "WebFrnt")}, {3, edge("Log", "WebFrnt")}}));
}

TEST(Verify, NodeMismatchListsDifferences) {
  auto sc = webapp();
  auto g = graph_from_edges({E("INET"), E("WebFrnt"), E("WebApp"), E("DB"), E("Extra")}, {});
  try {
    verify_policy(g, sc);
    FAIL() << "expected Error";
  } catch (const Error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("extra Extra"), std::string::npos);
    EXPECT_NE(msg.find("missing Log"), std::string::npos);
  }
}

TEST(Stateful, RefinedPolicyGetsTwoAnswerEdges) {
  auto sc = webapp();
  auto sp = make_stateful(graph(sc, refined_policy_edges()), sc);
  EXPECT_EQ(sp.answer_edges(), (std::set<Edge>{edge("WebApp", "INET"), edge("INET", "WebFrnt")}));
  for (const auto& [s, d] : sp.answer_edges()) EXPECT_NE(d, E("Log"));
}

TEST(Stateful, MaximalPolicyGetsOneAnswerEdge) {
  auto sc = webapp();
  auto sp = make_stateful(synthesize_policy(sc), sc);
  EXPECT_EQ(sp.answer_edges(), (std::set<Edge>{edge("WebApp", "INET")}));
}

TEST(Stateful, AccessControlDoesNotBlockReplies) {
  // Only the ACL forbids B -> A, so A -> B may still be answered.
  Scenario sc{{E("A"), E("B")}, {InvariantInstance::acl({{E("A"), AclAttr{}}})}};
  auto sp = make_stateful(synthesize_policy(sc), sc);
  EXPECT_EQ(sp.answer_edges(), (std::set<Edge>{edge("A", "B")}));
}

TEST(Stateful, BidirectionalPolicyNeedsNoAnswers) {
  Scenario sc{{E("A"), E("B")}, {}};
  EXPECT_TRUE(make_stateful(synthesize_policy(sc), sc).answer_edges().empty());
}

TEST(Stateful, RefusesViolatingPolicy) {
  auto sc = webapp();
  auto edges = refined_policy_edges();
  edges.insert(edge("Log", "WebFrnt"));
  try {
    make_stateful(graph(sc, edges), sc);
    FAIL() << "expected PolicyViolationError";
  } catch (const PolicyViolationError& e) {
    EXPECT_EQ(e.violations().size(), 2u);
  }
}
