// SPDX-License-Identifier: Apache-2.0
#include "accessctl/synthesis.hpp"

#include <algorithm>

namespace accessctl {
namespace {

std::string describe(const std::set<Violation>& vs) {
  std::string out = "policy violates the security invariants:";
  for (const auto& v : vs) out += " [" + std::to_string(v.invariant_index) + "] " + to_string(v.edge);
  return out;
}

}  // namespace

PolicyViolationError::PolicyViolationError(std::set<Violation> violations)
    : Error(describe(violations)), violations_(std::move(violations)) {}

PolicyGraph synthesize_policy(const Scenario& sc) {
  std::vector<Edge> edges;
  for (const auto& s : sc.entities) {
    for (const auto& d : sc.entities) {
      if (s == d ||
          std::all_of(sc.invariants.begin(), sc.invariants.end(),
                      [&](const InvariantInstance& inv) { return inv.eval_edge(s, d); }))
        edges.emplace_back(s, d);
    }
  }
  return graph_from_edges(sc.entities, edges);
}

std::set<Violation> verify_policy(const PolicyGraph& g, const Scenario& sc) {
  if (g.nodes() != sc.entities) {
    std::string msg = "policy entities differ from scenario entities;";
    for (const auto& e : g.nodes())
      if (!sc.entities.contains(e)) msg += " extra " + e.str();
    for (const auto& e : sc.entities)
      if (!g.nodes().contains(e)) msg += " missing " + e.str();
    throw Error(msg);
  }
  std::set<Violation> out;
  for (std::size_t i = 0; i < sc.invariants.size(); ++i)
    out.merge(sc.invariants[i].offenders(g, i + 1));
  return out;
}

StatefulPolicy make_stateful(const PolicyGraph& g, const Scenario& sc) {
  if (auto violations = verify_policy(g, sc); !violations.empty())
    throw PolicyViolationError(std::move(violations));
  std::set<Edge> answers;
  for (const auto& [s, d] : g.edges()) {
    if (s == d || g.has_edge(d, s)) continue;
    bool reverse_ok = std::all_of(
        sc.invariants.begin(), sc.invariants.end(), [&](const InvariantInstance& inv) {
          return inv.category() != InvariantCategory::InformationFlow || inv.eval_edge(d, s);
        });
    if (reverse_ok) answers.emplace(s, d);
  }
  return StatefulPolicy(g, std::move(answers));
}

}  // namespace accessctl
