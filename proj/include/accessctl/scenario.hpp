// SPDX-License-Identifier: Apache-2.0
//
// Scenario documents and policy edge files.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "accessctl/serializers.hpp"
#include "accessctl/synthesis.hpp"

namespace accessctl {

struct ScenarioFile {
  Scenario scenario;
  /// Present when the document has a "bindings" section.
  std::optional<EntityBinding> binding;
  IpIntervalSet internal_universe;
  std::optional<DfwfwBinding> dfwfw;
};

/// Parses a JSON scenario document:
///
///   {"entities": ["DB", ...],
///    "invariants": [{"template": "subnets", "attrs": {"DB": "internal"}}, ...],
///    "bindings": {"internal_iface": "dockerbr", "internal_universe": "10.0.0.0/8",
///                 "external": "INET",
///                 "entities": {"DB": {"ips": "10.0.0.3"}}},
///    "dfwfw": {"network": "net", "patterns": {"DB": "Name =~ ^db$"}}}
///
/// Throws ParseError for malformed JSON and Error for schema violations.
ScenarioFile parse_scenario(std::string_view json_text);

/// Reads "src -> dst" lines ('#' comments, blank lines ignored). Throws
/// ParseError with the line number.
PolicyGraph parse_policy_edges(std::string_view text, const std::set<EntityId>& nodes);
std::string render_policy_edges(const PolicyGraph& g);

/// Address set of every entity under a concrete binding; the unbound external
/// entity receives the complement of the internal universe.
std::map<EntityId, IpIntervalSet> concrete_addresses(const ScenarioFile& sf);

}  // namespace accessctl
