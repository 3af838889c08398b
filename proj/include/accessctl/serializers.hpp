// SPDX-License-Identifier: Apache-2.0
//
// Output backends: iptables-save rulesets, DFWFW configuration documents and
// DOT graphs.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "accessctl/analysis.hpp"
#include "accessctl/ipspace.hpp"
#include "accessctl/policy.hpp"

namespace accessctl {

/// Entity reachable at fixed addresses. An empty `iface` means the internal
/// bridge interface.
struct ConcreteBinding {
  IpIntervalSet ips;
  std::string iface;
};

/// Entity left as shell-style placeholders, e.g. "$WebFrnt_ip". An empty
/// `iface_var` means the internal bridge interface.
struct VariableBinding {
  std::string ip_var;
  std::string iface_var;
};

struct EntityBinding {
  std::string internal_iface = "dockerbr";
  /// The entity standing for everything outside the internal universe. It
  /// may be left unbound, in which case it is matched by negating the
  /// internal interface and universe.
  std::optional<EntityId> external;
  std::map<EntityId, std::variant<ConcreteBinding, VariableBinding>> entities;

  /// Placeholder bindings "$E_ip" for every entity, plus "$E_iface" for the
  /// external one.
  static EntityBinding variables(const std::set<EntityId>& entities, std::string internal_iface,
                                 std::optional<EntityId> external);
};

/// Whitelisting filter table: FORWARD policy DROP, one -A rule per base edge
/// and one -I ESTABLISHED rule per answer edge. Throws Error for an unbound
/// entity.
std::string to_iptables(const StatefulPolicy& sp, const EntityBinding& b,
                        const IpIntervalSet& internal_universe);

struct DfwfwBinding {
  std::string network;
  std::map<EntityId, std::string> patterns;  ///< container-name match, emitted verbatim
  std::optional<EntityId> external;
};

struct DfwfwDocument {
  std::string text;
  std::vector<std::string> warnings;
};

/// container_to_container rules for every edge between internal entities.
/// Edges touching the external entity are skipped with a warning. Throws
/// Error when an internal entity has no pattern.
DfwfwDocument to_dfwfw(const PolicyGraph& g, const DfwfwBinding& b);

std::string to_dot(const PolicyGraph& g, const std::set<Violation>& highlight = {});
/// Answer edges are drawn dashed in the direction the reply packets travel.
std::string to_dot(const StatefulPolicy& sp, const std::set<Violation>& highlight = {});
/// Classes are labelled in interval notation; `answer_edges` are drawn dashed.
std::string to_dot(const analysis::ServiceMatrix& m,
                   const std::set<std::pair<std::size_t, std::size_t>>& answer_edges = {});

}  // namespace accessctl
