// SPDX-License-Identifier: Apache-2.0
//
// Security invariant templates. Each instance assigns attributes to some
// entities; unassigned entities take the template's secure default. All four
// templates are edge-local: whether an edge is allowed depends only on the
// attributes of its two endpoints.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include "accessctl/policy.hpp"

namespace accessctl {

enum class InvariantKind { Subnets, Sink, BellLaPadula, Acl };

/// ACS constrains who may initiate; IFS constrains where data may travel,
/// including reply packets.
enum class InvariantCategory { AccessControl, InformationFlow };

InvariantCategory category_of(InvariantKind kind);
std::string to_string(InvariantKind kind);

struct SubnetsAttr {
  enum class Role { Member, Dmz, Unassigned };
  Role role = Role::Unassigned;
  std::string group;  ///< only meaningful for Member

  static SubnetsAttr member(std::string group) { return {Role::Member, std::move(group)}; }
  static SubnetsAttr dmz() { return {Role::Dmz, {}}; }

  friend bool operator==(const SubnetsAttr&, const SubnetsAttr&) = default;
};

struct SinkAttr {
  bool sink = false;
  friend bool operator==(const SinkAttr&, const SinkAttr&) = default;
};

enum class SecurityLevel { Unclassified = 0, Confidential = 1 };

struct BlpAttr {
  SecurityLevel level = SecurityLevel::Unclassified;
  bool trusted = false;  ///< may receive anything and sends as Unclassified
  friend bool operator==(const BlpAttr&, const BlpAttr&) = default;
};

struct AclAttr {
  std::set<EntityId> allowed_sources;
  friend bool operator==(const AclAttr&, const AclAttr&) = default;
};

using Attribute = std::variant<SubnetsAttr, SinkAttr, BlpAttr, AclAttr>;

/// Secure default for entities without an explicit attribute. ACL has none:
/// an entity without an access list accepts from everyone.
std::optional<Attribute> default_attr(InvariantKind kind);

class InvariantInstance {
 public:
  static InvariantInstance subnets(std::map<EntityId, SubnetsAttr> attrs);
  static InvariantInstance sink(std::set<EntityId> sinks);
  static InvariantInstance bell_lapadula(std::map<EntityId, BlpAttr> attrs);
  static InvariantInstance acl(std::map<EntityId, AclAttr> attrs);

  InvariantKind kind() const noexcept { return kind_; }
  InvariantCategory category() const noexcept { return category_of(kind_); }
  const std::map<EntityId, Attribute>& attrs() const noexcept { return attrs_; }

  /// Whether the flow src -> dst satisfies this invariant. Must not be called
  /// with src == dst; reflexive flows are exempt from every template.
  bool eval_edge(const EntityId& src, const EntityId& dst) const;

  /// Non-reflexive edges of `g` this invariant rejects, tagged with `index`.
  std::set<Violation> offenders(const PolicyGraph& g, std::size_t index = 1) const;

  friend bool operator==(const InvariantInstance&, const InvariantInstance&) = default;

 private:
  InvariantInstance(InvariantKind kind, std::map<EntityId, Attribute> attrs)
      : kind_(kind), attrs_(std::move(attrs)) {}

  template <typename A>
  A attr_or_default(const EntityId& e) const;

  InvariantKind kind_;
  std::map<EntityId, Attribute> attrs_;
};

}  // namespace accessctl
