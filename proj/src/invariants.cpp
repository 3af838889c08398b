// SPDX-License-Identifier: Apache-2.0
#include "accessctl/invariants.hpp"

#include "accessctl/error.hpp"

namespace accessctl {

InvariantCategory category_of(InvariantKind kind) {
  switch (kind) {
    case InvariantKind::Subnets:
    case InvariantKind::Acl:
      return InvariantCategory::AccessControl;
    case InvariantKind::Sink:
    case InvariantKind::BellLaPadula:
      return InvariantCategory::InformationFlow;
  }
  throw Error("unknown invariant kind");
}

std::string to_string(InvariantKind kind) {
  switch (kind) {
    case InvariantKind::Subnets: return "subnets";
    case InvariantKind::Sink: return "sink";
    case InvariantKind::BellLaPadula: return "blp";
    case InvariantKind::Acl: return "acl";
  }
  return "?";
}

std::optional<Attribute> default_attr(InvariantKind kind) {
  switch (kind) {
    case InvariantKind::Subnets: return SubnetsAttr{};
    case InvariantKind::Sink: return SinkAttr{};
    case InvariantKind::BellLaPadula: return BlpAttr{};
    case InvariantKind::Acl: return std::nullopt;
  }
  return std::nullopt;
}

InvariantInstance InvariantInstance::subnets(std::map<EntityId, SubnetsAttr> attrs) {
  std::map<EntityId, Attribute> out;
  for (auto& [e, a] : attrs) out.emplace(e, std::move(a));
  return {InvariantKind::Subnets, std::move(out)};
}

InvariantInstance InvariantInstance::sink(std::set<EntityId> sinks) {
  std::map<EntityId, Attribute> out;
  for (const auto& e : sinks) out.emplace(e, SinkAttr{true});
  return {InvariantKind::Sink, std::move(out)};
}

InvariantInstance InvariantInstance::bell_lapadula(std::map<EntityId, BlpAttr> attrs) {
  std::map<EntityId, Attribute> out;
  for (auto& [e, a] : attrs) out.emplace(e, a);
  return {InvariantKind::BellLaPadula, std::move(out)};
}

InvariantInstance InvariantInstance::acl(std::map<EntityId, AclAttr> attrs) {
  std::map<EntityId, Attribute> out;
  for (auto& [e, a] : attrs) out.emplace(e, std::move(a));
  return {InvariantKind::Acl, std::move(out)};
}

template <typename A>
A InvariantInstance::attr_or_default(const EntityId& e) const {
  if (auto it = attrs_.find(e); it != attrs_.end()) return std::get<A>(it->second);
  return A{};
}

bool InvariantInstance::eval_edge(const EntityId& src, const EntityId& dst) const {
  switch (kind_) {
    case InvariantKind::Subnets: {
      using Role = SubnetsAttr::Role;
      auto s = attr_or_default<SubnetsAttr>(src);
      auto d = attr_or_default<SubnetsAttr>(dst);
      switch (d.role) {
        case Role::Unassigned:
        case Role::Dmz:
          return true;
        case Role::Member:
          return s.role == Role::Dmz || (s.role == Role::Member && s.group == d.group);
      }
      return false;
    }
    case InvariantKind::Sink:
      return !attr_or_default<SinkAttr>(src).sink;
    case InvariantKind::BellLaPadula: {
      auto s = attr_or_default<BlpAttr>(src);
      auto d = attr_or_default<BlpAttr>(dst);
      if (d.trusted) return true;
      auto effective = s.trusted ? SecurityLevel::Unclassified : s.level;
      return effective <= d.level;
    }
    case InvariantKind::Acl: {
      auto it = attrs_.find(dst);
      if (it == attrs_.end()) return true;
      return std::get<AclAttr>(it->second).allowed_sources.contains(src);
    }
  }
  return false;
}

std::set<Violation> InvariantInstance::offenders(const PolicyGraph& g, std::size_t index) const {
  std::set<Violation> out;
  for (const auto& [s, d] : g.edges()) {
    if (s == d) continue;
    if (!eval_edge(s, d)) out.insert({index, {s, d}});
  }
  return out;
}

}  // namespace accessctl
