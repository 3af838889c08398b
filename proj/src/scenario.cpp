// SPDX-License-Identifier: Apache-2.0
#include "accessctl/scenario.hpp"

#include <functional>

#include <json.hpp>

#include "accessctl/error.hpp"

namespace accessctl {
namespace {

using nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw Error(where + ": missing \"" + key + "\"");
  return obj.at(key);
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw Error(where + ": expected a string");
  return v.get<std::string>();
}

EntityId entity(const std::set<EntityId>& known, const std::string& name, const std::string& where) {
  EntityId e(name);
  if (!known.contains(e)) throw Error(where + ": unknown entity '" + name + "'");
  return e;
}

SubnetsAttr subnets_attr(const json& v, const std::string& where) {
  std::string s = as_string(v, where);
  if (s == "DMZ" || s == "dmz") return SubnetsAttr::dmz();
  if (s == "unassigned") return SubnetsAttr{};
  return SubnetsAttr::member(s);
}

bool sink_attr(const json& v, const std::string& where) {
  if (v.is_boolean()) return v.get<bool>();
  std::string s = as_string(v, where);
  if (s == "sink") return true;
  if (s == "nosink" || s == "none") return false;
  throw Error(where + ": sink attribute must be \"sink\" or \"nosink\"");
}

SecurityLevel blp_level(const std::string& s, const std::string& where) {
  if (s == "unclassified") return SecurityLevel::Unclassified;
  if (s == "confidential") return SecurityLevel::Confidential;
  throw Error(where + ": unknown security level '" + s + "'");
}

BlpAttr blp_attr(const json& v, const std::string& where) {
  if (v.is_object()) {
    BlpAttr a;
    if (v.contains("level")) a.level = blp_level(as_string(v.at("level"), where), where);
    if (v.contains("trusted")) {
      if (!v.at("trusted").is_boolean()) throw Error(where + ": \"trusted\" must be a boolean");
      a.trusted = v.at("trusted").get<bool>();
    }
    return a;
  }
  std::string s = as_string(v, where);
  if (s == "declassify" || s == "trusted") return BlpAttr{SecurityLevel::Unclassified, true};
  return BlpAttr{blp_level(s, where), false};
}

InvariantInstance parse_invariant(const json& j, const std::set<EntityId>& known, std::size_t index) {
  const std::string where = "invariant " + std::to_string(index);
  std::string tmpl = as_string(field(j, "template", where), where);
  json attrs = j.contains("attrs") ? j.at("attrs") : json::object();
  if (!attrs.is_object()) throw Error(where + ": \"attrs\" must be an object");

  auto each = [&](auto&& fn) {
    for (const auto& [name, value] : attrs.items())
      fn(entity(known, name, where), value, where + " (" + name + ")");
  };

  if (tmpl == "subnets") {
    std::map<EntityId, SubnetsAttr> m;
    each([&](const EntityId& e, const json& v, const std::string& w) { m.emplace(e, subnets_attr(v, w)); });
    return InvariantInstance::subnets(std::move(m));
  }
  if (tmpl == "sink") {
    std::set<EntityId> sinks;
    each([&](const EntityId& e, const json& v, const std::string& w) {
      if (sink_attr(v, w)) sinks.insert(e);
    });
    return InvariantInstance::sink(std::move(sinks));
  }
  if (tmpl == "blp") {
    std::map<EntityId, BlpAttr> m;
    each([&](const EntityId& e, const json& v, const std::string& w) { m.emplace(e, blp_attr(v, w)); });
    return InvariantInstance::bell_lapadula(std::move(m));
  }
  if (tmpl == "acl") {
    std::map<EntityId, AclAttr> m;
    each([&](const EntityId& e, const json& v, const std::string& w) {
      if (!v.is_array()) throw Error(w + ": ACL attribute must be a list of entities");
      AclAttr a;
      for (const auto& s : v) a.allowed_sources.insert(entity(known, as_string(s, w), w));
      m.emplace(e, std::move(a));
    });
    return InvariantInstance::acl(std::move(m));
  }
  throw Error(where + ": unknown template '" + tmpl + "' (expected subnets, sink, blp or acl)");
}

IpIntervalSet ip_field(const json& v, const std::string& where) {
  try {
    return parse_ip_expr(as_string(v, where));
  } catch (const ParseError& e) {
    throw Error(where + ": " + e.what());
  }
}

void parse_bindings(const json& j, ScenarioFile& sf) {
  const std::string where = "bindings";
  const auto& known = sf.scenario.entities;
  EntityBinding b;
  if (j.contains("internal_iface")) b.internal_iface = as_string(j.at("internal_iface"), where);
  sf.internal_universe = j.contains("internal_universe")
                             ? ip_field(j.at("internal_universe"), where + ".internal_universe")
                             : cidr(Ip32{0x0A000000u}, 8);
  if (j.contains("external")) b.external = entity(known, as_string(j.at("external"), where), where);
  if (j.contains("entities")) {
    const json& ents = j.at("entities");
    if (!ents.is_object()) throw Error(where + ".entities must be an object");
    for (const auto& [name, v] : ents.items()) {
      const std::string w = where + " (" + name + ")";
      EntityId e = entity(known, name, w);
      if (!v.is_object()) throw Error(w + ": expected an object");
      if (v.contains("ips")) {
        ConcreteBinding c{ip_field(v.at("ips"), w), {}};
        if (v.contains("iface")) c.iface = as_string(v.at("iface"), w);
        b.entities.emplace(e, std::move(c));
      } else if (v.contains("ip_var")) {
        VariableBinding var{as_string(v.at("ip_var"), w), {}};
        if (v.contains("iface_var")) var.iface_var = as_string(v.at("iface_var"), w);
        b.entities.emplace(e, std::move(var));
      } else {
        throw Error(w + ": expected \"ips\" or \"ip_var\"");
      }
    }
  }
  sf.binding = std::move(b);
}

}  // namespace

ScenarioFile parse_scenario(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed scenario document: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw Error("scenario document must be a JSON object");

  ScenarioFile sf;
  sf.internal_universe = cidr(Ip32{0x0A000000u}, 8);
  const json& ents = field(doc, "entities", "scenario");
  if (!ents.is_array()) throw Error("scenario: \"entities\" must be a list");
  for (const auto& e : ents) {
    EntityId id(as_string(e, "scenario entities"));
    if (!sf.scenario.entities.insert(id).second)
      throw Error("scenario: duplicate entity '" + id.str() + "'");
  }
  if (doc.contains("invariants")) {
    const json& invs = doc.at("invariants");
    if (!invs.is_array()) throw Error("scenario: \"invariants\" must be a list");
    for (std::size_t i = 0; i < invs.size(); ++i)
      sf.scenario.invariants.push_back(parse_invariant(invs[i], sf.scenario.entities, i + 1));
  }
  if (doc.contains("bindings")) parse_bindings(doc.at("bindings"), sf);
  if (doc.contains("dfwfw")) {
    const json& d = doc.at("dfwfw");
    DfwfwBinding b;
    b.network = as_string(field(d, "network", "dfwfw"), "dfwfw.network");
    if (d.contains("patterns")) {
      if (!d.at("patterns").is_object()) throw Error("dfwfw.patterns must be an object");
      for (const auto& [name, v] : d.at("patterns").items())
        b.patterns.emplace(entity(sf.scenario.entities, name, "dfwfw"), as_string(v, "dfwfw." + name));
    }
    if (sf.binding) b.external = sf.binding->external;
    sf.dfwfw = std::move(b);
  }
  return sf;
}

PolicyGraph parse_policy_edges(std::string_view text, const std::set<EntityId>& nodes) {
  std::vector<Edge> edges;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  auto strip = [](std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    auto fail = [&](const std::string& msg) {
      throw ParseError("policy line " + std::to_string(lineno) + ": " + msg, lineno);
    };
    auto arrow = line.find("->");
    if (arrow == std::string_view::npos) fail("expected 'src -> dst'");
    std::string src(strip(line.substr(0, arrow)));
    std::string dst(strip(line.substr(arrow + 2)));
    if (src.empty() || dst.empty()) fail("expected 'src -> dst'");
    try {
      EntityId s(src);
      EntityId d(dst);
      if (!nodes.contains(s)) fail("unknown entity '" + src + "'");
      if (!nodes.contains(d)) fail("unknown entity '" + dst + "'");
      edges.emplace_back(std::move(s), std::move(d));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  return graph_from_edges(nodes, edges);
}

std::string render_policy_edges(const PolicyGraph& g) {
  std::string out;
  for (const auto& e : g.edges()) out += to_string(e) + "\n";
  return out;
}

std::map<EntityId, IpIntervalSet> concrete_addresses(const ScenarioFile& sf) {
  if (!sf.binding) throw Error("scenario has no bindings section");
  std::map<EntityId, IpIntervalSet> out;
  for (const auto& [e, b] : sf.binding->entities) {
    const auto* c = std::get_if<ConcreteBinding>(&b);
    if (!c) throw Error("entity " + e.str() + " has a variable binding, addresses are required");
    out.emplace(e, c->ips);
  }
  if (sf.binding->external && !out.contains(*sf.binding->external))
    out.emplace(*sf.binding->external, ~sf.internal_universe);
  return out;
}

}  // namespace accessctl
