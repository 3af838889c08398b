// SPDX-License-Identifier: Apache-2.0
#include "accessctl/serializers.hpp"

#include <json.hpp>

#include "accessctl/error.hpp"

namespace accessctl {
namespace {

// One endpoint of a generated rule, already resolved against the binding.
struct Endpoint {
  enum class Kind { Addresses, Variable, Outside } kind = Kind::Addresses;
  std::string iface;  // Addresses/Variable
  std::string addr;   // rendered address list or variable token
  bool multi = false; // address list expands to several entries
};

Endpoint resolve(const EntityId& e, const EntityBinding& b) {
  auto it = b.entities.find(e);
  if (it == b.entities.end()) {
    if (b.external && *b.external == e) return Endpoint{Endpoint::Kind::Outside, {}, {}, false};
    throw Error("entity " + e.str() + " has no binding");
  }
  if (const auto* c = std::get_if<ConcreteBinding>(&it->second)) {
    if (c->ips.empty()) throw Error("entity " + e.str() + " is bound to no address");
    std::string list = render_cidr_list(c->ips);
    return Endpoint{Endpoint::Kind::Addresses, c->iface.empty() ? b.internal_iface : c->iface, list,
                    list.find(',') != std::string::npos};
  }
  const auto& v = std::get<VariableBinding>(it->second);
  return Endpoint{Endpoint::Kind::Variable, v.iface_var.empty() ? b.internal_iface : v.iface_var,
                  v.ip_var, false};
}

std::string range_text(const Interval<std::uint32_t>& iv) {
  return Ip32{iv.lo}.to_string() + "-" + Ip32{iv.hi}.to_string();
}

// Renders "-i X -s Y" (source) or "-o X -d Y" (destination). iptables rejects
// "! -s" next to a multi-address list on the other side, so the outside
// range then goes through the iprange module.
std::string render_endpoint(const Endpoint& ep, bool source, bool other_multi,
                            const EntityBinding& b, const IpIntervalSet& universe) {
  const std::string iface_flag = source ? "-i " : "-o ";
  const std::string addr_flag = source ? "-s " : "-d ";
  if (ep.kind != Endpoint::Kind::Outside) return iface_flag + ep.iface + " " + addr_flag + ep.addr;

  std::string out = "! " + iface_flag + b.internal_iface + " ";
  auto cidrs = to_cidrs(universe);
  if (!other_multi && cidrs.size() == 1) return out + "! " + addr_flag + render_cidr_list(universe);
  if (universe.intervals().size() != 1)
    throw Error("internal universe must be a single address range to negate it");
  return out + "-m iprange ! " + (source ? "--src-range " : "--dst-range ") +
         range_text(universe.intervals().front());
}

std::string render_flow(const EntityId& s, const EntityId& d, const EntityBinding& b,
                        const IpIntervalSet& universe) {
  Endpoint src = resolve(s, b);
  Endpoint dst = resolve(d, b);
  return render_endpoint(src, true, dst.multi, b, universe) + " " +
         render_endpoint(dst, false, src.multi, b, universe);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

std::set<Edge> violating_edges(const std::set<Violation>& vs) {
  std::set<Edge> out;
  for (const auto& v : vs) out.insert(v.edge);
  return out;
}

void emit_policy_body(std::string& out, const PolicyGraph& g, const std::set<Violation>& highlight) {
  for (const auto& n : g.nodes()) out += "  " + quote(n.str()) + ";\n";
  auto bad = violating_edges(highlight);
  for (const auto& e : g.edges()) {
    out += "  " + quote(e.first.str()) + " -> " + quote(e.second.str());
    if (bad.contains(e)) out += " [style=dotted, color=red]";
    out += ";\n";
  }
}

}  // namespace

EntityBinding EntityBinding::variables(const std::set<EntityId>& entities,
                                       std::string internal_iface,
                                       std::optional<EntityId> external) {
  EntityBinding b;
  b.internal_iface = std::move(internal_iface);
  b.external = external;
  for (const auto& e : entities) {
    VariableBinding v{"$" + e.str() + "_ip", {}};
    if (external && *external == e) v.iface_var = "$" + e.str() + "_iface";
    b.entities.emplace(e, std::move(v));
  }
  return b;
}

std::string to_iptables(const StatefulPolicy& sp, const EntityBinding& b,
                        const IpIntervalSet& internal_universe) {
  std::string out = "*filter\n:INPUT ACCEPT [0:0]\n:FORWARD DROP [0:0]\n:OUTPUT ACCEPT [0:0]\n";
  for (const auto& [s, d] : sp.base().edges())
    out += "-A FORWARD " + render_flow(s, d, b, internal_universe) + " -j ACCEPT\n";
  for (const auto& [s, d] : sp.answer_edges())
    out += "-I FORWARD -m state --state ESTABLISHED " + render_flow(d, s, b, internal_universe) +
           " -j ACCEPT\n";
  out += "COMMIT\n";
  return out;
}

DfwfwDocument to_dfwfw(const PolicyGraph& g, const DfwfwBinding& b) {
  for (const auto& n : g.nodes())
    if (!(b.external && *b.external == n) && !b.patterns.contains(n))
      throw Error("entity " + n.str() + " has no container pattern");
  DfwfwDocument doc;
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  for (const auto& e : g.edges()) {
    if (b.external && (e.first == *b.external || e.second == *b.external)) {
      doc.warnings.push_back("edge " + to_string(e) +
                             " involves the external entity and is not expressible as a "
                             "container_to_container rule; skipped");
      continue;
    }
    nlohmann::ordered_json r;
    r["network"] = b.network;
    r["src_container"] = b.patterns.at(e.first);
    r["dst_container"] = b.patterns.at(e.second);
    r["filter"] = "";
    r["action"] = "ACCEPT";
    rules.push_back(std::move(r));
  }
  nlohmann::ordered_json root;
  root["container_to_container"]["rules"] = std::move(rules);
  doc.text = root.dump(2) + "\n";
  return doc;
}

std::string to_dot(const PolicyGraph& g, const std::set<Violation>& highlight) {
  std::string out = "digraph policy {\n  node [shape=box];\n";
  emit_policy_body(out, g, highlight);
  return out + "}\n";
}

std::string to_dot(const StatefulPolicy& sp, const std::set<Violation>& highlight) {
  std::string out = "digraph stateful_policy {\n  node [shape=box];\n";
  emit_policy_body(out, sp.base(), highlight);
  for (const auto& [s, d] : sp.answer_edges())
    out += "  " + quote(d.str()) + " -> " + quote(s.str()) + " [style=dashed, color=orange];\n";
  return out + "}\n";
}

std::string to_dot(const analysis::ServiceMatrix& m,
                   const std::set<std::pair<std::size_t, std::size_t>>& answer_edges) {
  std::string out = "digraph service_matrix {\n  node [shape=box];\n";
  for (std::size_t i = 0; i < m.classes.size(); ++i)
    out += "  c" + std::to_string(i) + " [label=" + quote(render_label(m.classes[i])) + "];\n";
  for (const auto& [from, to] : m.edges)
    out += "  c" + std::to_string(from) + " -> c" + std::to_string(to) + ";\n";
  for (const auto& [from, to] : answer_edges)
    out += "  c" + std::to_string(from) + " -> c" + std::to_string(to) +
           " [style=dashed, color=orange];\n";
  return out + "}\n";
}

}  // namespace accessctl
