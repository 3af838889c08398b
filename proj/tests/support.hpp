// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "accessctl/analysis.hpp"
#include "accessctl/ipspace.hpp"
#include "accessctl/iptables.hpp"
#include "accessctl/policy.hpp"

namespace testing_support {

inline std::string fixture(const std::string& name) {
  std::ifstream in(std::string(ACCESSCTL_FIXTURES) + "/" + name, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline accessctl::EntityId E(const char* name) { return accessctl::EntityId(name); }

inline accessctl::Edge edge(const char* s, const char* d) { return {E(s), E(d)}; }

inline accessctl::IpIntervalSet ips(const char* expr) { return accessctl::parse_ip_expr(expr); }

inline accessctl::Ip32 ip(const char* dotted) { return accessctl::Ip32::parse(dotted); }

inline accessctl::analysis::AnalysisOptions docker_options() {
  accessctl::analysis::AnalysisOptions o;
  o.ipassmt = accessctl::analysis::parse_ipassmt(fixture("docker.ipassmt"));
  return o;
}

inline accessctl::iptables::Ruleset ruleset(const std::string& name) {
  return accessctl::iptables::parse_save(fixture(name));
}

using LabelEdges = std::set<std::pair<std::string, std::string>>;

/// Matrix edges keyed by rendered class labels, independent of class order.
inline LabelEdges label_edges(const accessctl::analysis::ServiceMatrix& m,
                              const std::set<std::pair<std::size_t, std::size_t>>& edges) {
  LabelEdges out;
  for (const auto& [a, b] : edges)
    out.emplace(accessctl::render_label(m.classes[a]), accessctl::render_label(m.classes[b]));
  return out;
}

inline LabelEdges label_edges(const accessctl::analysis::ServiceMatrix& m) {
  return label_edges(m, m.edges);
}

inline std::set<std::string> labels(const accessctl::analysis::ServiceMatrix& m) {
  std::set<std::string> out;
  for (const auto& c : m.classes) out.insert(accessctl::render_label(c));
  return out;
}

// Class labels in overview notation.
inline const std::string kOutside = "{0.0.0.0 .. 9.255.255.255} ∪ {11.0.0.0 .. 255.255.255.255}";
inline const std::string kRest = "{10.0.0.0} ∪ {10.0.0.5 .. 10.255.255.255}";
inline const std::string kRestTwoFrontends =
    "{10.0.0.0} ∪ {10.0.0.5 .. 10.0.0.41} ∪ {10.0.0.43 .. 10.255.255.255}";
inline const std::string kFrnt = "{10.0.0.1}";
inline const std::string kFrnts = "{10.0.0.1,10.0.0.42}";
inline const std::string kLog = "{10.0.0.2}";
inline const std::string kDb = "{10.0.0.3}";
inline const std::string kApp = "{10.0.0.4}";

}  // namespace testing_support
