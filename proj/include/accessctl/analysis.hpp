// SPDX-License-Identifier: Apache-2.0
//
// Ruleset analysis: unfold chains into one first-match list, specialize it
// to a fixed service, approximate the matches the model cannot decide, and
// partition the IPv4 space into classes of identical access behaviour.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "accessctl/iptables.hpp"
#include "accessctl/ipspace.hpp"
#include "accessctl/policy.hpp"

namespace accessctl::analysis {

using iptables::Protocol;
using iptables::Rule;
using iptables::Ruleset;

enum class ConnState { New, Established };

struct Packet {
  Ip32 src;
  Ip32 dst;
  Protocol protocol = Protocol::Tcp;
  std::uint16_t sport = 10000;
  std::uint16_t dport = 80;
  ConnState state = ConnState::New;
  /// Interfaces, when known. Interface matches against an unset interface
  /// resolve like unknown matches.
  std::optional<std::string> in_iface;
  std::optional<std::string> out_iface;
};

enum class Verdict { Accept, Drop };
enum class UnknownVerdict { Match, NoMatch };

/// Interface name -> addresses reachable behind it.
using Ipassmt = std::map<std::string, IpIntervalSet>;

/// Parses "iface = ip-expr" lines; '#' starts a comment.
Ipassmt parse_ipassmt(std::string_view text);
/// Pairs of interfaces whose assigned ranges overlap.
std::vector<std::pair<std::string, std::string>> overlapping_ifaces(const Ipassmt& assmt);

/// Source port assumed for service packets (an ephemeral client port).
inline constexpr std::uint16_t kClientPort = 10000;

struct Service {
  Protocol protocol = Protocol::Tcp;
  std::uint16_t dport = 80;

  static Service ssh() { return {Protocol::Tcp, 22}; }
  static Service http() { return {Protocol::Tcp, 80}; }
  /// "tcp:80", "udp:514", ...
  static Service parse(std::string_view text);
};

enum class ClosureMode { InDoubtAllow, InDoubtDeny };

/// Address-only rule: the normal form after specialization and closure.
struct SimpleRule {
  IpIntervalSet src = IpIntervalSet::full();
  IpIntervalSet dst = IpIntervalSet::full();
  Verdict action = Verdict::Drop;
  friend bool operator==(const SimpleRule&, const SimpleRule&) = default;
};

/// Whether one match atom holds for `p`.
bool atom_matches(const iptables::MatchAtom& atom, const Packet& p, UnknownVerdict unknown);

/// Linear list equivalent to `start` with every jump inlined (callee rules
/// carry the caller's matches in front) and the chain policy appended as a
/// final unconditional rule. Only unconditional trailing RETURNs are
/// supported; jump cycles are rejected.
std::vector<Rule> unfold(const Ruleset& rs, const std::string& start);

/// Call-stack interpreter with iptables first-match semantics.
Verdict eval_packet(const Ruleset& rs, const std::string& start, const Packet& p,
                    UnknownVerdict unknown);
/// First-match evaluation of an unfolded list; no match means Drop.
Verdict eval_rules(const std::vector<Rule>& rules, const Packet& p, UnknownVerdict unknown);
Verdict eval_simple(const std::vector<SimpleRule>& fw, Ip32 src, Ip32 dst);

/// Input interfaces with an assignment become source constraints; all other
/// interface matches become unknown.
std::vector<Rule> rewrite_ifaces(const std::vector<Rule>& rules, const Ipassmt& assmt);
Ruleset rewrite_ifaces(const Ruleset& rs, const Ipassmt& assmt);

/// Drops rules that cannot match the service packet in `state`, removes the
/// atoms it always satisfies.
std::vector<Rule> specialize(const std::vector<Rule>& rules, const Service& svc, ConnState state);

/// Removes the remaining undecidable atoms, over-approximating accepted
/// traffic (InDoubtAllow) or under-approximating it (InDoubtDeny).
std::vector<SimpleRule> closure(const std::vector<Rule>& rules, ClosureMode mode);

struct ServiceMatrix {
  std::vector<IpIntervalSet> classes;  ///< partition of the IPv4 space
  std::vector<Ip32> representatives;   ///< lowest member of each class
  std::set<std::pair<std::size_t, std::size_t>> edges;

  std::optional<std::size_t> class_of(Ip32 ip) const;
  bool has_edge(std::size_t from, std::size_t to) const { return edges.contains({from, to}); }
};

/// Access overview of `fw`, which must end in an unconditional rule.
ServiceMatrix service_matrix(const std::vector<SimpleRule>& fw);

struct AnalysisOptions {
  std::string chain = "FORWARD";
  Ipassmt ipassmt;
  Service service = Service::http();
  ClosureMode mode = ClosureMode::InDoubtAllow;
};

/// unfold -> rewrite_ifaces -> specialize -> closure.
std::vector<SimpleRule> simple_firewall(const Ruleset& rs, const AnalysisOptions& opts,
                                        ConnState state);

ServiceMatrix analyze(const Ruleset& rs, const AnalysisOptions& opts, ConnState state);

struct StatefulOverview {
  ServiceMatrix matrix;  ///< edges of the NEW pass
  /// Class pairs reachable by ESTABLISHED packets but not by NEW ones.
  std::set<std::pair<std::size_t, std::size_t>> answer_edges;
};

StatefulOverview stateful_overview(const Ruleset& rs, const AnalysisOptions& opts);

struct MatrixDiff {
  using SetEdge = std::pair<IpIntervalSet, IpIntervalSet>;
  std::vector<SetEdge> only_in_a;
  std::vector<SetEdge> only_in_b;
  bool empty() const { return only_in_a.empty() && only_in_b.empty(); }
};

/// Compares access semantics on the common refinement of both partitions.
MatrixDiff matrix_diff(const ServiceMatrix& a, const ServiceMatrix& b);

struct CompareReport {
  bool isomorphic = true;
  std::vector<std::string> mismatches;
};

/// Checks that the matrix and the policy describe the same access structure
/// once each entity is mapped to the class containing its addresses. Answer
/// edges are compared as unordered pairs and only when `answer_edges` is
/// given. Throws Error if binding sets overlap.
CompareReport matrix_policy_compare(
    const ServiceMatrix& m,
    const std::optional<std::set<std::pair<std::size_t, std::size_t>>>& answer_edges,
    const StatefulPolicy& sp, const std::map<EntityId, IpIntervalSet>& binding);

}  // namespace accessctl::analysis
