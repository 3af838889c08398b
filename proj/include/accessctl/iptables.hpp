// SPDX-License-Identifier: Apache-2.0
//
// Typed model of the iptables-save filter table.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "accessctl/ipspace.hpp"

namespace accessctl::iptables {

enum class Protocol { Any, Tcp, Udp, Icmp };

std::string to_string(Protocol p);

/// Connection-tracking states as a bit mask.
enum CtStateBits : std::uint8_t {
  kNew = 1,
  kEstablished = 2,
  kRelated = 4,
  kInvalid = 8,
  kAllStates = 15,
};

struct InIface {
  std::string name;
  bool negated = false;
  friend bool operator==(const InIface&, const InIface&) = default;
};
struct OutIface {
  std::string name;
  bool negated = false;
  friend bool operator==(const OutIface&, const OutIface&) = default;
};
struct SrcIp {
  IpIntervalSet set;
  friend bool operator==(const SrcIp&, const SrcIp&) = default;
};
struct DstIp {
  IpIntervalSet set;
  friend bool operator==(const DstIp&, const DstIp&) = default;
};
struct ProtocolMatch {
  Protocol proto = Protocol::Any;
  friend bool operator==(const ProtocolMatch&, const ProtocolMatch&) = default;
};
struct SrcPorts {
  PortSet ports;
  friend bool operator==(const SrcPorts&, const SrcPorts&) = default;
};
struct DstPorts {
  PortSet ports;
  friend bool operator==(const DstPorts&, const DstPorts&) = default;
};
/// multiport --ports: source or destination port in the set.
struct BothPorts {
  PortSet ports;
  friend bool operator==(const BothPorts&, const BothPorts&) = default;
};
struct CtState {
  std::uint8_t states = 0;
  friend bool operator==(const CtState&, const CtState&) = default;
};
/// A match the analysis cannot interpret; `text` is the verbatim option text.
struct UnknownMatch {
  std::string text;
  friend bool operator==(const UnknownMatch&, const UnknownMatch&) = default;
};

using MatchAtom = std::variant<InIface, OutIface, SrcIp, DstIp, ProtocolMatch, SrcPorts, DstPorts,
                               BothPorts, CtState, UnknownMatch>;

enum class TargetKind { Accept, Drop, Reject, Return, Jump, NoOp };

struct Target {
  TargetKind kind = TargetKind::NoOp;
  std::string chain;  ///< Jump only
  std::string options;  ///< verbatim target options, e.g. "--reject-with tcp-reset"

  static Target accept() { return {TargetKind::Accept, {}, {}}; }
  static Target drop() { return {TargetKind::Drop, {}, {}}; }
  static Target jump(std::string chain) { return {TargetKind::Jump, std::move(chain), {}}; }

  friend bool operator==(const Target&, const Target&) = default;
};

struct Rule {
  std::vector<MatchAtom> matches;  ///< conjunction
  Target target;
  friend bool operator==(const Rule&, const Rule&) = default;
};

enum class Policy { Accept, Drop };

struct Chain {
  std::string name;
  std::optional<Policy> policy;  ///< built-in chains only
  std::vector<Rule> rules;
  friend bool operator==(const Chain&, const Chain&) = default;
};

/// Filter table; chains keep their declaration order.
class Ruleset {
 public:
  /// INPUT, FORWARD and OUTPUT with policy ACCEPT and no rules.
  static Ruleset empty();

  const std::vector<Chain>& chains() const noexcept { return chains_; }
  const Chain* find(std::string_view name) const;
  Chain* find(std::string_view name);
  Chain& add_chain(std::string name, std::optional<Policy> policy);

  friend bool operator==(const Ruleset&, const Ruleset&) = default;

 private:
  std::vector<Chain> chains_;
};

bool is_builtin_chain(std::string_view name);

struct ParseDiagnostics {
  std::vector<std::string> warnings;
};

/// Parses iptables-save text. Only the filter table is modelled; other
/// tables are skipped with a warning. Throws ParseError with the 1-based line
/// number for malformed lines and Error for unresolved jump targets.
Ruleset parse_save(std::string_view text, ParseDiagnostics* diag = nullptr);

/// Parses the option part of a single rule, e.g. "-s 10.0.0.1 -j ACCEPT".
Rule parse_rule(std::string_view options);

/// Renders a filter table in iptables-save syntax. Rules are emitted as -A in
/// their final order; parse_save(render_save(rs)) == rs.
std::string render_save(const Ruleset& rs);
std::string render_rule(const std::string& chain, const Rule& rule);
std::string render_match(const MatchAtom& atom);

}  // namespace accessctl::iptables
