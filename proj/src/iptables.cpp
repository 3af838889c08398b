// SPDX-License-Identifier: Apache-2.0
#include "accessctl/iptables.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>

#include "accessctl/error.hpp"

namespace accessctl::iptables {
namespace {

constexpr std::string_view kMultiNegationError =
    "negation is not allowed with multiple source or destination IP addresses";

// Splits on blanks; double-quoted sections stay inside one token (quotes kept).
std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool have = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cur += c;
      have = true;
    } else if (!quoted && (c == ' ' || c == '\t' || c == '\r')) {
      if (have) out.push_back(std::move(cur));
      cur.clear();
      have = false;
    } else {
      cur += c;
      have = true;
    }
  }
  if (quoted) throw ParseError("unterminated quote", 0);
  if (have) out.push_back(std::move(cur));
  return out;
}

bool is_option_start(std::string_view tok) {
  static const std::set<std::string_view> kTop = {
      "-s", "--source",       "-d", "--destination", "-i", "--in-interface",
      "-o", "--out-interface", "-p", "--protocol",    "-m", "--match",
      "-j", "--jump",         "-g", "--goto"};
  return kTop.contains(tok);
}

std::string join(const std::vector<std::string>& toks, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (!out.empty()) out += ' ';
    out += toks[i];
  }
  return out;
}

std::optional<std::uint8_t> parse_states(std::string_view text) {
  std::uint8_t bits = 0;
  std::size_t pos = 0;
  while (true) {
    auto comma = text.find(',', pos);
    auto name = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
    if (name == "NEW") {
      bits |= kNew;
    } else if (name == "ESTABLISHED") {
      bits |= kEstablished;
    } else if (name == "RELATED") {
      bits |= kRelated;
    } else if (name == "INVALID") {
      bits |= kInvalid;
    } else {
      return std::nullopt;
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return bits;
}

std::string render_states(std::uint8_t bits) {
  static constexpr std::array<std::pair<std::uint8_t, std::string_view>, 4> kNames{{
      {kNew, "NEW"}, {kRelated, "RELATED"}, {kEstablished, "ESTABLISHED"}, {kInvalid, "INVALID"}}};
  std::string out;
  for (const auto& [bit, name] : kNames) {
    if (bits & bit) {
      if (!out.empty()) out += ',';
      out += name;
    }
  }
  return out;
}

std::optional<Protocol> parse_protocol(std::string_view p) {
  if (p == "tcp" || p == "6") return Protocol::Tcp;
  if (p == "udp" || p == "17") return Protocol::Udp;
  if (p == "icmp" || p == "1") return Protocol::Icmp;
  if (p == "all" || p == "0") return Protocol::Any;
  return std::nullopt;
}

// Builds a Rule from the tokens following "-A CHAIN".
class RuleParser {
 public:
  explicit RuleParser(std::vector<std::string> toks) : toks_(std::move(toks)) {}

  Rule parse() {
    Rule rule;
    bool negate = false;
    bool any_negated_addr = false;
    bool any_multi_addr = false;
    for (i_ = 0; i_ < toks_.size(); ++i_) {
      const std::string& tok = toks_[i_];
      if (tok == "!") {
        if (negate) fail("double negation");
        negate = true;
        continue;
      }
      const bool neg = std::exchange(negate, false);
      if (tok == "-s" || tok == "--source" || tok == "-d" || tok == "--destination") {
        const std::string& val = value();
        if (neg) any_negated_addr = true;
        if (val.find(',') != std::string::npos) any_multi_addr = true;
        IpIntervalSet set = parse_ip(val);
        if (neg) set = set.complement();
        if (tok[1] == 's' || tok == "--source") {
          rule.matches.emplace_back(SrcIp{std::move(set)});
        } else {
          rule.matches.emplace_back(DstIp{std::move(set)});
        }
      } else if (tok == "-i" || tok == "--in-interface") {
        rule.matches.emplace_back(InIface{value(), neg});
      } else if (tok == "-o" || tok == "--out-interface") {
        rule.matches.emplace_back(OutIface{value(), neg});
      } else if (tok == "-p" || tok == "--protocol") {
        const std::string& val = value();
        auto proto = parse_protocol(val);
        if (neg || !proto) {
          rule.matches.emplace_back(UnknownMatch{(neg ? "! " : "") + tok + " " + val});
        } else {
          rule.matches.emplace_back(ProtocolMatch{*proto});
        }
      } else if (tok == "-m" || tok == "--match") {
        if (neg) fail("negated module");
        const std::string& mod = value();
        static const std::set<std::string_view> kKnown = {"tcp",      "udp",       "state",
                                                          "conntrack", "multiport", "iprange"};
        if (kKnown.contains(mod)) continue;
        // Unknown module: swallow its options verbatim up to the next
        // top-level option.
        std::size_t start = i_ - 1;
        while (i_ + 1 < toks_.size() && !is_option_start(toks_[i_ + 1]) &&
               !(toks_[i_ + 1] == "!" && i_ + 2 < toks_.size() && is_option_start(toks_[i_ + 2])))
          ++i_;
        rule.matches.emplace_back(UnknownMatch{join(toks_, start, i_ + 1)});
      } else if (tok == "--dport" || tok == "--destination-port" || tok == "--dports" ||
                 tok == "--destination-ports") {
        PortSet ports = parse_ports(value());
        rule.matches.emplace_back(DstPorts{neg ? ports.complement() : ports});
      } else if (tok == "--sport" || tok == "--source-port" || tok == "--sports" ||
                 tok == "--source-ports") {
        PortSet ports = parse_ports(value());
        rule.matches.emplace_back(SrcPorts{neg ? ports.complement() : ports});
      } else if (tok == "--ports") {
        const std::string& val = value();
        if (neg) {
          rule.matches.emplace_back(UnknownMatch{"! --ports " + val});
        } else {
          rule.matches.emplace_back(BothPorts{parse_ports(val)});
        }
      } else if (tok == "--state" || tok == "--ctstate") {
        const std::string& val = value();
        auto bits = parse_states(val);
        if (!bits) {
          rule.matches.emplace_back(UnknownMatch{(neg ? "! " : "") + tok + " " + val});
        } else {
          rule.matches.emplace_back(
              CtState{static_cast<std::uint8_t>(neg ? (~*bits & kAllStates) : *bits)});
        }
      } else if (tok == "--src-range" || tok == "--dst-range") {
        const std::string& val = value();
        if (val.find('-') == std::string::npos || val.find(',') != std::string::npos)
          fail("iprange expects a single a-b range");
        IpIntervalSet set = parse_ip(val);
        if (neg) set = set.complement();
        if (tok == "--src-range") {
          rule.matches.emplace_back(SrcIp{std::move(set)});
        } else {
          rule.matches.emplace_back(DstIp{std::move(set)});
        }
      } else if (tok == "-j" || tok == "--jump") {
        if (neg) fail("negated target");
        rule.target = parse_target();
      } else if (tok == "-g" || tok == "--goto") {
        fail("GOTO targets are not supported");
      } else if (tok.starts_with("--")) {
        // Option of a known module that the model does not interpret.
        std::size_t start = i_;
        while (i_ + 1 < toks_.size() && !toks_[i_ + 1].starts_with("-") && toks_[i_ + 1] != "!")
          ++i_;
        rule.matches.emplace_back(UnknownMatch{(neg ? "! " : "") + join(toks_, start, i_ + 1)});
      } else {
        fail("unexpected token '" + tok + "'");
      }
    }
    if (any_negated_addr && any_multi_addr) fail(std::string(kMultiNegationError));
    return rule;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, 0); }

  const std::string& value() {
    if (i_ + 1 >= toks_.size()) fail("option '" + toks_[i_] + "' requires an argument");
    return toks_[++i_];
  }

  IpIntervalSet parse_ip(const std::string& text) const {
    try {
      return parse_ip_expr(text);
    } catch (const ParseError& e) {
      fail(e.what());
    }
  }

  PortSet parse_ports(const std::string& text) const {
    try {
      return parse_port_expr(text);
    } catch (const ParseError& e) {
      fail(e.what());
    }
  }

  Target parse_target() {
    const std::string& name = value();
    Target t;
    if (name == "ACCEPT") {
      t.kind = TargetKind::Accept;
    } else if (name == "DROP") {
      t.kind = TargetKind::Drop;
    } else if (name == "REJECT") {
      t.kind = TargetKind::Reject;
    } else if (name == "RETURN") {
      t.kind = TargetKind::Return;
    } else {
      t.kind = TargetKind::Jump;
      t.chain = name;
    }
    std::size_t start = i_ + 1;
    while (i_ + 1 < toks_.size() && !is_option_start(toks_[i_ + 1]) && toks_[i_ + 1] != "!") ++i_;
    t.options = join(toks_, start, i_ + 1);
    if (!t.options.empty() && t.kind != TargetKind::Reject)
      fail("unsupported options for target " + name + ": " + t.options);
    return t;
  }

  std::vector<std::string> toks_;
  std::size_t i_ = 0;
};

std::string policy_name(const std::optional<Policy>& p) {
  if (!p) return "-";
  return *p == Policy::Accept ? "ACCEPT" : "DROP";
}

}  // namespace

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::Any: return "all";
    case Protocol::Tcp: return "tcp";
    case Protocol::Udp: return "udp";
    case Protocol::Icmp: return "icmp";
  }
  return "?";
}

bool is_builtin_chain(std::string_view name) {
  return name == "INPUT" || name == "FORWARD" || name == "OUTPUT";
}

Ruleset Ruleset::empty() {
  Ruleset rs;
  for (const char* name : {"INPUT", "FORWARD", "OUTPUT"}) rs.add_chain(name, Policy::Accept);
  return rs;
}

const Chain* Ruleset::find(std::string_view name) const {
  auto it = std::find_if(chains_.begin(), chains_.end(),
                         [&](const Chain& c) { return c.name == name; });
  return it == chains_.end() ? nullptr : &*it;
}

Chain* Ruleset::find(std::string_view name) {
  return const_cast<Chain*>(std::as_const(*this).find(name));
}

Chain& Ruleset::add_chain(std::string name, std::optional<Policy> policy) {
  if (find(name)) throw Error("chain '" + name + "' already exists");
  chains_.push_back(Chain{std::move(name), policy, {}});
  return chains_.back();
}

Rule parse_rule(std::string_view options) { return RuleParser(tokenize(options)).parse(); }

Ruleset parse_save(std::string_view text, ParseDiagnostics* diag) {
  Ruleset rs;
  enum class Section { None, Filter, Other } section = Section::None;
  bool seen_filter = false;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  auto warn = [&](std::string msg) {
    if (diag) diag->warnings.push_back("line " + std::to_string(lineno) + ": " + std::move(msg));
  };
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    auto fail = [&](const std::string& msg) {
      throw ParseError("line " + std::to_string(lineno) + ": " + msg, lineno);
    };
    std::vector<std::string> toks;
    try {
      toks = tokenize(line);
    } catch (const ParseError& e) {
      fail(e.what());
    }
    if (toks.empty() || toks[0].starts_with("#")) continue;
    const std::string& head = toks[0];

    if (head.starts_with("*")) {
      if (section != Section::None) fail("table started before COMMIT");
      if (head == "*filter") {
        if (seen_filter) fail("duplicate *filter table");
        seen_filter = true;
        section = Section::Filter;
      } else {
        section = Section::Other;
        warn("skipping table " + head.substr(1));
      }
      continue;
    }
    if (head == "COMMIT") {
      if (section == Section::None) fail("COMMIT outside of a table");
      section = Section::None;
      continue;
    }
    if (section == Section::Other) continue;
    if (section == Section::None) fail("statement outside of a table");

    if (head.starts_with(":")) {
      if (toks.size() < 2) fail("malformed chain declaration");
      std::string name = head.substr(1);
      std::optional<Policy> policy;
      if (toks[1] == "ACCEPT") {
        policy = Policy::Accept;
      } else if (toks[1] == "DROP") {
        policy = Policy::Drop;
      } else if (toks[1] != "-") {
        fail("unsupported chain policy '" + toks[1] + "'");
      }
      if (is_builtin_chain(name) != policy.has_value())
        fail(is_builtin_chain(name) ? "built-in chain " + name + " needs a policy"
                                    : "user chain " + name + " cannot have a policy");
      if (rs.find(name)) fail("chain " + name + " declared twice");
      rs.add_chain(std::move(name), policy);
      continue;
    }
    if (head == "-N") {
      if (toks.size() != 2) fail("malformed -N");
      if (rs.find(toks[1])) fail("chain " + toks[1] + " declared twice");
      rs.add_chain(toks[1], std::nullopt);
      continue;
    }
    if (head == "-P") {
      if (toks.size() != 3) fail("malformed -P");
      Chain* c = rs.find(toks[1]);
      if (!c || !c->policy) fail("-P on unknown or user chain " + toks[1]);
      if (toks[2] == "ACCEPT") {
        c->policy = Policy::Accept;
      } else if (toks[2] == "DROP") {
        c->policy = Policy::Drop;
      } else {
        fail("unsupported chain policy '" + toks[2] + "'");
      }
      continue;
    }
    if (head == "-A" || head == "-I") {
      if (toks.size() < 2) fail("missing chain name");
      Chain* c = rs.find(toks[1]);
      if (!c) fail("unknown chain " + toks[1]);
      std::size_t first_opt = 2;
      std::optional<std::size_t> index;
      if (head == "-I" && toks.size() > 2 && !toks[2].empty() &&
          std::all_of(toks[2].begin(), toks[2].end(), ::isdigit)) {
        index = std::stoul(toks[2]);
        first_opt = 3;
        if (*index == 0 || *index > c->rules.size() + 1) fail("insert position out of range");
      }
      Rule rule;
      try {
        rule = RuleParser(std::vector<std::string>(toks.begin() + first_opt, toks.end())).parse();
      } catch (const ParseError& e) {
        fail(e.what());
      }
      if (head == "-A") {
        c->rules.push_back(std::move(rule));
      } else {
        c->rules.insert(c->rules.begin() + static_cast<std::ptrdiff_t>(index.value_or(1) - 1),
                        std::move(rule));
      }
      continue;
    }
    fail("unrecognized statement '" + head + "'");
  }
  if (section != Section::None) throw ParseError("missing COMMIT at end of input", lineno);
  if (!seen_filter) throw ParseError("no *filter table in input", lineno);

  for (const auto& c : rs.chains()) {
    for (const auto& r : c.rules) {
      if (r.target.kind == TargetKind::Jump && !rs.find(r.target.chain))
        throw Error("chain " + c.name + ": unsupported target or unknown chain '" + r.target.chain +
                    "'");
      if (r.target.kind == TargetKind::Jump && is_builtin_chain(r.target.chain))
        throw Error("chain " + c.name + ": jump to built-in chain " + r.target.chain);
    }
  }
  return rs;
}

namespace {

// Address atoms render without "! -s" when another atom of the rule needs a
// comma list, since iptables rejects that combination.
std::string render_addr(const IpIntervalSet& set, bool source, bool bang_ok) {
  const char* flag = source ? "-s " : "-d ";
  const char* range = source ? "--src-range " : "--dst-range ";
  auto ivs = set.intervals();
  auto range_text = [](const Interval<std::uint32_t>& iv) {
    return Ip32{iv.lo}.to_string() + "-" + Ip32{iv.hi}.to_string();
  };
  if (ivs.size() == 1) {
    if (to_cidrs(set).size() == 1) return flag + render_cidr_list(set);
    return std::string("-m iprange ") + range + range_text(ivs[0]);
  }
  IpIntervalSet comp = set.complement();
  if (comp.intervals().size() == 1) {
    if (bang_ok && to_cidrs(comp).size() == 1) return std::string("! ") + flag + render_cidr_list(comp);
    return std::string("-m iprange ! ") + range + range_text(comp.intervals()[0]);
  }
  return flag + render_cidr_list(set);
}

bool needs_list(const IpIntervalSet& set) {
  return set.intervals().size() != 1 && set.complement().intervals().size() != 1;
}

// Port options are always scoped by an explicit module so that a preceding
// unknown module cannot absorb them on re-parse. `proto` is the protocol
// matched earlier in the rule, if any.
std::string render_atom(const MatchAtom& atom, bool bang_ok, std::optional<Protocol> proto) {
  auto port_module = [&](const PortSet& ports) -> std::string {
    bool plain = ports.intervals().size() == 1 && (proto == Protocol::Tcp || proto == Protocol::Udp);
    return plain ? "-m " + to_string(*proto) + " --" : "-m multiport --";
  };
  return std::visit(
      [&](const auto& a) -> std::string {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, InIface>) {
          return (a.negated ? "! -i " : "-i ") + a.name;
        } else if constexpr (std::is_same_v<A, OutIface>) {
          return (a.negated ? "! -o " : "-o ") + a.name;
        } else if constexpr (std::is_same_v<A, SrcIp>) {
          return render_addr(a.set, true, bang_ok);
        } else if constexpr (std::is_same_v<A, DstIp>) {
          return render_addr(a.set, false, bang_ok);
        } else if constexpr (std::is_same_v<A, ProtocolMatch>) {
          return "-p " + to_string(a.proto);
        } else if constexpr (std::is_same_v<A, SrcPorts>) {
          auto m = port_module(a.ports);
          return m + (m.starts_with("-m multiport") ? "sports " : "sport ") + render_ports(a.ports);
        } else if constexpr (std::is_same_v<A, DstPorts>) {
          auto m = port_module(a.ports);
          return m + (m.starts_with("-m multiport") ? "dports " : "dport ") + render_ports(a.ports);
        } else if constexpr (std::is_same_v<A, BothPorts>) {
          return "-m multiport --ports " + render_ports(a.ports);
        } else if constexpr (std::is_same_v<A, CtState>) {
          if (a.states == 0) return "-m conntrack ! --ctstate " + render_states(kAllStates);
          return "-m conntrack --ctstate " + render_states(a.states);
        } else {
          return a.text;
        }
      },
      atom);
}

}  // namespace

std::string render_match(const MatchAtom& atom) { return render_atom(atom, true, std::nullopt); }

std::string render_rule(const std::string& chain, const Rule& rule) {
  bool bang_ok = true;
  for (const auto& m : rule.matches) {
    if (const auto* s = std::get_if<SrcIp>(&m); s && needs_list(s->set)) bang_ok = false;
    if (const auto* d = std::get_if<DstIp>(&m); d && needs_list(d->set)) bang_ok = false;
  }
  std::string out = "-A " + chain;
  std::optional<Protocol> proto;
  for (const auto& m : rule.matches) {
    out += " " + render_atom(m, bang_ok, proto);
    if (const auto* p = std::get_if<ProtocolMatch>(&m)) proto = p->proto;
  }
  switch (rule.target.kind) {
    case TargetKind::Accept: out += " -j ACCEPT"; break;
    case TargetKind::Drop: out += " -j DROP"; break;
    case TargetKind::Reject: out += " -j REJECT"; break;
    case TargetKind::Return: out += " -j RETURN"; break;
    case TargetKind::Jump: out += " -j " + rule.target.chain; break;
    case TargetKind::NoOp: break;
  }
  if (!rule.target.options.empty()) out += " " + rule.target.options;
  return out;
}

std::string render_save(const Ruleset& rs) {
  std::ostringstream out;
  out << "*filter\n";
  for (const auto& c : rs.chains()) out << ':' << c.name << ' ' << policy_name(c.policy) << " [0:0]\n";
  for (const auto& c : rs.chains())
    for (const auto& r : c.rules) out << render_rule(c.name, r) << '\n';
  out << "COMMIT\n";
  return out.str();
}

}  // namespace accessctl::iptables
