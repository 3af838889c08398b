// SPDX-License-Identifier: Apache-2.0
#include "accessctl/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <type_traits>

#include "accessctl/error.hpp"

namespace accessctl::analysis {

using namespace iptables;

namespace {

bool iface_matches(const std::string& pattern, const std::string& iface) {
  if (!pattern.empty() && pattern.back() == '+')
    return iface.starts_with(std::string_view(pattern).substr(0, pattern.size() - 1));
  return pattern == iface;
}

bool has_ports(Protocol p) { return p == Protocol::Tcp || p == Protocol::Udp; }

std::uint8_t state_bit(ConnState s) { return s == ConnState::New ? kNew : kEstablished; }

Verdict verdict_of(const Target& t) {
  switch (t.kind) {
    case TargetKind::Accept: return Verdict::Accept;
    case TargetKind::Drop:
    case TargetKind::Reject: return Verdict::Drop;
    default: throw Error("target has no verdict");
  }
}

Verdict policy_verdict(const Chain& c) {
  if (!c.policy) throw Error("chain " + c.name + " has no default policy");
  return *c.policy == Policy::Accept ? Verdict::Accept : Verdict::Drop;
}

bool rule_matches(const Rule& r, const Packet& p, UnknownVerdict unknown) {
  return std::all_of(r.matches.begin(), r.matches.end(),
                     [&](const MatchAtom& a) { return atom_matches(a, p, unknown); });
}

void inline_chain(const Ruleset& rs, const std::string& name, const std::vector<MatchAtom>& prefix,
                  std::vector<std::string>& stack, std::vector<Rule>& out) {
  if (std::find(stack.begin(), stack.end(), name) != stack.end())
    throw Error("jump cycle through chain " + name);
  const Chain* chain = rs.find(name);
  if (!chain) throw Error("unknown chain " + name);
  stack.push_back(name);
  for (std::size_t i = 0; i < chain->rules.size(); ++i) {
    const Rule& r = chain->rules[i];
    if (r.target.kind == TargetKind::Return) {
      if (i + 1 != chain->rules.size() || !r.matches.empty())
        throw Error("unsupported RETURN placement in chain " + name);
      break;
    }
    std::vector<MatchAtom> combined = prefix;
    combined.insert(combined.end(), r.matches.begin(), r.matches.end());
    if (r.target.kind == TargetKind::Jump) {
      inline_chain(rs, r.target.chain, combined, stack, out);
    } else {
      out.push_back(Rule{std::move(combined), r.target});
    }
  }
  stack.pop_back();
}

std::optional<Verdict> eval_chain(const Ruleset& rs, const Chain& chain, const Packet& p,
                                  UnknownVerdict unknown, int depth) {
  if (depth > 64) throw Error("jump nesting too deep (cycle?) at chain " + chain.name);
  for (const Rule& r : chain.rules) {
    if (!rule_matches(r, p, unknown)) continue;
    switch (r.target.kind) {
      case TargetKind::Accept: return Verdict::Accept;
      case TargetKind::Drop:
      case TargetKind::Reject: return Verdict::Drop;
      case TargetKind::Return: return std::nullopt;
      case TargetKind::NoOp: break;
      case TargetKind::Jump: {
        const Chain* callee = rs.find(r.target.chain);
        if (!callee) throw Error("unknown chain " + r.target.chain);
        if (auto v = eval_chain(rs, *callee, p, unknown, depth + 1)) return v;
        break;
      }
    }
  }
  return std::nullopt;
}

// Class partition over atoms: groups atoms whose rows and columns agree in
// every verdict table, repeating until stable.
struct Partition {
  std::vector<IpIntervalSet> classes;
  std::vector<std::size_t> rep_atom;  // atom index standing for each class
};

Partition merge_classes(const std::vector<IpIntervalSet>& atoms,
                        const std::vector<std::vector<std::vector<bool>>>& tables) {
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < atoms.size(); ++i) groups.push_back({i});
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::vector<bool>, std::size_t> by_sig;
    std::vector<std::vector<std::size_t>> next;
    for (const auto& g : groups) {
      std::vector<bool> sig;
      std::size_t a = g.front();
      for (const auto& t : tables) {
        for (const auto& h : groups) sig.push_back(t[a][h.front()]);
        for (const auto& h : groups) sig.push_back(t[h.front()][a]);
      }
      auto [it, inserted] = by_sig.try_emplace(std::move(sig), next.size());
      if (inserted) {
        next.push_back(g);
      } else {
        auto& target = next[it->second];
        target.insert(target.end(), g.begin(), g.end());
        changed = true;
      }
    }
    groups = std::move(next);
  }
  Partition out;
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    IpIntervalSet cls;
    for (std::size_t a : g) cls = cls | atoms[a];
    out.classes.push_back(std::move(cls));
    out.rep_atom.push_back(g.front());
  }
  // Order classes by lowest address.
  std::vector<std::size_t> order(out.classes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return *out.classes[x].lowest() < *out.classes[y].lowest();
  });
  Partition sorted;
  for (std::size_t i : order) {
    sorted.classes.push_back(std::move(out.classes[i]));
    sorted.rep_atom.push_back(out.rep_atom[i]);
  }
  return sorted;
}

std::vector<std::vector<bool>> verdict_table(const std::vector<SimpleRule>& fw,
                                             const std::vector<IpIntervalSet>& atoms) {
  std::vector<std::vector<bool>> t(atoms.size(), std::vector<bool>(atoms.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = 0; j < atoms.size(); ++j)
      t[i][j] = eval_simple(fw, Ip32{*atoms[i].lowest()}, Ip32{*atoms[j].lowest()}) ==
                Verdict::Accept;
  return t;
}

void collect_sets(const std::vector<SimpleRule>& fw, std::vector<IpIntervalSet>& sets) {
  for (const auto& r : fw) {
    sets.push_back(r.src);
    sets.push_back(r.dst);
  }
}

void require_final_catch_all(const std::vector<SimpleRule>& fw) {
  if (fw.empty() || !fw.back().src.is_full() || !fw.back().dst.is_full())
    throw Error("simple firewall must end in an unconditional rule");
}

}  // namespace

Ipassmt parse_ipassmt(std::string_view text) {
  Ipassmt out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    auto eq = line.find('=');
    auto fail = [&](const std::string& msg) {
      throw ParseError("ipassmt line " + std::to_string(lineno) + ": " + msg, lineno);
    };
    if (eq == std::string_view::npos) fail("expected 'iface = ip-expr'");
    std::string_view name = line.substr(0, eq);
    std::string_view expr = line.substr(eq + 1);
    auto strip = [](std::string_view s) {
      auto b = s.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) return std::string_view{};
      auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    name = strip(name);
    expr = strip(expr);
    if (name.empty() || name.find_first_of(" \t") != std::string_view::npos)
      fail("malformed interface name");
    if (out.contains(std::string(name))) fail("interface " + std::string(name) + " assigned twice");
    try {
      out.emplace(std::string(name), parse_ip_expr(expr));
    } catch (const ParseError& e) {
      fail(e.what());
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> overlapping_ifaces(const Ipassmt& assmt) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto a = assmt.begin(); a != assmt.end(); ++a)
    for (auto b = std::next(a); b != assmt.end(); ++b)
      if (a->second.overlaps(b->second)) out.emplace_back(a->first, b->first);
  return out;
}

Service Service::parse(std::string_view text) {
  if (text == "ssh") return ssh();
  if (text == "http") return http();
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ParseError("service must look like tcp:80", 0);
  std::string_view proto = text.substr(0, colon);
  std::string_view port = text.substr(colon + 1);
  Service svc;
  if (proto == "tcp") {
    svc.protocol = Protocol::Tcp;
  } else if (proto == "udp") {
    svc.protocol = Protocol::Udp;
  } else {
    throw ParseError("service protocol must be tcp or udp", 0);
  }
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), v);
  if (ec != std::errc{} || ptr != port.data() + port.size() || v > 65535)
    throw ParseError("malformed service port '" + std::string(port) + "'", colon + 1);
  svc.dport = static_cast<std::uint16_t>(v);
  return svc;
}

bool atom_matches(const MatchAtom& atom, const Packet& p, UnknownVerdict unknown) {
  const bool unknown_match = unknown == UnknownVerdict::Match;
  return std::visit(
      [&](const auto& a) -> bool {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, InIface>) {
          if (!p.in_iface) return unknown_match;
          return iface_matches(a.name, *p.in_iface) != a.negated;
        } else if constexpr (std::is_same_v<A, OutIface>) {
          if (!p.out_iface) return unknown_match;
          return iface_matches(a.name, *p.out_iface) != a.negated;
        } else if constexpr (std::is_same_v<A, SrcIp>) {
          return a.set.contains(p.src.value);
        } else if constexpr (std::is_same_v<A, DstIp>) {
          return a.set.contains(p.dst.value);
        } else if constexpr (std::is_same_v<A, ProtocolMatch>) {
          return a.proto == Protocol::Any || a.proto == p.protocol;
        } else if constexpr (std::is_same_v<A, SrcPorts>) {
          return has_ports(p.protocol) && a.ports.contains(p.sport);
        } else if constexpr (std::is_same_v<A, DstPorts>) {
          return has_ports(p.protocol) && a.ports.contains(p.dport);
        } else if constexpr (std::is_same_v<A, BothPorts>) {
          return has_ports(p.protocol) && (a.ports.contains(p.sport) || a.ports.contains(p.dport));
        } else if constexpr (std::is_same_v<A, CtState>) {
          return (a.states & state_bit(p.state)) != 0;
        } else {
          return unknown_match;
        }
      },
      atom);
}

std::vector<Rule> unfold(const Ruleset& rs, const std::string& start) {
  const Chain* chain = rs.find(start);
  if (!chain) throw Error("unknown chain " + start);
  Verdict policy = policy_verdict(*chain);
  std::vector<Rule> out;
  std::vector<std::string> stack;
  inline_chain(rs, start, {}, stack, out);
  out.push_back(Rule{{}, policy == Verdict::Accept ? Target::accept() : Target::drop()});
  return out;
}

Verdict eval_packet(const Ruleset& rs, const std::string& start, const Packet& p,
                    UnknownVerdict unknown) {
  const Chain* chain = rs.find(start);
  if (!chain) throw Error("unknown chain " + start);
  if (auto v = eval_chain(rs, *chain, p, unknown, 0)) return *v;
  return policy_verdict(*chain);
}

Verdict eval_rules(const std::vector<Rule>& rules, const Packet& p, UnknownVerdict unknown) {
  for (const Rule& r : rules) {
    if (r.target.kind == TargetKind::NoOp || !rule_matches(r, p, unknown)) continue;
    if (r.target.kind == TargetKind::Jump || r.target.kind == TargetKind::Return)
      throw Error("eval_rules expects an unfolded rule list");
    return verdict_of(r.target);
  }
  return Verdict::Drop;
}

Verdict eval_simple(const std::vector<SimpleRule>& fw, Ip32 src, Ip32 dst) {
  for (const auto& r : fw)
    if (r.src.contains(src.value) && r.dst.contains(dst.value)) return r.action;
  return Verdict::Drop;
}

std::vector<Rule> rewrite_ifaces(const std::vector<Rule>& rules, const Ipassmt& assmt) {
  std::vector<Rule> out;
  out.reserve(rules.size());
  for (const Rule& r : rules) {
    Rule nr{{}, r.target};
    for (const MatchAtom& m : r.matches) {
      if (const auto* in = std::get_if<InIface>(&m)) {
        if (auto it = assmt.find(in->name); it != assmt.end()) {
          nr.matches.emplace_back(SrcIp{in->negated ? it->second.complement() : it->second});
        } else {
          nr.matches.emplace_back(UnknownMatch{render_match(m)});
        }
      } else if (std::holds_alternative<OutIface>(m)) {
        nr.matches.emplace_back(UnknownMatch{render_match(m)});
      } else {
        nr.matches.push_back(m);
      }
    }
    out.push_back(std::move(nr));
  }
  return out;
}

Ruleset rewrite_ifaces(const Ruleset& rs, const Ipassmt& assmt) {
  Ruleset out;
  for (const Chain& c : rs.chains()) out.add_chain(c.name, c.policy).rules = rewrite_ifaces(c.rules, assmt);
  return out;
}

std::vector<Rule> specialize(const std::vector<Rule>& rules, const Service& svc, ConnState state) {
  std::vector<Rule> out;
  for (const Rule& r : rules) {
    Rule nr{{}, r.target};
    bool possible = true;
    for (const MatchAtom& m : r.matches) {
      std::optional<bool> decided;  // set when the atom is fully determined by the service
      if (const auto* pm = std::get_if<ProtocolMatch>(&m)) {
        decided = pm->proto == Protocol::Any || pm->proto == svc.protocol;
      } else if (const auto* dp = std::get_if<DstPorts>(&m)) {
        decided = has_ports(svc.protocol) && dp->ports.contains(svc.dport);
      } else if (const auto* sp = std::get_if<SrcPorts>(&m)) {
        decided = has_ports(svc.protocol) && sp->ports.contains(kClientPort);
      } else if (const auto* bp = std::get_if<BothPorts>(&m)) {
        decided = has_ports(svc.protocol) &&
                  (bp->ports.contains(kClientPort) || bp->ports.contains(svc.dport));
      } else if (const auto* cs = std::get_if<CtState>(&m)) {
        decided = (cs->states & state_bit(state)) != 0;
      }
      if (!decided) {
        nr.matches.push_back(m);
      } else if (!*decided) {
        possible = false;
        break;
      }
    }
    if (possible) out.push_back(std::move(nr));
  }
  return out;
}

std::vector<SimpleRule> closure(const std::vector<Rule>& rules, ClosureMode mode) {
  std::vector<SimpleRule> out;
  for (const Rule& r : rules) {
    if (r.target.kind == TargetKind::NoOp) continue;
    if (r.target.kind == TargetKind::Jump || r.target.kind == TargetKind::Return)
      throw Error("closure expects an unfolded rule list");
    const Verdict action = verdict_of(r.target);
    SimpleRule sr;
    sr.action = action;
    bool has_unknown = false;
    for (const MatchAtom& m : r.matches) {
      if (const auto* s = std::get_if<SrcIp>(&m)) {
        sr.src = sr.src & s->set;
      } else if (const auto* d = std::get_if<DstIp>(&m)) {
        sr.dst = sr.dst & d->set;
      } else {
        has_unknown = true;
      }
    }
    // An unknown atom widens the rule when that errs towards the mode's
    // verdict, otherwise the rule cannot be relied upon and is removed.
    const Verdict widened = mode == ClosureMode::InDoubtAllow ? Verdict::Accept : Verdict::Drop;
    if (has_unknown && action != widened) continue;
    if (sr.src.empty() || sr.dst.empty()) continue;
    out.push_back(std::move(sr));
  }
  return out;
}

std::optional<std::size_t> ServiceMatrix::class_of(Ip32 ip) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i].contains(ip.value)) return i;
  return std::nullopt;
}

ServiceMatrix service_matrix(const std::vector<SimpleRule>& fw) {
  require_final_catch_all(fw);
  std::vector<IpIntervalSet> sets;
  collect_sets(fw, sets);
  auto atoms = atomize<std::uint32_t>(sets);
  auto table = verdict_table(fw, atoms);
  Partition part = merge_classes(atoms, {table});
  ServiceMatrix m;
  m.classes = part.classes;
  for (std::size_t i = 0; i < part.classes.size(); ++i) {
    m.representatives.push_back(Ip32{*part.classes[i].lowest()});
    for (std::size_t j = 0; j < part.classes.size(); ++j)
      if (table[part.rep_atom[i]][part.rep_atom[j]]) m.edges.emplace(i, j);
  }
  return m;
}

std::vector<SimpleRule> simple_firewall(const Ruleset& rs, const AnalysisOptions& opts,
                                        ConnState state) {
  auto rules = unfold(rs, opts.chain);
  rules = rewrite_ifaces(rules, opts.ipassmt);
  rules = specialize(rules, opts.service, state);
  return closure(rules, opts.mode);
}

ServiceMatrix analyze(const Ruleset& rs, const AnalysisOptions& opts, ConnState state) {
  return service_matrix(simple_firewall(rs, opts, state));
}

StatefulOverview stateful_overview(const Ruleset& rs, const AnalysisOptions& opts) {
  auto fw_new = simple_firewall(rs, opts, ConnState::New);
  auto fw_est = simple_firewall(rs, opts, ConnState::Established);
  require_final_catch_all(fw_new);
  require_final_catch_all(fw_est);
  std::vector<IpIntervalSet> sets;
  collect_sets(fw_new, sets);
  collect_sets(fw_est, sets);
  auto atoms = atomize<std::uint32_t>(sets);
  auto t_new = verdict_table(fw_new, atoms);
  auto t_est = verdict_table(fw_est, atoms);
  Partition part = merge_classes(atoms, {t_new, t_est});
  StatefulOverview out;
  out.matrix.classes = part.classes;
  for (std::size_t i = 0; i < part.classes.size(); ++i) {
    out.matrix.representatives.push_back(Ip32{*part.classes[i].lowest()});
    for (std::size_t j = 0; j < part.classes.size(); ++j) {
      bool n = t_new[part.rep_atom[i]][part.rep_atom[j]];
      bool e = t_est[part.rep_atom[i]][part.rep_atom[j]];
      if (n) out.matrix.edges.emplace(i, j);
      if (e && !n) out.answer_edges.emplace(i, j);
    }
  }
  return out;
}

MatrixDiff matrix_diff(const ServiceMatrix& a, const ServiceMatrix& b) {
  std::vector<IpIntervalSet> sets(a.classes);
  sets.insert(sets.end(), b.classes.begin(), b.classes.end());
  auto atoms = atomize<std::uint32_t>(sets);
  std::vector<std::size_t> in_a;
  std::vector<std::size_t> in_b;
  for (const auto& atom : atoms) {
    Ip32 rep{*atom.lowest()};
    auto ca = a.class_of(rep);
    auto cb = b.class_of(rep);
    if (!ca || !cb) throw Error("matrix classes do not cover the address space");
    in_a.push_back(*ca);
    in_b.push_back(*cb);
  }
  MatrixDiff diff;
  for (std::size_t x = 0; x < atoms.size(); ++x) {
    for (std::size_t y = 0; y < atoms.size(); ++y) {
      bool ea = a.has_edge(in_a[x], in_a[y]);
      bool eb = b.has_edge(in_b[x], in_b[y]);
      if (ea && !eb) diff.only_in_a.emplace_back(atoms[x], atoms[y]);
      if (eb && !ea) diff.only_in_b.emplace_back(atoms[x], atoms[y]);
    }
  }
  return diff;
}

CompareReport matrix_policy_compare(
    const ServiceMatrix& m,
    const std::optional<std::set<std::pair<std::size_t, std::size_t>>>& answer_edges,
    const StatefulPolicy& sp, const std::map<EntityId, IpIntervalSet>& binding) {
  for (auto a = binding.begin(); a != binding.end(); ++a)
    for (auto b = std::next(a); b != binding.end(); ++b)
      if (a->second.overlaps(b->second))
        throw Error("bindings of " + a->first.str() + " and " + b->first.str() + " overlap");

  CompareReport report;
  auto mismatch = [&](std::string msg) { report.mismatches.push_back(std::move(msg)); };
  auto label = [&](std::size_t c) { return render_label(m.classes[c]); };

  std::map<EntityId, std::size_t> cls;
  std::map<std::size_t, EntityId> owner;
  for (const EntityId& e : sp.base().nodes()) {
    auto it = binding.find(e);
    if (it == binding.end() || it->second.empty()) {
      mismatch("entity " + e.str() + " has no address binding");
      continue;
    }
    auto c = m.class_of(Ip32{*it->second.lowest()});
    if (!c || !it->second.subset_of(m.classes[*c])) {
      mismatch("entity " + e.str() + " straddles several firewall classes");
      continue;
    }
    if (auto o = owner.find(*c); o != owner.end()) {
      mismatch("entities " + o->second.str() + " and " + e.str() + " fall into the same class " +
               label(*c));
      continue;
    }
    cls.emplace(e, *c);
    owner.emplace(*c, e);
  }

  for (const auto& [from, to] : m.edges) {
    if (!owner.contains(from) || !owner.contains(to)) {
      if (!owner.contains(from) && !owner.contains(to))
        mismatch("firewall permits " + label(from) + " -> " + label(to) +
                 " between addresses outside the policy");
      else if (!owner.contains(from))
        mismatch("firewall permits " + label(from) + " -> " + owner.at(to).str() +
                 " from addresses outside the policy");
      else
        mismatch("firewall permits " + owner.at(from).str() + " -> " + label(to) +
                 " to addresses outside the policy");
    }
  }

  for (const auto& [s, cs] : cls) {
    for (const auto& [d, cd] : cls) {
      bool in_policy = sp.base().has_edge(s, d);
      bool in_fw = m.has_edge(cs, cd);
      if (in_policy && !in_fw) mismatch("policy edge " + to_string(Edge{s, d}) + " is blocked by the firewall");
      if (!in_policy && in_fw) mismatch("firewall permits " + to_string(Edge{s, d}) + " which the policy forbids");
    }
  }

  if (answer_edges) {
    auto unordered = [](std::size_t x, std::size_t y) {
      return std::pair<std::size_t, std::size_t>{std::min(x, y), std::max(x, y)};
    };
    std::set<std::pair<std::size_t, std::size_t>> fw_pairs;
    for (const auto& [x, y] : *answer_edges) fw_pairs.insert(unordered(x, y));
    std::set<std::pair<std::size_t, std::size_t>> policy_pairs;
    for (const auto& [s, d] : sp.answer_edges()) {
      if (!cls.contains(s) || !cls.contains(d)) continue;
      auto pr = unordered(cls.at(s), cls.at(d));
      policy_pairs.insert(pr);
      if (!fw_pairs.contains(pr))
        mismatch("stateful flow " + to_string(Edge{s, d}) + " has no reply path in the firewall");
    }
    for (const auto& pr : fw_pairs) {
      if (policy_pairs.contains(pr)) continue;
      auto name = [&](std::size_t c) {
        auto o = owner.find(c);
        return o == owner.end() ? label(c) : o->second.str();
      };
      mismatch("firewall lets replies flow between " + name(pr.first) + " and " + name(pr.second) +
               " which the policy does not make stateful");
    }
  }

  report.isomorphic = report.mismatches.empty();
  return report;
}

}  // namespace accessctl::analysis
