// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "accessctl/analysis.hpp"
#include "accessctl/error.hpp"
#include "accessctl/iptables.hpp"
#include "accessctl/scenario.hpp"
#include "accessctl/serializers.hpp"

namespace accessctl::cli {
namespace {

namespace an = analysis;

std::string read_input(const std::string& path) {
  std::ostringstream buf;
  if (path == "-") {
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

// Writes DOT to `path` when given, otherwise after a blank line on `out`.
void emit_dot(const std::string& path, const std::string& dot, std::ostream& out) {
  if (!path.empty()) {
    write_file(path, dot);
  } else {
    out << "\n" << dot;
  }
}

struct AnalysisFlags {
  std::string service = "tcp:80";
  std::string state = "new";
  std::string ipassmt;
  std::string closure = "allow";
  std::string chain = "FORWARD";
  std::string dot;

  void attach(CLI::App* cmd, const std::string& default_state) {
    state = default_state;
    cmd->add_option("--service", service, "service as proto:port")->capture_default_str();
    cmd->add_option("--state", state, "connection state")
        ->check(CLI::IsMember({"new", "established", "stateful"}))
        ->capture_default_str();
    cmd->add_option("--ipassmt", ipassmt, "interface to address assignment file");
    cmd->add_option("--closure", closure, "treatment of undecidable matches")
        ->check(CLI::IsMember({"allow", "deny"}))
        ->capture_default_str();
    cmd->add_option("--chain", chain, "chain to analyze")->capture_default_str();
    cmd->add_option("--dot", dot, "write the DOT graph to this file");
  }

  an::AnalysisOptions options(std::ostream& err) const {
    an::AnalysisOptions o;
    o.chain = chain;
    o.service = an::Service::parse(service);
    o.mode = closure == "deny" ? an::ClosureMode::InDoubtDeny : an::ClosureMode::InDoubtAllow;
    if (!ipassmt.empty()) {
      o.ipassmt = an::parse_ipassmt(read_input(ipassmt));
      for (const auto& [a, b] : an::overlapping_ifaces(o.ipassmt))
        err << "warning: ipassmt ranges of " << a << " and " << b << " overlap\n";
    }
    return o;
  }
};

iptables::Ruleset load_ruleset(const std::string& path, std::ostream& err) {
  iptables::ParseDiagnostics diag;
  auto rs = iptables::parse_save(read_input(path), &diag);
  for (const auto& w : diag.warnings) err << "warning: " << path << ": " << w << "\n";
  return rs;
}

struct Outcome {
  an::ServiceMatrix matrix;
  std::optional<std::set<std::pair<std::size_t, std::size_t>>> answers;
};

Outcome run_analysis(const iptables::Ruleset& rs, const AnalysisFlags& flags, std::ostream& err) {
  auto opts = flags.options(err);
  if (flags.state == "stateful") {
    auto ov = an::stateful_overview(rs, opts);
    return {std::move(ov.matrix), std::move(ov.answer_edges)};
  }
  auto state = flags.state == "established" ? an::ConnState::Established : an::ConnState::New;
  return {an::analyze(rs, opts, state), std::nullopt};
}

void print_matrix(const Outcome& o, std::ostream& out) {
  const auto& m = o.matrix;
  out << "# classes\n";
  for (std::size_t i = 0; i < m.classes.size(); ++i)
    out << "c" << i << " " << render_label(m.classes[i]) << "\n";
  out << "# edges\n";
  for (const auto& [a, b] : m.edges) out << "c" << a << " -> c" << b << "\n";
  if (o.answers) {
    out << "# answer edges\n";
    for (const auto& [a, b] : *o.answers) out << "c" << a << " -> c" << b << "\n";
  }
}

void print_violations(const std::set<Violation>& vs, const Scenario& sc, std::ostream& out) {
  for (const auto& v : vs)
    out << "violation: invariant " << v.invariant_index << " ("
        << to_string(sc.invariants[v.invariant_index - 1].kind()) << "): " << to_string(v.edge)
        << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthesize network access policies and analyze iptables rulesets", "accessctl"};
  app.require_subcommand(1);

  std::string scenario_path, policy_path, ruleset_path, ruleset_b, dot_path;

  auto* synth = app.add_subcommand("synth", "compute the maximal policy of a scenario");
  synth->add_option("scenario", scenario_path)->required();
  synth->add_option("--dot", dot_path, "write the DOT graph to this file");

  auto* check = app.add_subcommand("check", "verify a policy against a scenario");
  check->add_option("scenario", scenario_path)->required();
  check->add_option("policy", policy_path)->required();
  check->add_option("--dot", dot_path, "write the DOT graph to this file");

  auto* stateful = app.add_subcommand("stateful", "compute the stateful policy");
  stateful->add_option("scenario", scenario_path)->required();
  stateful->add_option("policy", policy_path)->required();
  stateful->add_option("--dot", dot_path, "write the DOT graph to this file");

  std::string format = "iptables";
  bool use_variables = false;
  auto* generate = app.add_subcommand("generate", "serialize the stateful policy");
  generate->add_option("scenario", scenario_path)->required();
  generate->add_option("policy", policy_path)->required();
  generate->add_option("--format", format)
      ->check(CLI::IsMember({"iptables", "dfwfw"}))
      ->capture_default_str();
  generate->add_flag("--variables", use_variables, "emit $Entity_ip placeholders");

  AnalysisFlags aflags;
  auto* analyze = app.add_subcommand("analyze", "compute the service matrix of a ruleset");
  analyze->add_option("ruleset", ruleset_path)->required();
  aflags.attach(analyze, "new");

  AnalysisFlags dflags;
  auto* diff = app.add_subcommand("diff", "compare the access matrices of two rulesets");
  diff->add_option("ruleset_a", ruleset_path)->required();
  diff->add_option("ruleset_b", ruleset_b)->required();
  dflags.attach(diff, "new");

  AnalysisFlags cflags;
  std::vector<std::string> binds;
  auto* compare = app.add_subcommand("compare", "check a ruleset against a policy");
  compare->add_option("ruleset", ruleset_path)->required();
  compare->add_option("scenario", scenario_path)->required();
  compare->add_option("policy", policy_path)->required();
  compare->add_option("--bind", binds, "override an entity address, E=ip-expr");
  cflags.attach(compare, "stateful");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      auto sf = parse_scenario(read_input(scenario_path));
      auto g = synthesize_policy(sf.scenario);
      out << "# policy edges\n" << render_policy_edges(g);
      emit_dot(dot_path, to_dot(g), out);
      return 0;
    }

    if (check->parsed() || stateful->parsed() || generate->parsed()) {
      auto sf = parse_scenario(read_input(scenario_path));
      auto g = parse_policy_edges(read_input(policy_path), sf.scenario.entities);
      auto violations = verify_policy(g, sf.scenario);

      if (check->parsed()) {
        if (violations.empty()) {
          out << "compliant\n";
        } else {
          print_violations(violations, sf.scenario, out);
        }
        if (!dot_path.empty()) write_file(dot_path, to_dot(g, violations));
        return violations.empty() ? 0 : 1;
      }

      if (!violations.empty()) {
        err << "error: policy is not compliant, refusing to continue\n";
        print_violations(violations, sf.scenario, err);
        return 1;
      }
      auto sp = make_stateful(g, sf.scenario);

      if (stateful->parsed()) {
        out << "# answer edges\n";
        for (const auto& e : sp.answer_edges()) out << to_string(e) << "\n";
        emit_dot(dot_path, to_dot(sp), out);
        return 0;
      }

      if (format == "dfwfw") {
        if (!sf.dfwfw) throw Error("scenario has no dfwfw section");
        auto doc = to_dfwfw(sp.base(), *sf.dfwfw);
        for (const auto& w : doc.warnings) err << "warning: " << w << "\n";
        out << doc.text;
        return 0;
      }
      if (use_variables) {
        std::string iface = sf.binding ? sf.binding->internal_iface : "dockerbr";
        auto external = sf.binding ? sf.binding->external : std::nullopt;
        out << to_iptables(sp, EntityBinding::variables(sf.scenario.entities, iface, external),
                           sf.internal_universe);
        return 0;
      }
      if (!sf.binding) throw Error("scenario has no bindings section (use --variables for placeholders)");
      out << to_iptables(sp, *sf.binding, sf.internal_universe);
      return 0;
    }

    if (analyze->parsed()) {
      auto rs = load_ruleset(ruleset_path, err);
      auto result = run_analysis(rs, aflags, err);
      print_matrix(result, out);
      emit_dot(aflags.dot, to_dot(result.matrix, result.answers.value_or(std::set<std::pair<std::size_t, std::size_t>>{})), out);
      return 0;
    }

    if (diff->parsed()) {
      if (dflags.state == "stateful") throw Error("diff compares one state at a time; use new or established");
      auto a = run_analysis(load_ruleset(ruleset_path, err), dflags, err);
      auto b = run_analysis(load_ruleset(ruleset_b, err), dflags, err);
      auto d = an::matrix_diff(a.matrix, b.matrix);
      for (const auto& [s, t] : d.only_in_a) out << "- " << render_label(s) << " -> " << render_label(t) << "\n";
      for (const auto& [s, t] : d.only_in_b) out << "+ " << render_label(s) << " -> " << render_label(t) << "\n";
      if (d.empty()) out << "no change\n";
      return d.empty() ? 0 : 1;
    }

    if (compare->parsed()) {
      auto sf = parse_scenario(read_input(scenario_path));
      auto g = parse_policy_edges(read_input(policy_path), sf.scenario.entities);
      auto sp = make_stateful(g, sf.scenario);
      std::map<EntityId, IpIntervalSet> addrs;
      if (sf.binding) addrs = concrete_addresses(sf);
      for (const auto& bind : binds) {
        auto eq = bind.find('=');
        if (eq == std::string::npos) throw Error("--bind expects E=ip-expr, got '" + bind + "'");
        EntityId e(bind.substr(0, eq));
        if (!sf.scenario.entities.contains(e)) throw Error("--bind: unknown entity '" + e.str() + "'");
        addrs[e] = parse_ip_expr(bind.substr(eq + 1));
      }
      auto result = run_analysis(load_ruleset(ruleset_path, err), cflags, err);
      auto report = an::matrix_policy_compare(result.matrix, result.answers, sp, addrs);
      if (report.isomorphic) {
        out << "isomorphic\n";
        return 0;
      }
      for (const auto& m : report.mismatches) out << "mismatch: " << m << "\n";
      return 1;
    }
  } catch (const PolicyViolationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace accessctl::cli
