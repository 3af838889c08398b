// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "accessctl/analysis.hpp"
#include "accessctl/error.hpp"
#include "accessctl/iptables.hpp"
#include "accessctl/scenario.hpp"
#include "accessctl/serializers.hpp"

namespace py = pybind11;
using namespace accessctl;

namespace {

using EdgeList = std::vector<std::pair<std::string, std::string>>;

EdgeList edge_list(const std::set<Edge>& edges) {
  EdgeList out;
  for (const auto& [s, d] : edges) out.emplace_back(s.str(), d.str());
  return out;
}

struct Loaded {
  ScenarioFile sf;
  PolicyGraph g;
};

Loaded load(const std::string& scenario_json, const std::string& policy) {
  auto sf = parse_scenario(scenario_json);
  auto g = parse_policy_edges(policy, sf.scenario.entities);
  return {std::move(sf), std::move(g)};
}

analysis::AnalysisOptions options(const std::string& service, const std::string& ipassmt,
                                  const std::string& closure, const std::string& chain) {
  analysis::AnalysisOptions o;
  o.service = analysis::Service::parse(service);
  o.ipassmt = analysis::parse_ipassmt(ipassmt);
  if (closure == "deny") {
    o.mode = analysis::ClosureMode::InDoubtDeny;
  } else if (closure != "allow") {
    throw Error("closure must be 'allow' or 'deny'");
  }
  o.chain = chain;
  return o;
}

py::dict matrix_dict(const analysis::ServiceMatrix& m) {
  py::list labels;
  for (const auto& c : m.classes) labels.append(render_label(c));
  py::dict d;
  d["classes"] = labels;
  d["edges"] = std::vector<std::pair<std::size_t, std::size_t>>(m.edges.begin(), m.edges.end());
  return d;
}

}  // namespace

PYBIND11_MODULE(_accessctl, m) {
  m.doc() = "Policy synthesis and iptables analysis";

  static py::exception<Error> error_type(m, "AccessctlError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, e.what());
    }
  });

  m.def("synthesize", [](const std::string& scenario_json) {
    return edge_list(synthesize_policy(parse_scenario(scenario_json).scenario).edges());
  }, py::arg("scenario_json"), "Maximal policy of a scenario as (src, dst) pairs.");

  m.def("check", [](const std::string& scenario_json, const std::string& policy) {
    auto [sf, g] = load(scenario_json, policy);
    std::vector<std::tuple<std::size_t, std::string, std::string>> out;
    for (const auto& v : verify_policy(g, sf.scenario))
      out.emplace_back(v.invariant_index, v.edge.first.str(), v.edge.second.str());
    return out;
  }, py::arg("scenario_json"), py::arg("policy"),
     "Violations as (invariant index, src, dst); empty when compliant.");

  m.def("stateful", [](const std::string& scenario_json, const std::string& policy) {
    auto [sf, g] = load(scenario_json, policy);
    return edge_list(make_stateful(g, sf.scenario).answer_edges());
  }, py::arg("scenario_json"), py::arg("policy"));

  m.def("generate_iptables", [](const std::string& scenario_json, const std::string& policy,
                                bool variables) {
    auto [sf, g] = load(scenario_json, policy);
    auto sp = make_stateful(g, sf.scenario);
    if (variables) {
      std::string iface = sf.binding ? sf.binding->internal_iface : "dockerbr";
      auto external = sf.binding ? sf.binding->external : std::nullopt;
      return to_iptables(sp, EntityBinding::variables(sf.scenario.entities, iface, external),
                         sf.internal_universe);
    }
    if (!sf.binding) throw Error("scenario has no bindings section");
    return to_iptables(sp, *sf.binding, sf.internal_universe);
  }, py::arg("scenario_json"), py::arg("policy"), py::arg("variables") = false);

  m.def("generate_dfwfw", [](const std::string& scenario_json, const std::string& policy) {
    auto [sf, g] = load(scenario_json, policy);
    if (!sf.dfwfw) throw Error("scenario has no dfwfw section");
    auto doc = to_dfwfw(make_stateful(g, sf.scenario).base(), *sf.dfwfw);
    return py::make_tuple(doc.text, doc.warnings);
  }, py::arg("scenario_json"), py::arg("policy"), "Returns (document, warnings).");

  m.def("analyze", [](const std::string& ruleset, const std::string& service,
                      const std::string& state, const std::string& ipassmt,
                      const std::string& closure, const std::string& chain) {
    auto rs = iptables::parse_save(ruleset);
    auto o = options(service, ipassmt, closure, chain);
    if (state == "stateful") {
      auto ov = analysis::stateful_overview(rs, o);
      py::dict d = matrix_dict(ov.matrix);
      d["answer_edges"] = std::vector<std::pair<std::size_t, std::size_t>>(
          ov.answer_edges.begin(), ov.answer_edges.end());
      return d;
    }
    if (state != "new" && state != "established")
      throw Error("state must be 'new', 'established' or 'stateful'");
    auto cs = state == "new" ? analysis::ConnState::New : analysis::ConnState::Established;
    return matrix_dict(analysis::analyze(rs, o, cs));
  }, py::arg("ruleset"), py::arg("service") = "tcp:80", py::arg("state") = "new",
     py::arg("ipassmt") = "", py::arg("closure") = "allow", py::arg("chain") = "FORWARD",
     "Service matrix as {'classes': [label], 'edges': [(i, j)]}.");

  m.def("render_label", [](const std::string& ip_expr) { return render_label(parse_ip_expr(ip_expr)); },
        py::arg("ip_expr"));
}
