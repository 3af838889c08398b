// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "accessctl/error.hpp"
#include "accessctl/iptables.hpp"
#include "support.hpp"

using namespace accessctl;
using namespace accessctl::iptables;
using namespace testing_support;

namespace {

std::string wrap(const std::string& body, const std::string& chains = "") {
  return "*filter\n:INPUT ACCEPT [0:0]\n:FORWARD ACCEPT [0:0]\n:OUTPUT ACCEPT [0:0]\n" + chains +
         body + "COMMIT\n";
}

std::size_t error_line(const std::string& text) {
  try {
    parse_save(text);
  } catch (const ParseError& e) {
    return e.location();
  }
  return 0;
}

const std::vector<std::string> kFixtures = {
    "docker_initial.rules",  "docker_ratelimit.rules",         "docker_tightened.rules",
    "docker_webdev.rules",   "fresh_generated.rules",          "fresh_custom_established.rules",
    "fresh_custom_ssh.rules"};

}  // namespace

TEST(ParseRule, InterfaceAndAddressMatches) {
  auto r = parse_rule("-i br0 -s 10.0.0.1 -o br0 -d 10.0.0.2 -j ACCEPT");
  std::vector<MatchAtom> expected{InIface{"br0", false}, SrcIp{ips("10.0.0.1")}, OutIface{"br0", false},
                                  DstIp{ips("10.0.0.2")}};
  EXPECT_EQ(r.matches, expected);
  EXPECT_EQ(r.target.kind, TargetKind::Accept);
}

TEST(ParseRule, CommaListExpands) {
  auto r = parse_rule("-i br0 -s 10.0.0.1,10.0.0.42 -j ACCEPT");
  EXPECT_EQ(std::get<SrcIp>(r.matches[1]).set, ips("10.0.0.1,10.0.0.42"));
}

TEST(ParseRule, NegationWithMultipleAddressesIsRejected) {
  try {
    parse_rule("-s 10.0.0.1,10.0.0.42 ! -d 10.0.0.0/8 -j ACCEPT");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(
                  "negation is not allowed with multiple source or destination IP addresses"),
              std::string::npos);
  }
}

TEST(ParseRule, NegatedAddressFoldsToComplement) {
  auto r = parse_rule("! -s 10.0.0.0/8 -j DROP");
  EXPECT_EQ(std::get<SrcIp>(r.matches[0]).set, ~ips("10.0.0.0/8"));
}

TEST(ParseRule, RecentModuleWithoutTargetIsUnknownNoOp) {
  auto r = parse_rule("-d 193.99.144.80 -m recent --set --name rateheise --rsource");
  ASSERT_EQ(r.matches.size(), 2u);
  EXPECT_EQ(std::get<DstIp>(r.matches[0]).set, ips("193.99.144.80"));
  EXPECT_EQ(std::get<UnknownMatch>(r.matches[1]).text, "-m recent --set --name rateheise --rsource");
  EXPECT_EQ(r.target.kind, TargetKind::NoOp);
}

TEST(ParseRule, StateAndConntrackAgree) {
  auto a = parse_rule("-m state --state ESTABLISHED,RELATED -j ACCEPT");
  auto b = parse_rule("-m conntrack --ctstate RELATED,ESTABLISHED -j ACCEPT");
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::get<CtState>(a.matches[0]).states, kEstablished | kRelated);
}

TEST(ParseRule, PortsAndProtocols) {
  auto r = parse_rule("-p tcp -m tcp --dport 22 -j ACCEPT");
  std::vector<MatchAtom> expected{ProtocolMatch{Protocol::Tcp}, DstPorts{PortSet::single(22)}};
  EXPECT_EQ(r.matches, expected);
  auto m = parse_rule("-p tcp -m multiport --ports 22 -j ACCEPT");
  EXPECT_EQ(std::get<BothPorts>(m.matches[1]).ports, PortSet::single(22));
  auto d = parse_rule("-p udp -m multiport --dports 53,67:68 -j ACCEPT");
  EXPECT_EQ(std::get<DstPorts>(d.matches[1]).ports,
            PortSet::from_intervals({{53, 53}, {67, 68}}));
  EXPECT_TRUE(std::holds_alternative<UnknownMatch>(parse_rule("! -p tcp -j DROP").matches[0]));
  EXPECT_TRUE(std::holds_alternative<UnknownMatch>(parse_rule("-p gre -j DROP").matches[0]));
}

TEST(ParseRule, IprangeForms) {
  auto r = parse_rule("-m iprange ! --dst-range 10.0.0.0-10.255.255.255 -j ACCEPT");
  EXPECT_EQ(std::get<DstIp>(r.matches[0]).set, ~ips("10.0.0.0/8"));
  auto s = parse_rule("-m iprange --src-range 10.0.0.1-10.0.0.9 -j ACCEPT");
  EXPECT_EQ(std::get<SrcIp>(s.matches[0]).set, ips("10.0.0.1-10.0.0.9"));
}

TEST(ParseRule, UninterpretedOptionOfKnownModule) {
  auto r = parse_rule("-p tcp -m tcp --tcp-flags SYN,ACK SYN -j DROP");
  EXPECT_EQ(std::get<UnknownMatch>(r.matches[1]).text, "--tcp-flags SYN,ACK SYN");
}

TEST(ParseRule, TargetsAndErrors) {
  EXPECT_EQ(parse_rule("-j REJECT --reject-with tcp-reset").target.options,
            "--reject-with tcp-reset");
  EXPECT_EQ(parse_rule("-j MYNET").target, Target::jump("MYNET"));
  EXPECT_THROW(parse_rule("-g MYNET"), ParseError);
  EXPECT_THROW(parse_rule("-j ACCEPT --bogus"), ParseError);
  EXPECT_THROW(parse_rule("-s"), ParseError);
  EXPECT_THROW(parse_rule("-s 10.0.0.999 -j ACCEPT"), ParseError);
  EXPECT_THROW(parse_rule("bogus"), ParseError);
}

TEST(ParseSave, DockerRulesetStructure) {
  auto rs = ruleset("docker_initial.rules");
  ASSERT_EQ(rs.chains().size(), 6u);
  const Chain* fwd = rs.find("FORWARD");
  ASSERT_NE(fwd, nullptr);
  EXPECT_EQ(fwd->policy, Policy::Accept);
  EXPECT_EQ(fwd->rules.size(), 10u);
  EXPECT_EQ(rs.find("MYNET")->rules.size(), 16u);
  EXPECT_FALSE(rs.find("MYNET")->policy.has_value());
}

TEST(ParseSave, InsertGoesToTheHead) {
  auto rs = parse_save(wrap("-A FORWARD -s 1.1.1.1 -j DROP\n-I FORWARD -s 2.2.2.2 -j ACCEPT\n"
                            "-I FORWARD 2 -s 3.3.3.3 -j ACCEPT\n"));
  const auto& rules = rs.find("FORWARD")->rules;
  ASSERT_EQ(rules.size(), 3u);
  EXPECT_EQ(std::get<SrcIp>(rules[0].matches[0]).set, ips("2.2.2.2"));
  EXPECT_EQ(std::get<SrcIp>(rules[1].matches[0]).set, ips("3.3.3.3"));
  EXPECT_EQ(std::get<SrcIp>(rules[2].matches[0]).set, ips("1.1.1.1"));
}

TEST(ParseSave, OtherTablesAreSkippedWithWarning) {
  ParseDiagnostics diag;
  auto rs = parse_save("*nat\n:PREROUTING ACCEPT [0:0]\n-A PREROUTING -j DNAT --to 1.2.3.4\nCOMMIT\n" +
                           wrap("-A FORWARD -j ACCEPT\n"),
                       &diag);
  EXPECT_EQ(rs.find("FORWARD")->rules.size(), 1u);
  EXPECT_EQ(rs.find("PREROUTING"), nullptr);
  EXPECT_FALSE(diag.warnings.empty());
}

TEST(ParseSave, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line(wrap("-A FORWARD -j ACCEPT\n-A FORWARD -s nope -j ACCEPT\n")), 6u);
  EXPECT_EQ(error_line("*filter\n:FORWARD ACCEPT [0:0]\n-A NOPE -j ACCEPT\nCOMMIT\n"), 3u);
  EXPECT_EQ(error_line("*filter\n:FORWARD ACCEPT [0:0]\n:X ACCEPT [0:0]\nCOMMIT\n"), 3u);
  EXPECT_EQ(error_line("*filter\n:FORWARD - [0:0]\nCOMMIT\n"), 2u);
  EXPECT_THROW(parse_save("*filter\n:FORWARD ACCEPT [0:0]\n"), ParseError);
  EXPECT_THROW(parse_save(""), ParseError);
}

TEST(ParseSave, UnresolvedJumpIsAnError) {
  EXPECT_THROW(parse_save(wrap("-A FORWARD -j NOWHERE\n")), Error);
  EXPECT_THROW(parse_save(wrap("-A FORWARD -j LOG\n")), Error);
  EXPECT_THROW(parse_save(wrap("-A FORWARD -j INPUT\n")), Error);
  EXPECT_NO_THROW(parse_save(wrap("-A FORWARD -j X\n", ":X - [0:0]\n")));
}

TEST(Render, EmptyTable) {
  EXPECT_EQ(render_save(Ruleset::empty()),
            "*filter\n:INPUT ACCEPT [0:0]\n:FORWARD ACCEPT [0:0]\n:OUTPUT ACCEPT [0:0]\nCOMMIT\n");
}

TEST(Render, UnknownAtomsAreVerbatim) {
  auto rs = parse_save(wrap("-A FORWARD -d 193.99.144.80 -m recent --update --seconds 60 "
                            "--hitcount 3 --name rateheise --rsource -j DROP\n"));
  auto text = render_save(rs);
  EXPECT_NE(text.find("-m recent --update --seconds 60 --hitcount 3 --name rateheise --rsource"),
            std::string::npos);
}

TEST(Render, NegationNeverMeetsAList) {
  Rule r{{SrcIp{ips("10.0.0.1,10.0.0.42")}, DstIp{~ips("10.0.0.0/8")}}, Target::accept()};
  auto text = render_rule("FORWARD", r);
  EXPECT_NE(text.find("-m iprange ! --dst-range 10.0.0.0-10.255.255.255"), std::string::npos);
  EXPECT_EQ(parse_rule(text.substr(std::string("-A FORWARD ").size())), r);
}

TEST(Render, RoundTripsEveryFixture) {
  for (const auto& name : kFixtures) {
    auto rs = ruleset(name);
    auto again = parse_save(render_save(rs));
    EXPECT_EQ(again, rs) << name;
    EXPECT_EQ(render_save(again), render_save(rs)) << name;
  }
}
