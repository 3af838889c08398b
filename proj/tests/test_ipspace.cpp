// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "accessctl/error.hpp"
#include "accessctl/ipspace.hpp"
#include "support.hpp"

using namespace accessctl;
using testing_support::ip;
using testing_support::ips;

TEST(Ip32, ParsesAndRendersDottedQuads) {
  EXPECT_EQ(ip("10.0.0.1").value, 0x0A000001u);
  EXPECT_EQ(ip("255.255.255.255").value, 0xFFFFFFFFu);
  EXPECT_EQ(Ip32{0x0A00002Au}.to_string(), "10.0.0.42");
  EXPECT_THROW(ip("10.0.0"), ParseError);
  EXPECT_THROW(ip("10.0.0.256"), ParseError);
  EXPECT_THROW(ip("10.0.0.1.2"), ParseError);
  EXPECT_THROW(ip("a.b.c.d"), ParseError);
}

TEST(IpExpr, CidrCoversTheWholeBlock) {
  auto s = ips("10.0.0.0/8");
  ASSERT_EQ(s.intervals().size(), 1u);
  EXPECT_EQ(s.intervals()[0].lo, ip("10.0.0.0").value);
  EXPECT_EQ(s.intervals()[0].hi, ip("10.255.255.255").value);
}

TEST(IpExpr, CidrMasksHostBits) { EXPECT_EQ(ips("10.1.2.3/8"), ips("10.0.0.0/8")); }

TEST(IpExpr, DashRangeEqualsCidr) { EXPECT_EQ(ips("10.0.0.0-10.255.255.255"), ips("10.0.0.0/8")); }

TEST(IpExpr, CommaListGivesSingletons) {
  auto s = ips("10.0.0.1,10.0.0.42");
  ASSERT_EQ(s.intervals().size(), 2u);
  EXPECT_EQ(s.count(), 2u);
  EXPECT_TRUE(s.contains(ip("10.0.0.42").value));
  EXPECT_FALSE(s.contains(ip("10.0.0.2").value));
}

TEST(IpExpr, AdjacentItemsMerge) { EXPECT_EQ(ips("10.0.0.1,10.0.0.2").intervals().size(), 1u); }

TEST(IpExpr, ZeroPrefixIsEverything) { EXPECT_TRUE(ips("0.0.0.0/0").is_full()); }

TEST(IpExpr, ErrorsCarryPosition) {
  try {
    parse_ip_expr("10.0.0.1,10.0.0.300");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), 9u);
  }
  EXPECT_THROW(parse_ip_expr("10.0.0.0/33"), ParseError);
  EXPECT_THROW(parse_ip_expr("10.0.0.5-10.0.0.1"), ParseError);
  EXPECT_THROW(parse_ip_expr(""), ParseError);
  EXPECT_THROW(parse_ip_expr("10.0.0.1,"), ParseError);
}

TEST(IntervalAlgebra, ComplementOfPrivateBlock) {
  auto c = ~ips("10.0.0.0/8");
  ASSERT_EQ(c.intervals().size(), 2u);
  EXPECT_EQ(c.intervals()[0].lo, 0u);
  EXPECT_EQ(c.intervals()[0].hi, ip("9.255.255.255").value);
  EXPECT_EQ(c.intervals()[1].lo, ip("11.0.0.0").value);
  EXPECT_EQ(c.intervals()[1].hi, 0xFFFFFFFFu);
}

TEST(IntervalAlgebra, UnionWithComplementIsFull) {
  auto x = ips("10.0.0.1,192.168.0.0/16");
  EXPECT_TRUE((x | ~x).is_full());
  EXPECT_TRUE((x & ~x).empty());
}

TEST(IntervalAlgebra, DifferenceLeavesTheUnusedRange) {
  auto d = ips("10.0.0.0-10.255.255.255") - ips("10.0.0.1,10.0.0.2,10.0.0.3,10.0.0.4");
  EXPECT_EQ(render_label(d), "{10.0.0.0} ∪ {10.0.0.5 .. 10.255.255.255}");
}

TEST(IntervalAlgebra, ComplementAtTheEdges) {
  EXPECT_TRUE((~IpIntervalSet::full()).empty());
  EXPECT_TRUE((~IpIntervalSet{}).is_full());
  EXPECT_EQ(~IpIntervalSet::single(0), IpIntervalSet::range(1, 0xFFFFFFFFu));
  EXPECT_EQ(~IpIntervalSet::single(0xFFFFFFFFu), IpIntervalSet::range(0, 0xFFFFFFFEu));
}

TEST(IntervalAlgebra, SubsetAndOverlap) {
  EXPECT_TRUE(ips("10.0.0.4").subset_of(ips("10.0.0.0/8")));
  EXPECT_FALSE(ips("10.0.0.0/8").subset_of(ips("10.0.0.4")));
  EXPECT_TRUE(ips("10.0.0.0/8").overlaps(ips("10.2.0.0/16")));
  EXPECT_FALSE(ips("10.0.0.0/8").overlaps(ips("11.0.0.0/8")));
}

TEST(Label, RendersOverviewNotation) {
  EXPECT_EQ(render_label(~ips("10.0.0.0/8")),
            "{0.0.0.0 .. 9.255.255.255} ∪ {11.0.0.0 .. 255.255.255.255}");
  EXPECT_EQ(render_label(ips("10.0.0.4")), "{10.0.0.4}");
  EXPECT_EQ(render_label(ips("10.0.0.1,10.0.0.42")), "{10.0.0.1,10.0.0.42}");
  EXPECT_EQ(render_label(IpIntervalSet::full()), "{0.0.0.0 .. 255.255.255.255}");
  EXPECT_EQ(render_label(IpIntervalSet{}), "{}");
}

TEST(Label, SingletonRunsGroupBetweenRanges) {
  auto s = ips("10.0.0.0,10.0.0.5-10.0.0.41,10.0.0.43-10.255.255.255");
  EXPECT_EQ(render_label(s), "{10.0.0.0} ∪ {10.0.0.5 .. 10.0.0.41} ∪ {10.0.0.43 .. 10.255.255.255}");
  EXPECT_EQ(render_label(ips("1.1.1.1,2.2.2.2,3.3.3.0/24,4.4.4.4")),
            "{1.1.1.1,2.2.2.2} ∪ {3.3.3.0 .. 3.3.3.255} ∪ {4.4.4.4}");
}

TEST(Cidr, DecomposesIntoMinimalBlocks) {
  auto blocks = to_cidrs(ips("10.0.0.0-10.0.0.6"));
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_EQ(render_cidr_list(ips("10.0.0.0-10.0.0.6")), "10.0.0.0/30,10.0.0.4/31,10.0.0.6");
  EXPECT_EQ(render_cidr_list(ips("10.0.0.0/8")), "10.0.0.0/8");
  EXPECT_EQ(render_cidr_list(IpIntervalSet::full()), "0.0.0.0/0");
  EXPECT_EQ(render_cidr_list(ips("10.0.0.1,10.0.0.42")), "10.0.0.1,10.0.0.42");
}

TEST(Cidr, RoundTripsThroughTheParser) {
  for (const char* expr : {"0.0.0.0/0", "10.0.0.0/8", "1.2.3.4-5.6.7.8", "10.0.0.1,10.0.0.42",
                           "255.255.255.255", "0.0.0.0-0.0.0.0"}) {
    auto s = ips(expr);
    EXPECT_EQ(parse_ip_expr(render_cidr_list(s)), s) << expr;
  }
}

TEST(Atomize, NoSetsGiveTheFullSpace) {
  auto atoms = atomize<std::uint32_t>({});
  ASSERT_EQ(atoms.size(), 1u);
  EXPECT_TRUE(atoms[0].is_full());
}

TEST(Atomize, NonConvexRegionIsOneAtom) {
  std::vector<IpIntervalSet> sets{ips("10.0.0.0/8")};
  auto atoms = atomize<std::uint32_t>(sets);
  ASSERT_EQ(atoms.size(), 2u);
  EXPECT_EQ(atoms[0], ~ips("10.0.0.0/8"));
  EXPECT_EQ(atoms[1], ips("10.0.0.0/8"));
}

TEST(Atomize, SplitsOverlaps) {
  std::vector<IpIntervalSet> sets{ips("10.0.0.0/8"), ips("10.0.0.4"), ips("10.0.0.0/30")};
  auto atoms = atomize<std::uint32_t>(sets);
  // outside, 10.0.0.0-3, 10.0.0.4, rest of 10/8
  ASSERT_EQ(atoms.size(), 4u);
  for (const auto& s : sets) {
    IpIntervalSet acc;
    for (const auto& a : atoms)
      if (a.subset_of(s)) acc = acc | a;
      else EXPECT_FALSE(a.overlaps(s));
    EXPECT_EQ(acc, s);
  }
}

TEST(Ports, ParseAndRender) {
  EXPECT_EQ(parse_port_expr("22"), PortSet::single(22));
  EXPECT_EQ(parse_port_expr("1024:65535"), PortSet::range(1024, 65535));
  EXPECT_EQ(parse_port_expr(":1023"), PortSet::range(0, 1023));
  EXPECT_EQ(parse_port_expr("1024:"), PortSet::range(1024, 65535));
  EXPECT_EQ(render_ports(PortSet::range(80, 81)), "80:81");
  EXPECT_EQ(render_ports(PortSet::single(22)), "22");
  EXPECT_THROW(parse_port_expr("65536"), ParseError);
  EXPECT_THROW(parse_port_expr("90:80"), ParseError);
  EXPECT_THROW(parse_port_expr("http"), ParseError);
}
