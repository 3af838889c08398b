// SPDX-License-Identifier: Apache-2.0
#include "accessctl/ipspace.hpp"

#include <charconv>
#include <sstream>

#include "accessctl/error.hpp"

namespace accessctl {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Parses an unsigned decimal filling the whole of `text`.
template <typename T>
bool parse_uint(std::string_view text, T max, T& out) {
  if (text.empty() || text.size() > 10) return false;
  unsigned long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v > static_cast<unsigned long>(max)) return false;
  out = static_cast<T>(v);
  return true;
}

bool parse_quad(std::string_view text, std::uint32_t& out) {
  std::uint32_t value = 0;
  int octets = 0;
  while (true) {
    auto dot = text.find('.');
    std::string_view part = text.substr(0, dot);
    unsigned octet = 0;
    if (!parse_uint<unsigned>(part, 255u, octet)) return false;
    value = (value << 8) | octet;
    ++octets;
    if (dot == std::string_view::npos) break;
    text.remove_prefix(dot + 1);
  }
  if (octets != 4) return false;
  out = value;
  return true;
}

IpIntervalSet parse_element(std::string_view elem, std::size_t offset) {
  auto fail = [&](const std::string& what) -> IpIntervalSet {
    throw ParseError(what + " '" + std::string(elem) + "' at offset " + std::to_string(offset),
                     offset);
  };
  if (auto slash = elem.find('/'); slash != std::string_view::npos) {
    std::uint32_t base = 0;
    if (!parse_quad(elem.substr(0, slash), base)) return fail("malformed address");
    int prefix = 0;
    if (!parse_uint<int>(elem.substr(slash + 1), 32, prefix)) return fail("malformed prefix length");
    return cidr(Ip32{base}, prefix);
  }
  if (auto dash = elem.find('-'); dash != std::string_view::npos) {
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;
    if (!parse_quad(trim(elem.substr(0, dash)), lo) || !parse_quad(trim(elem.substr(dash + 1)), hi))
      return fail("malformed address range");
    if (lo > hi) return fail("empty address range");
    return IpIntervalSet::range(lo, hi);
  }
  std::uint32_t addr = 0;
  if (!parse_quad(elem, addr)) return fail("malformed address");
  return IpIntervalSet::single(addr);
}

}  // namespace

Ip32 Ip32::parse(std::string_view text) {
  std::uint32_t v = 0;
  if (!parse_quad(text, v)) throw ParseError("malformed address '" + std::string(text) + "'", 0);
  return Ip32{v};
}

std::string Ip32::to_string() const {
  return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
         std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
}

IpIntervalSet cidr(Ip32 base, int prefix_len) {
  if (prefix_len < 0 || prefix_len > 32) throw Error("prefix length out of range");
  if (prefix_len == 0) return IpIntervalSet::full();
  std::uint32_t host_mask = prefix_len == 32 ? 0u : (0xffffffffu >> prefix_len);
  std::uint32_t lo = base.value & ~host_mask;
  return IpIntervalSet::range(lo, lo | host_mask);
}

IpIntervalSet parse_ip_expr(std::string_view text) {
  IpIntervalSet result;
  std::size_t pos = 0;
  if (trim(text).empty()) throw ParseError("empty address expression", 0);
  while (true) {
    auto comma = text.find(',', pos);
    std::string_view raw = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
    std::string_view elem = trim(raw);
    std::size_t lead = raw.find_first_not_of(" \t");
    std::size_t offset = pos + (lead == std::string_view::npos ? 0 : lead);
    if (elem.empty()) throw ParseError("empty list element at offset " + std::to_string(pos), pos);
    result = result | parse_element(elem, offset);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return result;
}

std::string render_label(const IpIntervalSet& set) {
  std::string out;
  auto ivs = set.intervals();
  std::size_t k = 0;
  while (k < ivs.size()) {
    if (!out.empty()) out += " ∪ ";
    out += '{';
    if (ivs[k].lo == ivs[k].hi) {
      out += Ip32{ivs[k].lo}.to_string();
      ++k;
      while (k < ivs.size() && ivs[k].lo == ivs[k].hi) {
        out += ',';
        out += Ip32{ivs[k].lo}.to_string();
        ++k;
      }
    } else {
      out += Ip32{ivs[k].lo}.to_string() + " .. " + Ip32{ivs[k].hi}.to_string();
      ++k;
    }
    out += '}';
  }
  if (out.empty()) out = "{}";
  return out;
}

std::vector<std::pair<Ip32, int>> to_cidrs(const IpIntervalSet& set) {
  std::vector<std::pair<Ip32, int>> out;
  for (const auto& iv : set.intervals()) {
    std::uint64_t lo = iv.lo;
    const std::uint64_t hi = iv.hi;
    while (lo <= hi) {
      // Largest aligned block starting at lo that stays within hi.
      int host_bits = lo == 0 ? 32 : __builtin_ctzll(lo);
      if (host_bits > 32) host_bits = 32;
      while (lo + (std::uint64_t{1} << host_bits) - 1 > hi) --host_bits;
      out.emplace_back(Ip32{static_cast<std::uint32_t>(lo)}, 32 - host_bits);
      lo += std::uint64_t{1} << host_bits;
    }
  }
  return out;
}

std::string render_cidr_list(const IpIntervalSet& set) {
  std::string out;
  for (const auto& [base, len] : to_cidrs(set)) {
    if (!out.empty()) out += ',';
    out += base.to_string();
    if (len != 32) out += '/' + std::to_string(len);
  }
  return out;
}

PortSet parse_port_expr(std::string_view text) {
  PortSet result;
  std::size_t pos = 0;
  while (true) {
    auto comma = text.find(',', pos);
    std::string_view elem =
        trim(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
    auto fail = [&]() -> PortSet {
      throw ParseError("malformed port '" + std::string(elem) + "' at offset " + std::to_string(pos),
                       pos);
    };
    std::uint16_t lo = 0;
    std::uint16_t hi = 0;
    if (auto colon = elem.find(':'); colon != std::string_view::npos) {
      std::string_view a = elem.substr(0, colon);
      std::string_view b = elem.substr(colon + 1);
      if (a.empty()) {
        lo = 0;
      } else if (!parse_uint<std::uint16_t>(a, 65535, lo)) {
        fail();
      }
      if (b.empty()) {
        hi = 65535;
      } else if (!parse_uint<std::uint16_t>(b, 65535, hi)) {
        fail();
      }
      if (lo > hi) fail();
    } else {
      if (!parse_uint<std::uint16_t>(elem, 65535, lo)) fail();
      hi = lo;
    }
    result = result | PortSet::range(lo, hi);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return result;
}

std::string render_ports(const PortSet& set, char range_sep) {
  std::ostringstream out;
  bool first = true;
  for (const auto& iv : set.intervals()) {
    if (!first) out << ',';
    first = false;
    out << iv.lo;
    if (iv.hi != iv.lo) out << range_sep << iv.hi;
  }
  return out.str();
}

}  // namespace accessctl
