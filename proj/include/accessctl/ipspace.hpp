// SPDX-License-Identifier: Apache-2.0
//
// Exact set algebra over bounded unsigned integer domains, kept as canonical
// unions of disjoint inclusive intervals. IPv4 addresses and 16-bit ports are
// the two instantiations used throughout the library.
#pragma once

#include <algorithm>
#include <compare>
#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace accessctl {

template <std::unsigned_integral T>
struct Interval {
  T lo;
  T hi;

  friend bool operator==(const Interval&, const Interval&) = default;
  friend auto operator<=>(const Interval&, const Interval&) = default;
};

/// Canonical disjoint interval union over the full range of `T`.
///
/// Invariant: intervals are strictly ascending and no two are overlapping or
/// adjacent (hi[i] + 1 < lo[i+1]). Two sets are equal iff their interval
/// lists are equal.
template <std::unsigned_integral T>
class IntervalSet {
 public:
  using value_type = T;
  using interval_type = Interval<T>;
  static constexpr T kMax = std::numeric_limits<T>::max();

  IntervalSet() = default;

  static IntervalSet full() { return IntervalSet{{interval_type{0, kMax}}, Canonical{}}; }
  static IntervalSet single(T v) { return IntervalSet{{interval_type{v, v}}, Canonical{}}; }
  static IntervalSet range(T lo, T hi) {
    if (lo > hi) return {};
    return IntervalSet{{interval_type{lo, hi}}, Canonical{}};
  }

  /// Normalizes an arbitrary interval list; intervals with lo > hi are dropped.
  static IntervalSet from_intervals(std::vector<interval_type> raw) {
    std::erase_if(raw, [](const interval_type& i) { return i.lo > i.hi; });
    std::sort(raw.begin(), raw.end());
    std::vector<interval_type> out;
    for (const auto& i : raw) {
      if (!out.empty() && (out.back().hi == kMax || i.lo <= out.back().hi + 1)) {
        out.back().hi = std::max(out.back().hi, i.hi);
      } else {
        out.push_back(i);
      }
    }
    return IntervalSet{std::move(out), Canonical{}};
  }

  std::span<const interval_type> intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  bool is_full() const {
    return intervals_.size() == 1 && intervals_[0].lo == 0 && intervals_[0].hi == kMax;
  }

  bool contains(T v) const {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), v,
                               [](T x, const interval_type& i) { return x < i.lo; });
    return it != intervals_.begin() && std::prev(it)->hi >= v;
  }

  std::optional<T> lowest() const {
    if (empty()) return std::nullopt;
    return intervals_.front().lo;
  }

  /// Number of members; uses 64 bits so the full 32-bit space fits.
  std::uint64_t count() const {
    std::uint64_t n = 0;
    for (const auto& i : intervals_) n += std::uint64_t{i.hi} - i.lo + 1;
    return n;
  }

  IntervalSet complement() const {
    std::vector<interval_type> out;
    T next = 0;
    bool open = true;  // whether [next, ...] is still available
    for (const auto& i : intervals_) {
      if (i.lo > next) out.push_back({next, static_cast<T>(i.lo - 1)});
      if (i.hi == kMax) {
        open = false;
        break;
      }
      next = static_cast<T>(i.hi + 1);
    }
    if (open) out.push_back({next, kMax});
    return IntervalSet{std::move(out), Canonical{}};
  }

  IntervalSet unite(const IntervalSet& other) const {
    std::vector<interval_type> all(intervals_);
    all.insert(all.end(), other.intervals_.begin(), other.intervals_.end());
    return from_intervals(std::move(all));
  }

  IntervalSet intersect(const IntervalSet& other) const {
    std::vector<interval_type> out;
    auto a = intervals_.begin();
    auto b = other.intervals_.begin();
    while (a != intervals_.end() && b != other.intervals_.end()) {
      T lo = std::max(a->lo, b->lo);
      T hi = std::min(a->hi, b->hi);
      if (lo <= hi) out.push_back({lo, hi});
      if (a->hi < b->hi) {
        ++a;
      } else {
        ++b;
      }
    }
    return IntervalSet{std::move(out), Canonical{}};
  }

  IntervalSet difference(const IntervalSet& other) const {
    return intersect(other.complement());
  }

  bool subset_of(const IntervalSet& other) const { return difference(other).empty(); }
  bool overlaps(const IntervalSet& other) const { return !intersect(other).empty(); }

  friend IntervalSet operator|(const IntervalSet& a, const IntervalSet& b) { return a.unite(b); }
  friend IntervalSet operator&(const IntervalSet& a, const IntervalSet& b) {
    return a.intersect(b);
  }
  friend IntervalSet operator-(const IntervalSet& a, const IntervalSet& b) {
    return a.difference(b);
  }
  friend IntervalSet operator~(const IntervalSet& a) { return a.complement(); }

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;
  friend auto operator<=>(const IntervalSet& a, const IntervalSet& b) {
    return a.intervals_ <=> b.intervals_;
  }

 private:
  struct Canonical {};
  IntervalSet(std::vector<interval_type> v, Canonical) : intervals_(std::move(v)) {}

  std::vector<interval_type> intervals_;
};

/// Coarsest partition of the full domain such that every input set is a union
/// of output atoms. Atoms are sets (possibly non-convex), ordered by their
/// lowest member.
template <std::unsigned_integral T>
std::vector<IntervalSet<T>> atomize(std::span<const IntervalSet<T>> sets) {
  using Set = IntervalSet<T>;
  // Elementary interval boundaries: every point where some input set starts
  // or stops.
  std::vector<T> starts{0};
  for (const auto& s : sets) {
    for (const auto& i : s.intervals()) {
      starts.push_back(i.lo);
      if (i.hi != Set::kMax) starts.push_back(static_cast<T>(i.hi + 1));
    }
  }
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

  // Membership signature of each elementary interval, then group equal
  // signatures. Groups appear in order of their first elementary interval,
  // which is also their lowest address.
  std::map<std::vector<bool>, std::size_t> group_of;
  std::vector<std::vector<Interval<T>>> groups;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    T lo = starts[k];
    T hi = k + 1 < starts.size() ? static_cast<T>(starts[k + 1] - 1) : Set::kMax;
    std::vector<bool> sig;
    sig.reserve(sets.size());
    for (const auto& s : sets) sig.push_back(s.contains(lo));
    auto [it, inserted] = group_of.try_emplace(std::move(sig), groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back({lo, hi});
  }
  std::vector<Set> atoms;
  atoms.reserve(groups.size());
  for (auto& g : groups) atoms.push_back(Set::from_intervals(std::move(g)));
  return atoms;
}

/// An IPv4 address.
struct Ip32 {
  std::uint32_t value = 0;

  static Ip32 parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(Ip32, Ip32) = default;
  friend auto operator<=>(Ip32, Ip32) = default;
};

using IpIntervalSet = IntervalSet<std::uint32_t>;
using PortSet = IntervalSet<std::uint16_t>;

IpIntervalSet cidr(Ip32 base, int prefix_len);

/// Parses a dotted quad, CIDR block, dash range or comma list of these.
/// Throws ParseError carrying the 0-based offset of the offending element.
IpIntervalSet parse_ip_expr(std::string_view text);

/// Renders in the overview-label style: "{lo .. hi} ∪ {a,b} ∪ ...". Runs of
/// consecutive singleton intervals share one brace pair.
std::string render_label(const IpIntervalSet& set);

/// Minimal list of CIDR blocks covering exactly `set`, ascending.
std::vector<std::pair<Ip32, int>> to_cidrs(const IpIntervalSet& set);

/// Comma-separated CIDR list ("10.0.0.1,10.0.0.0/8"); host routes omit "/32".
std::string render_cidr_list(const IpIntervalSet& set);

/// Parses "22", "1024:65535" or a comma list of those.
PortSet parse_port_expr(std::string_view text);
std::string render_ports(const PortSet& set, char range_sep = ':');

}  // namespace accessctl
