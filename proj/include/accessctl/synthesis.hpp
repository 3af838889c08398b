// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <vector>

#include "accessctl/error.hpp"
#include "accessctl/invariants.hpp"
#include "accessctl/policy.hpp"

namespace accessctl {

struct Scenario {
  std::set<EntityId> entities;
  std::vector<InvariantInstance> invariants;  ///< order fixes violation indices
};

/// Raised when a policy fails verification where compliance is required.
class PolicyViolationError : public Error {
 public:
  explicit PolicyViolationError(std::set<Violation> violations);
  const std::set<Violation>& violations() const noexcept { return violations_; }

 private:
  std::set<Violation> violations_;
};

/// The maximal policy satisfying every invariant: all self-loops plus every
/// edge that no invariant rejects.
PolicyGraph synthesize_policy(const Scenario& sc);

/// Union of every invariant's offenders, indexed 1-based. Throws Error when
/// the graph's nodes differ from the scenario's entities.
std::set<Violation> verify_policy(const PolicyGraph& g, const Scenario& sc);

/// Marks as answer edges the one-way edges whose reverse flow every
/// information-flow invariant admits. Access-control invariants do not
/// constrain replies. Throws PolicyViolationError if `g` is not compliant.
StatefulPolicy make_stateful(const PolicyGraph& g, const Scenario& sc);

}  // namespace accessctl
