#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c2pd/capo.hpp"

namespace c2pd {

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestOptions {
  std::uint64_t seed = 1;
  // Normalization used by the conservation check; replaced by mutation tests.
  ConserveFn conserve = &c2pd::conserve;
};

/// Runs the invariant suite (conservation, identity, round trip, locality,
/// transpose equivariance, gradient checks, kernel properties, file round
/// trips) on small seeded instances.
std::vector<SelftestResult> run_selftest(const SelftestOptions& options = {});

}  // namespace c2pd
