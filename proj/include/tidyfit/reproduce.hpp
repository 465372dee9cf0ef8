#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tidyfit/frame.hpp"

namespace tidyfit {

/// lm-tidy, lm-augment, lm-glance, lm-grouped, nls-summary, kmeans-sim
const std::vector<std::string>& reproduce_targets();

/// Regenerates a target table from the bundled fixture or the cluster
/// simulation. `seed` only matters for kmeans-sim.
Frame reproduce_table(std::string_view target, std::uint64_t seed = 2014, unsigned threads = 1);

struct GoldenReport {
  bool ok = true;
  std::size_t cells_checked = 0;
  /// Description of the cell with the largest error relative to its
  /// tolerance (or the first structural problem).
  std::string worst;
  double worst_ratio = 0.0;
};

/// Compares a reproduced table against the printed values bundled for
/// `target`. Stochastic targets get a structural check only.
GoldenReport check_golden(std::string_view target, const Frame& table);

/// Allowed absolute error for a printed number: 1e-4 relative, or half a unit
/// in its last printed digit, whichever is larger.
double golden_tolerance(std::string_view printed);

}  // namespace tidyfit
