#pragma once

#include <cstdint>
#include <vector>

#include "rangewalk/walk.hpp"

namespace rangewalk {

// Cut-times of a path restricted to a generated window. An index n qualifies
// when no point visited at a time <= n inside the window is revisited after n.
// Indices outside [safe_lo, safe_hi] are candidates only: the quantifier of
// the defining set runs over times the window never generated, so a revisit
// there could still disqualify them.
struct CutTimeSet {
  std::vector<std::int64_t> indices;  // strictly increasing, windowed test passed
  std::int64_t window_lo = 0;
  std::int64_t window_hi = 0;
  std::int64_t safe_lo = 0;
  std::int64_t safe_hi = 0;

  bool is_exact(std::int64_t n) const { return n >= safe_lo && n <= safe_hi; }
  std::vector<std::int64_t> exact_indices() const;
};

// Detects cut-times of `path` in one or two-sided mode. One-sided mode tests
// S[0,n] against S[n+1,hi] (usable on either kind of path); two-sided mode
// tests S[lo,n] against S[n+1,hi] and requires a two-sided path. The guard
// fraction trims the exact interval at every truncated window end.
CutTimeSet cut_times(const WalkPath& path, Sided mode, double guard_fraction = 0.1);

}  // namespace rangewalk
