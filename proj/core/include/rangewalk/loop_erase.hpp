#pragma once

#include <cstdint>
#include <vector>

#include "rangewalk/walk.hpp"

namespace rangewalk {

// Chronological loop erasure of S[0..n]: scan forward, and on revisiting a
// point currently in the erased path truncate back to its first occurrence.
// retained_times holds the (first-entry) time stamps of the surviving points.
struct LoopErasure {
  std::vector<std::int64_t> retained_times;
  std::int64_t edge_count() const {
    return static_cast<std::int64_t>(retained_times.size()) - 1;
  }
};

LoopErasure loop_erase(const WalkPath& path, std::int64_t n);

// Y_m for all m in [0, n] from a single forward scan.
std::vector<std::int64_t> loop_erase_profile(const WalkPath& path, std::int64_t n);

// Y'_n approximation: loop-erases S[0..horizon] and counts the surviving
// stamps that are <= n. The true Y' erases the infinite path, so this is
// exact only in the measure that no loop spans the horizon.
std::int64_t retained_count(const WalkPath& path, std::int64_t n, std::int64_t horizon);

// Number of distinct points among S_0, ..., S_n.
std::int64_t range_count(const WalkPath& path, std::int64_t n);

// Distinct-point counts at each of the (sorted) checkpoints, in one scan.
std::vector<std::int64_t> range_count_at(const WalkPath& path,
                                         const std::vector<std::int64_t>& checkpoints);

}  // namespace rangewalk
