#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rangewalk/lattice.hpp"
#include "rangewalk/point_index.hpp"

namespace rangewalk {

enum class Sided { kOne, kTwo };

// Memory budget for a single path: positions are 4*d bytes per index.
inline constexpr std::int64_t kMaxPathPoints = 400'000'000;

// A nearest-neighbour lattice trajectory indexed by lo() <= n <= hi(), with
// index 0 at the origin. Two-sided paths serve negative indices from an
// independent second walk sharing the same master seed.
class WalkPath {
 public:
  WalkPath(int d, Sided sided, std::int64_t lo, std::int64_t hi,
           std::uint64_t seed, std::vector<std::int32_t> positions);

  int dim() const { return d_; }
  Sided sided() const { return sided_; }
  std::int64_t lo() const { return lo_; }
  std::int64_t hi() const { return hi_; }
  std::uint64_t seed() const { return seed_; }

  // Number of steps on the nonnegative side.
  std::int64_t forward_steps() const { return hi_; }

  const std::int32_t* position(std::int64_t n) const {
    return pos_.data() + static_cast<std::size_t>(n - lo_) * d_;
  }
  Point point(std::int64_t n) const {
    return point_from({position(n), static_cast<std::size_t>(d_)});
  }

  // Step code taking position n to position n+1.
  std::uint8_t step_code(std::int64_t n) const;

  // Codec fitted to the bounding box of a subrange of the path (inclusive),
  // optionally translated by -position(rebase).
  PointCodec codec(std::int64_t from, std::int64_t to, std::int64_t rebase) const;
  PointCodec codec() const { return codec(lo_, hi_, 0); }

 private:
  int d_;
  Sided sided_;
  std::int64_t lo_, hi_;
  std::uint64_t seed_;
  std::vector<std::int32_t> pos_;  // (hi-lo+1) * d coordinates
};

// Simple random walk on Z^d from the origin; i.i.d. uniform unit steps.
// Identical (d, n_steps, seed, sided) reproduce the path bit-for-bit, and a
// longer horizon extends the same path (streams are consumed sequentially).
// For two-sided paths n_steps is the horizon per side.
WalkPath gen_path(int d, std::int64_t n_steps, std::uint64_t seed,
                  Sided sided = Sided::kOne);

// Binary sidecar format for one-sided paths, for replay:
// "RWRW" | version u16 | d u16 | n_steps u64 | seed u64 | one byte per step.
void dump_path(const WalkPath& path, std::ostream& out);
WalkPath load_path(std::istream& in);

}  // namespace rangewalk
