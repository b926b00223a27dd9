#include "rangewalk/cut_times.hpp"

#include <cmath>

#include "rangewalk/errors.hpp"
#include "rangewalk/point_index.hpp"

namespace rangewalk {

std::vector<std::int64_t> CutTimeSet::exact_indices() const {
  std::vector<std::int64_t> out;
  out.reserve(indices.size());
  for (auto n : indices) {
    if (is_exact(n)) out.push_back(n);
  }
  return out;
}

CutTimeSet cut_times(const WalkPath& path, Sided mode, double guard_fraction) {
  if (mode == Sided::kTwo && path.sided() != Sided::kTwo) {
    throw ConfigError("two-sided cut-times require a two-sided path");
  }
  const std::int64_t lo = mode == Sided::kOne ? 0 : path.lo();
  const std::int64_t hi = path.hi();

  // last_visit over the tested window, then a forward sweep: n is a cut-time
  // iff max_{s<=n} last_visit(S_s) <= n. One associative index, O(window).
  const PointCodec codec = path.codec(lo, hi, 0);
  PointMap<std::int64_t> last_visit(codec, static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t n = lo; n <= hi; ++n) {
    last_visit.find_or_insert(path.position(n), n) = n;
  }

  CutTimeSet out;
  out.window_lo = lo;
  out.window_hi = hi;
  const auto guard_of = [&](std::int64_t side_len) {
    return static_cast<std::int64_t>(std::ceil(guard_fraction * static_cast<double>(side_len)));
  };
  out.safe_hi = hi - guard_of(hi);
  out.safe_lo = (mode == Sided::kTwo && path.lo() < 0) ? lo + guard_of(-lo) : lo;

  std::int64_t latest_revisit = lo;
  for (std::int64_t n = lo; n < hi; ++n) {
    const std::int64_t last = *last_visit.find(path.position(n));
    if (last > latest_revisit) latest_revisit = last;
    if (latest_revisit <= n) out.indices.push_back(n);
  }
  return out;
}

}  // namespace rangewalk
