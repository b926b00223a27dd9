#include "rangewalk/loop_erase.hpp"

#include "rangewalk/errors.hpp"
#include "rangewalk/point_index.hpp"

namespace rangewalk {

namespace {

struct EraseState {
  PointMap<std::uint32_t> position_in_path;  // point -> index into retained
  std::vector<std::int64_t> retained;        // surviving time stamps

  EraseState(const WalkPath& path, std::int64_t n)
      : position_in_path(path.codec(0, n, 0), static_cast<std::size_t>(n) + 1) {}

  void feed(const WalkPath& path, std::int64_t m) {
    const std::int32_t* p = path.position(m);
    const auto slot = static_cast<std::uint32_t>(retained.size());
    std::uint32_t& at = position_in_path.find_or_insert(p, slot);
    if (at != slot) {
      // Revisit: drop everything after the first occurrence. Stamps of kept
      // entries are not updated, so the first visit survives.
      for (std::size_t i = at + 1; i < retained.size(); ++i) {
        position_in_path.erase_existing(path.position(retained[i]));
      }
      retained.resize(at + 1);
      return;
    }
    retained.push_back(m);
  }
};

void check_range(const WalkPath& path, std::int64_t n) {
  if (n < 0 || n > path.hi()) throw ConfigError("index outside generated horizon");
}

}  // namespace

LoopErasure loop_erase(const WalkPath& path, std::int64_t n) {
  check_range(path, n);
  EraseState state(path, n);
  for (std::int64_t m = 0; m <= n; ++m) state.feed(path, m);
  return LoopErasure{std::move(state.retained)};
}

std::vector<std::int64_t> loop_erase_profile(const WalkPath& path, std::int64_t n) {
  check_range(path, n);
  EraseState state(path, n);
  std::vector<std::int64_t> y(static_cast<std::size_t>(n) + 1);
  for (std::int64_t m = 0; m <= n; ++m) {
    state.feed(path, m);
    y[static_cast<std::size_t>(m)] = static_cast<std::int64_t>(state.retained.size()) - 1;
  }
  return y;
}

std::int64_t retained_count(const WalkPath& path, std::int64_t n, std::int64_t horizon) {
  check_range(path, horizon);
  if (n > horizon) throw ConfigError("retained_count requires n <= horizon");
  const LoopErasure erased = loop_erase(path, horizon);
  std::int64_t count = 0;
  for (auto t : erased.retained_times) {
    if (t <= n) ++count;
  }
  return count;
}

std::int64_t range_count(const WalkPath& path, std::int64_t n) {
  check_range(path, n);
  PointMap<std::uint8_t> seen(path.codec(0, n, 0), static_cast<std::size_t>(n) + 1);
  for (std::int64_t m = 0; m <= n; ++m) {
    seen.find_or_insert(path.position(m), 0);
  }
  return static_cast<std::int64_t>(seen.size());
}

std::vector<std::int64_t> range_count_at(const WalkPath& path,
                                         const std::vector<std::int64_t>& checkpoints) {
  if (checkpoints.empty()) return {};
  const std::int64_t n = checkpoints.back();
  check_range(path, n);
  PointMap<std::uint8_t> seen(path.codec(0, n, 0), static_cast<std::size_t>(n) + 1);
  std::vector<std::int64_t> out;
  out.reserve(checkpoints.size());
  std::size_t next = 0;
  for (std::int64_t m = 0; m <= n && next < checkpoints.size(); ++m) {
    seen.find_or_insert(path.position(m), 0);
    while (next < checkpoints.size() && checkpoints[next] == m) {
      out.push_back(static_cast<std::int64_t>(seen.size()));
      ++next;
    }
  }
  return out;
}

}  // namespace rangewalk
