#include "rangewalk/walk.hpp"

#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "rangewalk/errors.hpp"
#include "rangewalk/rng.hpp"

namespace rangewalk {

namespace {

constexpr std::uint16_t kDumpVersion = 1;

void fill_side(std::int32_t* pos, int d, std::int64_t n_steps, Rng& rng) {
  // pos points at the origin; successive positions are written forward.
  const std::uint64_t n_dirs = 2 * static_cast<std::uint64_t>(d);
  for (std::int64_t i = 0; i < n_steps; ++i) {
    const std::uint64_t r = rng.next_below(n_dirs);
    const std::int32_t* prev = pos + i * d;
    std::int32_t* next = pos + (i + 1) * d;
    std::memcpy(next, prev, sizeof(std::int32_t) * d);
    apply_step(next, static_cast<std::uint8_t>(r));
  }
}

}  // namespace

WalkPath::WalkPath(int d, Sided sided, std::int64_t lo, std::int64_t hi,
                   std::uint64_t seed, std::vector<std::int32_t> positions)
    : d_(d), sided_(sided), lo_(lo), hi_(hi), seed_(seed), pos_(std::move(positions)) {}

std::uint8_t WalkPath::step_code(std::int64_t n) const {
  const std::int32_t* a = position(n);
  const std::int32_t* b = position(n + 1);
  for (int i = 0; i < d_; ++i) {
    if (b[i] != a[i]) return encode_step(i, b[i] - a[i]);
  }
  return 0;  // unreachable for nearest-neighbour paths
}

PointCodec WalkPath::codec(std::int64_t from, std::int64_t to,
                           std::int64_t rebase) const {
  std::int32_t mins[kMaxDim], maxs[kMaxDim];
  const std::int32_t* base = position(rebase);
  for (int i = 0; i < d_; ++i) {
    mins[i] = std::numeric_limits<std::int32_t>::max();
    maxs[i] = std::numeric_limits<std::int32_t>::min();
  }
  for (std::int64_t n = from; n <= to; ++n) {
    const std::int32_t* p = position(n);
    for (int i = 0; i < d_; ++i) {
      const std::int32_t v = p[i] - base[i];
      if (v < mins[i]) mins[i] = v;
      if (v > maxs[i]) maxs[i] = v;
    }
  }
  return PointCodec::fit(d_, {mins, static_cast<std::size_t>(d_)},
                         {maxs, static_cast<std::size_t>(d_)});
}

WalkPath gen_path(int d, std::int64_t n_steps, std::uint64_t seed, Sided sided) {
  if (d < 1 || d > kMaxDim) throw ConfigError("dimension must be in [1, 8]");
  if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");

  const std::int64_t total =
      sided == Sided::kOne ? n_steps + 1 : 2 * n_steps + 1;
  if (total > kMaxPathPoints) {
    throw CapacityError("path of " + std::to_string(total) +
                        " points exceeds the memory budget");
  }

  std::vector<std::int32_t> pos(static_cast<std::size_t>(total) * d, 0);
  const std::int64_t lo = sided == Sided::kOne ? 0 : -n_steps;

  // Forward walk S from stream 0.
  Rng forward(derive_stream(seed, 0));
  std::int32_t* origin = pos.data() + static_cast<std::size_t>(-lo) * d;
  fill_side(origin, d, n_steps, forward);

  if (sided == Sided::kTwo) {
    // Independent second walk S'; index -n holds S'_n.
    Rng backward(derive_stream(seed, 1));
    std::vector<std::int32_t> side(static_cast<std::size_t>(n_steps + 1) * d, 0);
    fill_side(side.data(), d, n_steps, backward);
    for (std::int64_t n = 1; n <= n_steps; ++n) {
      std::memcpy(pos.data() + static_cast<std::size_t>(n_steps - n) * d,
                  side.data() + static_cast<std::size_t>(n) * d,
                  sizeof(std::int32_t) * d);
    }
  }

  return WalkPath(d, sided, lo, sided == Sided::kOne ? n_steps : n_steps, seed,
                  std::move(pos));
}

namespace {

template <class T>
void write_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(buf[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void dump_path(const WalkPath& path, std::ostream& out) {
  if (path.sided() != Sided::kOne) {
    throw IoError("path dump supports one-sided paths; dump each side separately");
  }
  out.write("RWRW", 4);
  write_le<std::uint16_t>(out, kDumpVersion);
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(path.dim()));
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(path.hi()));
  write_le<std::uint64_t>(out, path.seed());
  for (std::int64_t n = 0; n < path.hi(); ++n) {
    const char code = static_cast<char>(path.step_code(n));
    out.write(&code, 1);
  }
  if (!out) throw IoError("failed to write path dump");
}

WalkPath load_path(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RWRW", 4) != 0) {
    throw IoError("bad path dump: missing RWRW magic");
  }
  const auto version = read_le<std::uint16_t>(in);
  if (version != kDumpVersion) throw IoError("unsupported path dump version");
  const int d = read_le<std::uint16_t>(in);
  const auto n_steps = static_cast<std::int64_t>(read_le<std::uint64_t>(in));
  const auto seed = read_le<std::uint64_t>(in);
  if (d < 1 || d > kMaxDim || n_steps < 0 || n_steps + 1 > kMaxPathPoints) {
    throw IoError("bad path dump header");
  }

  std::vector<std::int32_t> pos(static_cast<std::size_t>(n_steps + 1) * d, 0);
  for (std::int64_t n = 0; n < n_steps; ++n) {
    char code;
    in.read(&code, 1);
    std::int32_t* next = pos.data() + static_cast<std::size_t>(n + 1) * d;
    std::memcpy(next, pos.data() + static_cast<std::size_t>(n) * d,
                sizeof(std::int32_t) * d);
    apply_step(next, static_cast<std::uint8_t>(code));
  }
  if (!in) throw IoError("truncated path dump");
  return WalkPath(d, Sided::kOne, 0, n_steps, seed, std::move(pos));
}

}  // namespace rangewalk
