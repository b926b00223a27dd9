#pragma once

#include <bit>
#include <cstdint>
#include <span>

#include "rangewalk/errors.hpp"
#include "rangewalk/flat_map.hpp"
#include "rangewalk/lattice.hpp"

namespace rangewalk {

// Packs lattice points into hash keys. Coordinates are offset by the bounding
// box minimum and packed with per-axis bit widths; whenever the box volume
// fits 63 bits this yields a single 64-bit key (the common case: d <= 4 at any
// realistic horizon, d = 5 up to boxes of side ~6000). Larger boxes fall back
// to a wide key with fixed per-axis budgets.
class PointCodec {
 public:
  PointCodec() = default;

  static PointCodec fit(int d, std::span<const std::int32_t> mins,
                        std::span<const std::int32_t> maxs) {
    PointCodec c;
    c.d_ = d;
    int total = 0;
    for (int i = 0; i < d; ++i) {
      c.min_[i] = mins[i];
      const auto extent =
          static_cast<std::uint64_t>(static_cast<std::int64_t>(maxs[i]) - mins[i]);
      c.bits_[i] = extent == 0 ? 1 : std::bit_width(extent);
      total += c.bits_[i];
    }
    if (total <= 63) {
      c.wide_ = false;
      return c;
    }
    c.wide_ = true;
    const int per_axis = d <= 6 ? 21 : 126 / d;
    for (int i = 0; i < d; ++i) {
      const std::int64_t extent =
          static_cast<std::int64_t>(maxs[i]) - static_cast<std::int64_t>(mins[i]);
      if (extent >= (std::int64_t{1} << per_axis)) {
        throw CapacityError("lattice bounding box too large for point keys");
      }
      c.bits_[i] = per_axis;
    }
    return c;
  }

  bool wide() const { return wide_; }
  int dim() const { return d_; }

  std::uint64_t pack64(const std::int32_t* p) const {
    std::uint64_t key = 0;
    for (int i = 0; i < d_; ++i) {
      key = (key << bits_[i]) |
            static_cast<std::uint64_t>(static_cast<std::int64_t>(p[i]) - min_[i]);
    }
    return key;
  }

  Key128 pack128(const std::int32_t* p) const {
    unsigned __int128 key = 0;
    for (int i = 0; i < d_; ++i) {
      key = (key << bits_[i]) |
            static_cast<unsigned __int128>(static_cast<std::int64_t>(p[i]) - min_[i]);
    }
    return {static_cast<std::uint64_t>(key >> 64), static_cast<std::uint64_t>(key)};
  }

 private:
  int d_ = 0;
  bool wide_ = false;
  std::int32_t min_[kMaxDim] = {};
  int bits_[kMaxDim] = {};
};

// Associative point -> value lookup used by cut-time detection, loop erasure
// and graph construction. Narrow or wide keyed depending on the codec.
template <class Value>
class PointMap {
 public:
  PointMap() = default;
  PointMap(const PointCodec& codec, std::size_t expected) : codec_(codec) {
    if (codec_.wide()) {
      wide_ = FlatMap<Key128, Value>(expected);
    } else {
      narrow_ = FlatMap<std::uint64_t, Value>(expected);
    }
  }

  Value& find_or_insert(const std::int32_t* p, const Value& init) {
    if (codec_.wide()) return wide_.find_or_insert(codec_.pack128(p), init);
    return narrow_.find_or_insert(codec_.pack64(p), init);
  }

  Value* find(const std::int32_t* p) {
    if (codec_.wide()) return wide_.find(codec_.pack128(p));
    return narrow_.find(codec_.pack64(p));
  }

  const Value* find(const std::int32_t* p) const {
    return const_cast<PointMap*>(this)->find(p);
  }

  void erase_existing(const std::int32_t* p) {
    if (codec_.wide()) {
      wide_.erase_existing(codec_.pack128(p));
    } else {
      narrow_.erase_existing(codec_.pack64(p));
    }
  }

  std::size_t size() const { return codec_.wide() ? wide_.size() : narrow_.size(); }

 private:
  PointCodec codec_;
  FlatMap<std::uint64_t, Value> narrow_;
  FlatMap<Key128, Value> wide_;
};

}  // namespace rangewalk
