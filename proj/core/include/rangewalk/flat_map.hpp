#pragma once

#include <cstdint>
#include <vector>

#include "rangewalk/rng.hpp"

namespace rangewalk {

struct Key128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  friend bool operator==(const Key128& a, const Key128& b) {
    return a.hi == b.hi && a.lo == b.lo;
  }
};

namespace detail {

template <class K>
struct KeyOps;

template <>
struct KeyOps<std::uint64_t> {
  // Packed keys keep the top bit clear, so all-ones is a safe empty marker.
  static constexpr std::uint64_t empty() { return ~0ULL; }
  static std::uint64_t hash(std::uint64_t k) { return hash_mix(k); }
};

template <>
struct KeyOps<Key128> {
  static Key128 empty() { return {~0ULL, ~0ULL}; }
  static std::uint64_t hash(const Key128& k) {
    return hash_mix(k.lo ^ hash_mix(k.hi));
  }
};

}  // namespace detail

// Open-addressing hash map with linear probing and a fixed hash function.
// Deterministic by construction (no per-process hash seeding), which keeps
// every downstream result a pure function of the master seed.
template <class Key, class Value>
class FlatMap {
 public:
  FlatMap() { rehash(kMinCapacity); }
  explicit FlatMap(std::size_t expected) {
    std::size_t cap = kMinCapacity;
    while (cap * 7 < expected * 10) cap <<= 1;  // target load factor 0.7
    rehash(cap);
  }

  std::size_t size() const { return size_; }

  void reserve(std::size_t expected) {
    std::size_t cap = capacity();
    while (cap * 7 < expected * 10) cap <<= 1;
    if (cap != capacity()) grow_to(cap);
  }

  // Returns the value slot for key, inserting `init` if absent.
  Value& find_or_insert(const Key& key, const Value& init) {
    if ((size_ + 1) * 10 > capacity() * 7) grow_to(capacity() * 2);
    std::size_t i = probe_start(key);
    while (true) {
      if (keys_[i] == detail::KeyOps<Key>::empty()) {
        keys_[i] = key;
        values_[i] = init;
        ++size_;
        return values_[i];
      }
      if (keys_[i] == key) return values_[i];
      i = (i + 1) & mask_;
    }
  }

  Value* find(const Key& key) {
    std::size_t i = probe_start(key);
    while (true) {
      if (keys_[i] == detail::KeyOps<Key>::empty()) return nullptr;
      if (keys_[i] == key) return &values_[i];
      i = (i + 1) & mask_;
    }
  }

  const Value* find(const Key& key) const {
    return const_cast<FlatMap*>(this)->find(key);
  }

  bool contains(const Key& key) const { return find(key) != nullptr; }

  // Removes a key that is known to be present (used by loop erasure when a
  // suffix of the erased path is dropped). Standard backward-shift deletion.
  void erase_existing(const Key& key) {
    std::size_t i = probe_start(key);
    while (!(keys_[i] == key)) i = (i + 1) & mask_;
    std::size_t hole = i;
    std::size_t j = (i + 1) & mask_;
    while (!(keys_[j] == detail::KeyOps<Key>::empty())) {
      const std::size_t home = detail::KeyOps<Key>::hash(keys_[j]) & mask_;
      // Shift back unless the element's home position lies in (hole, j].
      const bool keep = ((j - home) & mask_) >= ((j - hole) & mask_);
      if (keep) {
        keys_[hole] = keys_[j];
        values_[hole] = values_[j];
        hole = j;
      }
      j = (j + 1) & mask_;
    }
    keys_[hole] = detail::KeyOps<Key>::empty();
    --size_;
  }

 private:
  static constexpr std::size_t kMinCapacity = 16;

  std::size_t capacity() const { return keys_.size(); }
  std::size_t probe_start(const Key& key) const {
    return detail::KeyOps<Key>::hash(key) & mask_;
  }

  void rehash(std::size_t cap) {
    keys_.assign(cap, detail::KeyOps<Key>::empty());
    values_.assign(cap, Value{});
    mask_ = cap - 1;
    size_ = 0;
  }

  void grow_to(std::size_t cap) {
    std::vector<Key> old_keys = std::move(keys_);
    std::vector<Value> old_values = std::move(values_);
    rehash(cap);
    for (std::size_t i = 0; i < old_keys.size(); ++i) {
      if (!(old_keys[i] == detail::KeyOps<Key>::empty())) {
        find_or_insert(old_keys[i], old_values[i]);
      }
    }
  }

  std::vector<Key> keys_;
  std::vector<Value> values_;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

}  // namespace rangewalk
