#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>

namespace rangewalk {

inline constexpr int kMaxDim = 8;

// A point of Z^d. Coordinates beyond d are zero so equality is plain array
// equality regardless of dimension.
struct Point {
  std::array<std::int32_t, kMaxDim> c{};
  int d = 0;

  std::span<const std::int32_t> coords() const { return {c.data(), static_cast<std::size_t>(d)}; }
  std::int32_t operator[](int i) const { return c[i]; }

  friend bool operator==(const Point& a, const Point& b) {
    return a.d == b.d && a.c == b.c;
  }
};

inline Point make_point(int d, std::initializer_list<std::int32_t> coords) {
  Point p;
  p.d = d;
  int i = 0;
  for (auto v : coords) p.c[i++] = v;
  return p;
}

inline Point point_from(std::span<const std::int32_t> coords) {
  Point p;
  p.d = static_cast<int>(coords.size());
  for (int i = 0; i < p.d; ++i) p.c[i] = coords[i];
  return p;
}

// Unit steps are stored one byte each: axis in the high bits, sign in bit 0.
inline constexpr std::uint8_t encode_step(int axis, int sign) {
  return static_cast<std::uint8_t>((axis << 1) | (sign < 0 ? 1 : 0));
}

inline constexpr int step_axis(std::uint8_t code) { return code >> 1; }
inline constexpr int step_sign(std::uint8_t code) { return (code & 1) ? -1 : 1; }

inline void apply_step(std::int32_t* coords, std::uint8_t code) {
  coords[step_axis(code)] += step_sign(code);
}

inline double squared_norm(std::span<const std::int32_t> coords) {
  double s = 0.0;
  for (auto v : coords) s += static_cast<double>(v) * static_cast<double>(v);
  return s;
}

}  // namespace rangewalk
