#pragma once

#include <cmath>
#include <cstdint>
#include <compare>

namespace mildmix {

/// A point of the circle R/Z stored as a 64-bit binary fraction.
///
/// Addition wraps modulo 2^64, so orbits x + j*alpha of the rotation are
/// computed exactly; interval membership of orbit points is an integer
/// comparison and never depends on rounding.
class CirclePoint {
 public:
  constexpr CirclePoint() = default;

  static constexpr CirclePoint from_raw(std::uint64_t raw) {
    CirclePoint p;
    p.raw_ = raw;
    return p;
  }

  /// Reduces x modulo 1 and truncates to the 2^-64 lattice.
  static CirclePoint from_double(double x) {
    double frac = x - std::floor(x);
    if (!(frac < 1.0)) frac = 0.0;  // x slightly below an integer
    return from_raw(static_cast<std::uint64_t>(std::ldexp(frac, 64)));
  }

  constexpr std::uint64_t raw() const { return raw_; }

  /// Value in [0, 1); truncation keeps the result strictly below 1.
  double to_double() const {
    return static_cast<double>(raw_ >> 11) * 0x1p-53;
  }

  constexpr CirclePoint operator+(CirclePoint o) const {
    return from_raw(raw_ + o.raw_);
  }
  constexpr CirclePoint operator-(CirclePoint o) const {
    return from_raw(raw_ - o.raw_);
  }
  constexpr CirclePoint operator-() const { return from_raw(0 - raw_); }
  constexpr CirclePoint& operator+=(CirclePoint o) {
    raw_ += o.raw_;
    return *this;
  }

  /// k-fold sum, exact modulo 1.
  constexpr CirclePoint times(std::int64_t k) const {
    return from_raw(raw_ * static_cast<std::uint64_t>(k));
  }

  friend constexpr auto operator<=>(CirclePoint, CirclePoint) = default;

 private:
  std::uint64_t raw_ = 0;
};

/// ||t||: distance from t to the nearest integer, in [0, 1/2].
inline double dist_to_int(double t) {
  double r = t - std::floor(t);
  return r > 0.5 ? 1.0 - r : r;
}

/// ||a - b|| on the circle.
inline double circle_distance(CirclePoint a, CirclePoint b) {
  std::uint64_t d = (a - b).raw();
  std::uint64_t e = 0 - d;
  return static_cast<double>(d < e ? d : e) * 0x1p-64;
}

/// Forward arc length from a to b, in [0, 1).
inline double forward_arc(CirclePoint a, CirclePoint b) {
  return static_cast<double>((b - a).raw()) * 0x1p-64;
}

}  // namespace mildmix
