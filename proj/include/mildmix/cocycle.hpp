#pragma once

#include <cstdint>
#include <vector>

#include "mildmix/arithmetic.hpp"
#include "mildmix/circle.hpp"
#include "mildmix/roof.hpp"

namespace mildmix {

/// Largest |n| accepted by the lattice-counting fast path.
inline constexpr std::int64_t kFastWindow = std::int64_t{1} << 31;

/// Number of j in [0, n) with start + j*step in the forward arc (a, b].
/// Exact; O(log) via floor sums over the 2^-64 lattice. a == b is the
/// empty arc.
std::int64_t count_in_arc(CirclePoint start, CirclePoint step, std::int64_t n,
                          CirclePoint a, CirclePoint b);

/// sum_{j<n} {start + j*step}, exact up to the final rounding to double.
double fractional_sum(CirclePoint start, CirclePoint step, std::int64_t n);

/// f^(n)(x) by direct compensated summation:
///   n > 0:  sum_{j=0}^{n-1} f(T^j x)
///   n = 0:  0
///   n < 0:  -sum_{j=1}^{|n|} f(T^{-j} x)
double birkhoff_naive(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                      CirclePoint x);

/// f^(n)(x) with the piecewise-linear part summed exactly by lattice
/// counting and the smooth part in closed form where possible.
/// Throws window_exceeded when |n| > kFastWindow.
double birkhoff_fast(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                     CirclePoint x);

/// Piecewise-linear part only: n*c + sum_i d_i sum_j {T^j x - beta_i}.
double birkhoff_pl_fast(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                        CirclePoint x);

/// d_n(x, y): sum of d_i over pairs (i, 0 <= j < n) with beta_i - j*alpha in
/// the forward arc (x, y]. Throws degenerate_pair when x == y.
double jump_count(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                  CirclePoint x, CirclePoint y);

/// n*S*(y - x) - d_n(x, y), with y - x the forward arc length; equals
/// f_pl^(n)(y) - f_pl^(n)(x).
double pl_difference(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                     CirclePoint x, CirclePoint y);

struct SmallnessSample {
  int s = 0;
  std::int64_t q_s = 0;
  std::int64_t q_next = 0;
  double sup = 0.0;       ///< sampled sup of |f^(n)(y) - f^(n)(x)|
  std::int64_t arg_n = 0;
  double arg_x = 0.0;
  double arg_y = 0.0;
};

struct SmallnessGrid {
  int x_points = 256;
  int offsets = 16;  ///< offsets h = +-(k/offsets)/q_s, k = 1..offsets-1, plus 0.999/q_s
};

/// Sampled sup over 1 <= n <= q_{s+1}, 0 < ||y - x|| < 1/q_s of
/// |g^(n)(y) - g^(n)(x)| on a deterministic grid.
SmallnessSample ac_uniform_smallness(const Rotation& rot, const RoofFunction& g, int s,
                                     const SmallnessGrid& grid = {});

struct SmallnessTrend {
  std::vector<SmallnessSample> samples;
  bool strictly_decreasing = true;
};

SmallnessTrend ac_smallness_trend(const Rotation& rot, const RoofFunction& g, int s_from,
                                  int s_to, const SmallnessGrid& grid = {});

/// One row of a Birkhoff scan.
struct ScanRow {
  std::int64_t n = 0;
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

}  // namespace mildmix
