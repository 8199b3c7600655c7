#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mildmix/arithmetic.hpp"
#include "mildmix/roof.hpp"

namespace mildmix {

/// A point (x, s) of the space under the roof, 0 <= s < f(x).
struct FlowPoint {
  CirclePoint x;
  double s = 0.0;
};

/// d((x, s), (y, t)) = ||x - y|| + |s - t|.
inline double metric(const FlowPoint& p, const FlowPoint& q) {
  return circle_distance(p.x, q.x) + std::abs(p.s - q.s);
}

/// The special flow built over a rotation under a roof function.
class SpecialFlow {
 public:
  /// Throws positivity_violation if the roof is not bounded away from 0.
  SpecialFlow(Rotation rot, RoofFunction f);

  const Rotation& rotation() const { return rot_; }
  const RoofFunction& roof() const { return f_; }
  const RoofBounds& bounds() const { return bounds_; }

  /// f^(n)(x): fast path, falling back to direct summation outside its window.
  double birkhoff(std::int64_t n, CirclePoint x) const;

  /// Throws out_of_range unless 0 <= p.s < f(p.x).
  void validate(const FlowPoint& p) const;

  /// T_t(x, s) = (T^n x, s + t - f^(n)(x)) with f^(n)(x) <= s + t < f^(n+1)(x).
  /// The returned point is checked against the roof exactly.
  FlowPoint advance(const FlowPoint& p, double t) const;

  /// Same result, also reporting the bracketing index n.
  FlowPoint advance(const FlowPoint& p, double t, std::int64_t& n) const;

 private:
  Rotation rot_;
  RoofFunction f_;
  RoofBounds bounds_;
  double mean_ = 1.0;
};

struct VolumeBox {
  double x_lo = 0.1, x_hi = 0.4;
  double s_lo = 0.2, s_hi = 0.9;
};

struct VolumeReport {
  double t = 0.0;
  std::int64_t samples = 0;
  double measure_box = 0.0;        ///< estimate of (mu x Leb)(B)
  double measure_preimage = 0.0;   ///< estimate of (mu x Leb)(T_t^{-1} B)
  double discrepancy = 0.0;        ///< measure_preimage - measure_box
  double standard_error = 0.0;     ///< paired Monte-Carlo error of the discrepancy
};

/// Paired Monte-Carlo comparison of B and T_t^{-1}B. Deterministic in the
/// seed regardless of the worker count.
VolumeReport volume_check(const SpecialFlow& flow, double t, std::int64_t samples,
                          std::uint64_t seed, const VolumeBox& box = {},
                          unsigned threads = 0);

struct OrbitSample {
  double t = 0.0;
  double x = 0.0;
  double s = 0.0;
};

/// Samples T_{k dt} p for k = 0..count-1.
std::vector<OrbitSample> flow_orbit(const SpecialFlow& flow, const FlowPoint& p, double dt,
                                    std::int64_t count);

}  // namespace mildmix
