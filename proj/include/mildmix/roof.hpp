#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

#include "mildmix/circle.hpp"

namespace mildmix {

/// One primitive of the absolutely continuous part, supported on [lo, hi).
///   poly: sum_k params[k] * (x - lo)^k
///   trig: params[0] * sin(2*pi*params[1]*x + params[2])
struct AcSegment {
  enum class Kind { poly, trig };

  Kind kind = Kind::poly;
  std::vector<double> params;
  double lo = 0.0;
  double hi = 1.0;

  bool covers(double x) const { return lo <= x && x < hi; }
  double value(double x) const;
  double derivative(double x) const;
  /// Integral over [lo, hi).
  double integral() const;
  /// Upper bound for |derivative| on the support.
  double derivative_bound() const;
  /// Total variation on [a, b], a subinterval of the support.
  double variation(double a, double b) const;
};

struct RoofBounds {
  double lower = 0.0;      ///< certified lower bound c_f <= inf f
  double upper = 0.0;      ///< certified upper bound C_f >= sup f
  double variation = 0.0;  ///< V >= Var(f) over the fundamental interval [0, 1)
};

/// Piecewise absolutely continuous function on the circle,
///
///   f(x) = c + sum_i d_i {x - beta_i} + g(x),
///
/// where g is a continuous sum of AcSegment primitives. The jump of f at
/// beta_i is d_i = f(beta_i-) - f(beta_i+), and f is right-continuous there.
///
/// The same type holds the pieces returned by decompose(); the absolutely
/// continuous piece need not be positive, so positivity is only enforced by
/// bounds().
class RoofFunction {
 public:
  /// Coincident breakpoints are merged with summed jumps; zero jumps are
  /// dropped. Throws schema_violation when g is not continuous on the circle.
  RoofFunction(std::vector<double> breakpoints, std::vector<double> jumps,
               double constant, std::vector<AcSegment> segments = {});

  /// f(x) = x + 1: one unit jump at 0.
  static RoofFunction canonical();
  static RoofFunction constant_roof(double value);

  static RoofFunction from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  double eval(CirclePoint x) const { return pl_value(x) + ac_value(x.to_double()); }
  double eval(double x) const { return eval(CirclePoint::from_double(x)); }
  /// f(x-).
  double left_limit(CirclePoint x) const;

  /// c + sum_i d_i {x - beta_i}.
  double pl_value(CirclePoint x) const;
  /// g(x).
  double ac_value(double x) const;

  double sum_of_jumps() const { return jump_sum_; }
  double mean() const;

  /// (f_pl, f_ac) with f_pl = c' + sum_i d_i {x - beta_i} and f_ac = f - f_pl
  /// of zero mean.
  std::pair<RoofFunction, RoofFunction> decompose() const;

  /// Throws positivity_violation unless the certified lower bound is > 0.
  RoofBounds bounds() const;
  /// Same numbers without the positivity requirement.
  const RoofBounds& raw_bounds() const { return bounds_; }

  const std::vector<CirclePoint>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& jumps() const { return jumps_; }
  double constant() const { return constant_; }
  const std::vector<AcSegment>& segments() const { return segments_; }
  bool has_ac_part() const { return !segments_.empty(); }
  int jump_count() const { return static_cast<int>(jumps_.size()); }

 private:
  double ac_left(double x) const;
  void validate_continuity() const;
  RoofBounds compute_bounds() const;

  std::vector<CirclePoint> breakpoints_;
  std::vector<double> jumps_;
  double constant_ = 0.0;
  std::vector<AcSegment> segments_;
  double jump_sum_ = 0.0;
  RoofBounds bounds_;
};

}  // namespace mildmix
