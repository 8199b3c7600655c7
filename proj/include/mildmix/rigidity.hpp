#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "mildmix/arithmetic.hpp"
#include "mildmix/flow.hpp"
#include "mildmix/roof.hpp"

namespace mildmix {

struct NearReturnOptions {
  bool include_zero = false;  ///< also consider j = 0
};

/// All j in the window ((t - eps)/C_f, (t + eps)/c_f) with |f^(j)(x) - t| < eps,
/// found by one monotone accumulation of f^(j)(x). j >= 1 unless include_zero.
/// Throws out_of_range unless t > 0 and 0 < eps < c_f.
std::vector<std::int64_t> near_return_indices(const Rotation& rot, const RoofFunction& f,
                                              CirclePoint x, double t, double eps,
                                              NearReturnOptions opts = {});

/// Proportion of the equispaced grid x_i = i / grid_size whose near-return
/// set is non-empty. Throws out_of_range when grid_size < 1000.
double measure_B(const Rotation& rot, const RoofFunction& f, double t, double eps,
                 std::int64_t grid_size, NearReturnOptions opts = {}, unsigned threads = 0);

struct RigidityRow {
  double t = 0.0;
  double epsilon = 0.0;
  double mu_hat = 0.0;
  double window_lo = 0.0;  ///< (t - eps) / C_f
  double window_hi = 0.0;  ///< (t + eps) / c_f
};

struct RigidityProfile {
  std::vector<RigidityRow> rows;
  double epsilon = 0.0;
  std::int64_t grid_size = 0;
  bool include_zero = false;
  double threshold = 0.0;   ///< caller-supplied rigidity threshold u
  double sup = 0.0;         ///< max over rows of mu_hat (0 when empty)
  double argmax = 0.0;      ///< time attaining sup
  bool flag = false;        ///< sup >= threshold
  double bound = 0.0;       ///< (32 k C / (|S| c^2)) (c + V) eps + eps; inf when S = 0

  nlohmann::json summary_json() const;
};

/// Scans all times at once: per grid point, the increasing sequence f^(j)(x)
/// is merged against the sorted times. Results are independent of the worker
/// count.
RigidityProfile rigidity_scan(const Rotation& rot, const RoofFunction& f,
                              const std::vector<double>& times, double eps,
                              std::int64_t grid_size, double threshold,
                              NearReturnOptions opts = {}, unsigned threads = 0);

/// (32 k C / (|S| c^2)) (c + V) eps + eps.
double nonrigidity_bound(int k, std::int64_t C, double S, double c, double V, double eps);

struct ContainmentReport {
  std::int64_t samples = 0;
  std::int64_t returns = 0;     ///< sampled points of A that return to A at time t
  std::int64_t violations = 0;  ///< returns whose base point is not in B_t
};

/// Samples the strip A = {(x, s): 0 <= s < eps}, flows for time t and checks
/// that every point landing back in A has its base point in B_t (all j >= 0).
ContainmentReport containment_check(const SpecialFlow& flow, double t, double eps,
                                    std::int64_t samples, std::uint64_t seed);

}  // namespace mildmix
