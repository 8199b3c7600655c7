#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mildmix/arithmetic.hpp"
#include "mildmix/flow.hpp"
#include "mildmix/roof.hpp"

namespace mildmix {

/// Parameters of the divergence construction for one (rotation, roof, epsilon, N).
struct RatnerConfig {
  RatnerConfig(Rotation r, RoofFunction g) : rot(std::move(r)), f(std::move(g)) {}

  Rotation rot;
  RoofFunction f;
  std::int64_t C = 0;          ///< bounded-type constant at the computed depth
  int k = 0;                   ///< number of breakpoints
  double S = 0.0;              ///< sum of jumps
  std::vector<double> D;       ///< {sum n_i d_i : 0 <= n_i <= 2C+1}, sorted
  double p = 0.0;              ///< shift magnitude, p in (0, |S|) outside D and -D
  double epsilon = 0.0;
  std::int64_t N = 0;
  double gamma = 1.0;
  double kappa = 0.0;
  double delta = 0.0;
  int s0 = 0;
  double c_f = 0.0;            ///< roof bounds
  double C_f = 0.0;
  double ac_sup_at_s0 = 0.0;   ///< sampled smallness of the smooth part at s0
  double ac_variation = 0.0;   ///< Var(f_ac)
  std::int64_t max_scan = std::int64_t{1} << 28;  ///< longest admissible scan range

  double sigma() const { return S > 0 ? 1.0 : -1.0; }
  /// kappa for an arbitrary tolerance, same formula.
  double kappa_at(double eps) const;
  /// Base tolerance used under the flow: min(c eps / (8 (gamma + C_f)), eps / 16).
  double flow_base_epsilon() const;
  bool in_D(double d) const;

  nlohmann::json to_json() const;
};

/// Enumerates D, picks p as the midpoint of the largest gap of
/// (0, |S|) minus (D u -D), and computes kappa, s0 and delta.
/// Errors: zero_jump_sum, no_admissible_shift, positivity_violation,
/// insufficient_depth.
RatnerConfig build_config(const Rotation& rot, const RoofFunction& f, double epsilon,
                          std::int64_t N, double gamma = 1.0);

struct RatnerWitness {
  // pair, as given
  double x = 0.0;
  double y = 0.0;
  bool swapped = false;        ///< true when y lies before x on the short arc
  double distance = 0.0;       ///< ||x - y||
  double tolerance = 0.0;      ///< epsilon used for the base scan

  // scale and base interval
  int s = 0;
  std::int64_t q_s = 0;
  std::int64_t q_next = 0;
  bool scale_certified = false;  ///< exact check of the scale bracketing
  bool found = false;            ///< some n in [q_s, q_{s+1}] qualifies
  std::int64_t j_lo = 0;         ///< J = [j_lo, j_hi]
  std::int64_t j_hi = -1;
  double d = 0.0;                ///< constant value of the jump count on J
  double shift = 0.0;            ///< time shift for the pair in the given order
  double max_deviation = 0.0;    ///< max over J of the tolerance quantity
  double ratio = 0.0;            ///< |J| / q_{s+1}
  std::int64_t monotone_violations = 0;
  bool d_in_D = false;
  bool kappa_ok = false;
  bool base_success = false;

  std::int64_t length() const { return found ? j_hi - j_lo + 1 : 0; }
  std::int64_t M_prime() const { return j_lo; }
  std::int64_t L_prime() const { return found ? j_hi - j_lo : 0; }

  // flow-level data (flow_witness only)
  bool flow_checked = false;
  double s1 = 0.0;               ///< heights of the two flow points
  double s2 = 0.0;
  double M = 0.0;
  double L = 0.0;
  std::int64_t k_lo = 0;
  std::int64_t k_hi = -1;
  std::int64_t hits = 0;
  double hit_fraction = 0.0;
  std::int64_t b_size = 0;
  std::int64_t b_violations = 0;
  bool window_ratio_ok = false;  ///< L/M >= (c/C) L'/M'
  bool flow_success = false;

  std::string failure;           ///< empty on success
};

/// Base-level witness at the configured epsilon. Scans the part of
/// [q_s, q_{s+1}] where the tolerance can be met.
/// Errors: degenerate_pair (x == y), out_of_delta (||x - y|| >= delta).
RatnerWitness base_witness(const RatnerConfig& cfg, CirclePoint x, CirclePoint y);
/// Same with an explicit tolerance.
RatnerWitness base_witness(const RatnerConfig& cfg, CirclePoint x, CirclePoint y,
                           double tolerance);

/// True when ||x - y - m alpha|| < 1e-12 for some |m| <= min(q_K, 2^31).
bool same_orbit(const Rotation& rot, CirclePoint x, CirclePoint y);

/// Flow-level witness: base scan at flow_base_epsilon(), window conversion and
/// orbit-pair simulation at gamma-multiples.
/// Errors: degenerate_pair, out_of_delta, same_orbit, out_of_range (point not
/// under the roof).
RatnerWitness flow_witness(const RatnerConfig& cfg, const FlowPoint& p1, const FlowPoint& p2);

struct ScanOptions {
  std::int64_t pairs = 1000;
  std::uint64_t seed = 0;
  bool flow = true;         ///< also run the flow-level witness
  unsigned threads = 0;
};

struct PairOutcome {
  std::int64_t index = 0;
  RatnerWitness base;
  std::optional<RatnerWitness> flow;
  int resampled = 0;        ///< draws rejected as same-orbit or off the roof
  bool success = false;
};

struct ScanReport {
  std::vector<PairOutcome> outcomes;
  double success_rate = 0.0;
  nlohmann::json to_json(const RatnerConfig& cfg) const;
};

/// Samples pairs with 0 < ||x - y|| < delta (flow points with heights in
/// X(eps) and metric distance < delta when opts.flow) and runs the witnesses.
/// Pair i uses its own seed derived from (seed, i); the report does not depend
/// on the worker count. Throws out_of_range when pairs < 1.
ScanReport ratner_scan(const RatnerConfig& cfg, const ScanOptions& opts);

}  // namespace mildmix
