#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "mildmix/circle.hpp"

namespace mildmix {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// Fractional bits kept for the serialized value of alpha.
inline constexpr int kAlphaBits = 256;

/// An irrational rotation x -> x + alpha given by a finite prefix of its
/// continued fraction [0; a_1, a_2, ...] with exact convergents p_n / q_n.
///
/// alpha itself is known through a certified rational bracket; the orbit
/// engine rotates by the nearest point of the 2^-64 lattice (see step()).
class Rotation {
 public:
  /// Expands alpha to `depth` partial quotients. Accepted spellings:
  ///   golden | silver | sqrt2m1      named quadratic irrationals
  ///   quad:P:D:Q                     (P + sqrt(D)) / Q
  ///   cf:a,b,c                       [0; a, b, c, a, b, c, ...]
  ///   p/q, 0.123..., 0x0.1f...       exact rationals (decimal and hex
  ///                                  literals are read as approximations
  ///                                  to half a unit in the last place)
  static Rotation expand(std::string_view alpha, int depth);

  /// Rebuilds a rotation from a serialized record and checks that the
  /// stored quotients agree with the stored value of alpha.
  static Rotation from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  int depth() const { return static_cast<int>(quotients_.size()); }

  /// a_1..a_K (index 0 holds a_1).
  const std::vector<std::int64_t>& partial_quotients() const {
    return quotients_;
  }
  /// p_0..p_K and q_0..q_K.
  const std::vector<BigInt>& numerators() const { return p_; }
  const std::vector<BigInt>& denominators() const { return q_; }

  /// q_n as a machine integer; throws insufficient_depth past K and
  /// out_of_range when it does not fit in 63 bits.
  std::int64_t q(int n) const;

  const BigRational& alpha_lower() const { return lower_; }
  const BigRational& alpha_upper() const { return upper_; }
  double alpha() const { return alpha_double_; }
  const std::string& alpha_hex() const { return alpha_hex_; }
  const std::string& source() const { return source_; }

  /// True when the input was an exact rational literal whose expansion is
  /// longer than the requested depth.
  bool exact_rational_input() const { return exact_rational_; }

  /// alpha rounded to the 2^-64 lattice; the rotation used by all orbit code.
  CirclePoint step() const { return step_; }

  /// T^n x.
  CirclePoint apply(CirclePoint x, std::int64_t n) const {
    return x + step_.times(n);
  }

 private:
  Rotation() = default;
  void finish(std::string source);

  std::vector<std::int64_t> quotients_;
  std::vector<BigInt> p_;
  std::vector<BigInt> q_;
  BigRational lower_;
  BigRational upper_;
  double alpha_double_ = 0.0;
  std::string alpha_hex_;
  std::string source_;
  bool exact_rational_ = false;
  CirclePoint step_;
};

/// C = max(a_1..a_K) + 1, the depth-K surrogate for sup a_n + 1.
std::int64_t bounded_type_constant(const Rotation& rot);

/// Result of the certified check of
///   1/(2 q_n q_{n+1}) < |alpha - p_n/q_n| < 1/(q_n q_{n+1}).
struct ConvergentBound {
  int n = 0;
  bool lower_holds = false;
  bool upper_holds = false;
  bool recurrence_holds = false;
  bool coprime = false;
};

/// Checks every n < K with exact rational arithmetic over the alpha bracket.
std::vector<ConvergentBound> check_convergent_bounds(const Rotation& rot);

/// Greedy Ostrowski expansion n = sum_j b_j q_j, j = 0..K-1.
/// Throws out_of_range unless 0 <= n < q_K.
std::vector<std::int64_t> ostrowski_digits(std::int64_t n, const Rotation& rot);

/// True when the digit string satisfies the Ostrowski legality rules:
/// 0 <= b_0 < a_1, 0 <= b_j <= a_{j+1}, and b_j = a_{j+1} forces b_{j-1} = 0.
bool ostrowski_legal(const std::vector<std::int64_t>& digits,
                     const Rotation& rot);

}  // namespace mildmix
