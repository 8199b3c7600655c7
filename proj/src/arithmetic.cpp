#include "mildmix/arithmetic.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <optional>

#include "mildmix/errors.hpp"

namespace mildmix {

namespace {

using boost::multiprecision::numerator;
using boost::multiprecision::denominator;

// Bracket width targeted for irrational sources: far below the 2^-256
// serialization grid.
constexpr int kBracketBits = kAlphaBits + 64;

[[noreturn]] void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t to_quotient(const BigInt& a) {
  if (a < 1 || a > std::numeric_limits<std::int64_t>::max())
    fail(ErrorKind::out_of_range, "partial quotient does not fit in 64 bits");
  return a.convert_to<std::int64_t>();
}

/// Quadratic irrational (P + sqrt(D)) / Q with Q | D - P^2.
class SurdExpansion {
 public:
  SurdExpansion(BigInt p, BigInt d, BigInt q)
      : p_(std::move(p)), d_(std::move(d)), q_(std::move(q)) {
    if (d_ <= 0) fail(ErrorKind::schema_violation, "quad: D must be positive");
    if (q_ == 0) fail(ErrorKind::schema_violation, "quad: Q must be non-zero");
    root_ = boost::multiprecision::sqrt(d_);
    if (root_ * root_ == d_)
      fail(ErrorKind::rational_detected, "quad: D is a perfect square");
    if ((d_ - p_ * p_) % q_ != 0) {
      BigInt aq = q_ < 0 ? BigInt(-q_) : q_;
      p_ *= aq;
      d_ *= aq * aq;
      q_ *= aq;
      root_ = boost::multiprecision::sqrt(d_);
    }
  }

  BigInt next() {
    BigInt a = q_ > 0 ? floor_div(p_ + root_, q_)
                      : BigInt(-(floor_div(p_ + root_, -q_) + 1));
    BigInt p_next = a * q_ - p_;
    q_ = (d_ - p_next * p_next) / q_;
    p_ = p_next;
    return a;
  }

 private:
  BigInt p_, d_, q_, root_;
};

std::vector<BigInt> rational_expansion(BigRational r) {
  std::vector<BigInt> out;
  BigInt num = numerator(r);
  BigInt den = denominator(r);
  for (;;) {
    BigInt a = floor_div(num, den);
    out.push_back(a);
    BigInt rem = num - a * den;
    if (rem == 0) break;
    num = den;
    den = rem;
  }
  return out;
}

struct Expansion {
  std::vector<std::int64_t> quotients;
  BigRational lower;
  BigRational upper;
  bool exact_rational = false;
};

template <class Next>
Expansion irrational_expansion(Next&& next, int depth) {
  BigInt a0 = next();
  if (a0 != 0) fail(ErrorKind::out_of_range, "alpha must lie in (0, 1)");
  Expansion e;
  BigInt p_prev = 1, p = 0, q_prev = 0, q = 1;
  BigInt target = BigInt(1) << kBracketBits;
  for (;;) {
    BigInt a = next();
    std::int64_t ai = to_quotient(a);
    if (static_cast<int>(e.quotients.size()) < depth) e.quotients.push_back(ai);
    BigInt p_next = a * p + p_prev;
    BigInt q_next = a * q + q_prev;
    p_prev = p;
    p = p_next;
    q_prev = q;
    q = q_next;
    if (static_cast<int>(e.quotients.size()) >= depth && q * q_prev > target)
      break;
  }
  BigRational a(p_prev, q_prev);
  BigRational b(p, q);
  e.lower = std::min(a, b);
  e.upper = std::max(a, b);
  return e;
}

/// Exact rational r, read either as exact (half_width == 0) or as the
/// interval [r - half_width, r + half_width].
Expansion rational_source(const BigRational& r, const BigRational& half_width,
                          int depth) {
  if (r <= 0 || r >= 1) fail(ErrorKind::out_of_range, "alpha must lie in (0, 1)");
  std::vector<BigInt> exact = rational_expansion(r);
  int length = static_cast<int>(exact.size()) - 1;  // a_0 excluded
  if (length <= depth)
    fail(ErrorKind::rational_detected,
         "continued fraction of a rational alpha terminates after " +
             std::to_string(length) + " quotients (rotation is not ergodic)");
  Expansion e;
  e.exact_rational = true;
  if (half_width == 0) {
    for (int n = 1; n <= depth; ++n) e.quotients.push_back(to_quotient(exact[n]));
    e.lower = e.upper = r;
    return e;
  }
  BigRational lo = r - half_width;
  BigRational hi = r + half_width;
  if (lo <= 0 || hi >= 1) fail(ErrorKind::precision_exhausted, "literal too short");
  std::vector<BigInt> el = rational_expansion(lo);
  std::vector<BigInt> eh = rational_expansion(hi);
  // Numbers sharing a continued-fraction prefix form an interval, so the
  // common prefix of the endpoints is certified, except possibly its last
  // term when an endpoint terminates there.
  std::size_t common = 0;
  while (common < el.size() && common < eh.size() && el[common] == eh[common])
    ++common;
  int certified = static_cast<int>(common) - 2;
  if (certified < depth)
    fail(ErrorKind::precision_exhausted,
         "literal certifies only " + std::to_string(std::max(certified, 0)) +
             " partial quotients, " + std::to_string(depth) + " requested");
  for (int n = 1; n <= depth; ++n) e.quotients.push_back(to_quotient(exact[n]));
  e.lower = lo;
  e.upper = hi;
  return e;
}

BigInt parse_int(std::string_view s) {
  if (s.empty()) fail(ErrorKind::schema_violation, "empty integer");
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) fail(ErrorKind::schema_violation, "bad integer");
  for (std::size_t k = i; k < s.size(); ++k)
    if (s[k] < '0' || s[k] > '9')
      fail(ErrorKind::schema_violation, "bad integer '" + std::string(s) + "'");
  BigInt v(std::string(s.substr(i)));
  return s[0] == '-' ? BigInt(-v) : v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

/// "0.ddd" / ".ddd" / "0x0.hhh": value and the half-unit of the last digit.
std::optional<std::pair<BigRational, BigRational>> parse_positional(
    std::string_view s) {
  int base = 10;
  if (s.starts_with("0x") || s.starts_with("0X")) {
    base = 16;
    s.remove_prefix(2);
  }
  std::size_t dot = s.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = s.substr(dot + 1);
  if (frac.empty()) return std::nullopt;
  for (char c : whole)
    if (c != '0') return std::nullopt;
  BigInt digits = 0;
  BigInt scale = 1;
  for (char c : frac) {
    int d = base == 16 ? hex_digit(c) : (c >= '0' && c <= '9' ? c - '0' : -1);
    if (d < 0) return std::nullopt;
    digits = digits * base + d;
    scale *= base;
  }
  return std::make_pair(BigRational(digits, scale), BigRational(1, 2 * scale));
}

std::string to_hex_fraction(const BigRational& v) {
  BigInt scaled = floor_div(numerator(v) * (BigInt(1) << (kAlphaBits + 1)) +
                                denominator(v),
                            2 * denominator(v));
  static constexpr char kHex[] = "0123456789abcdef";
  std::string digits(kAlphaBits / 4, '0');
  for (int i = kAlphaBits / 4 - 1; i >= 0; --i) {
    digits[i] = kHex[static_cast<int>(scaled % 16)];
    scaled /= 16;
  }
  return "0x0." + digits;
}

Expansion expand_source(std::string_view spec, int depth) {
  if (spec == "golden") return expand_source("quad:-1:5:2", depth);
  if (spec == "silver" || spec == "sqrt2m1") return expand_source("quad:-1:2:1", depth);
  if (spec.starts_with("quad:")) {
    auto parts = split(spec.substr(5), ':');
    if (parts.size() != 3) fail(ErrorKind::schema_violation, "quad:P:D:Q expected");
    SurdExpansion surd(parse_int(parts[0]), parse_int(parts[1]), parse_int(parts[2]));
    return irrational_expansion([&] { return surd.next(); }, depth);
  }
  if (spec.starts_with("cf:")) {
    std::vector<BigInt> pattern;
    for (auto part : split(spec.substr(3), ',')) {
      BigInt a = parse_int(part);
      if (a < 1) fail(ErrorKind::schema_violation, "cf: quotients must be >= 1");
      pattern.push_back(a);
    }
    std::size_t i = 0;
    bool first = true;
    return irrational_expansion(
        [&]() -> BigInt {
          if (first) {
            first = false;
            return 0;
          }
          return pattern[i++ % pattern.size()];
        },
        depth);
  }
  if (auto slash = spec.find('/'); slash != std::string_view::npos) {
    BigInt num = parse_int(spec.substr(0, slash));
    BigInt den = parse_int(spec.substr(slash + 1));
    if (den == 0) fail(ErrorKind::schema_violation, "zero denominator");
    return rational_source(BigRational(num, den), 0, depth);
  }
  if (auto lit = parse_positional(spec)) {
    return rational_source(lit->first, lit->second, depth);
  }
  fail(ErrorKind::schema_violation, "unrecognized alpha '" + std::string(spec) + "'");
}

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::rational_detected: return "rational_detected";
    case ErrorKind::precision_exhausted: return "precision_exhausted";
    case ErrorKind::out_of_range: return "out_of_range";
    case ErrorKind::insufficient_depth: return "insufficient_depth";
    case ErrorKind::positivity_violation: return "positivity_violation";
    case ErrorKind::zero_jump_sum: return "zero_jump_sum";
    case ErrorKind::no_admissible_shift: return "no_admissible_shift";
    case ErrorKind::degenerate_pair: return "degenerate_pair";
    case ErrorKind::out_of_delta: return "out_of_delta";
    case ErrorKind::same_orbit: return "same_orbit";
    case ErrorKind::window_exceeded: return "window_exceeded";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::step_failure: return "step_failure";
    case ErrorKind::no_return: return "no_return";
    case ErrorKind::schema_violation: return "schema_violation";
    case ErrorKind::file_io: return "file_io";
  }
  return "unknown";
}

Rotation Rotation::expand(std::string_view alpha, int depth) {
  if (depth < 1) fail(ErrorKind::out_of_range, "depth must be >= 1");
  Expansion e = expand_source(alpha, depth);
  Rotation rot;
  rot.quotients_ = std::move(e.quotients);
  rot.lower_ = std::move(e.lower);
  rot.upper_ = std::move(e.upper);
  rot.exact_rational_ = e.exact_rational;
  rot.finish(std::string(alpha));
  return rot;
}

void Rotation::finish(std::string source) {
  source_ = std::move(source);
  const int k = depth();
  p_.assign(k + 1, 0);
  q_.assign(k + 1, 0);
  p_[0] = 0;
  q_[0] = 1;
  BigInt p_prev = 1, q_prev = 0;
  for (int n = 1; n <= k; ++n) {
    p_[n] = quotients_[n - 1] * p_[n - 1] + p_prev;
    q_[n] = quotients_[n - 1] * q_[n - 1] + q_prev;
    p_prev = p_[n - 1];
    q_prev = q_[n - 1];
  }
  BigRational mid = (lower_ + upper_) / 2;
  alpha_hex_ = to_hex_fraction(mid);
  alpha_double_ = mid.convert_to<double>();
  BigInt lattice = floor_div(numerator(mid) * (BigInt(1) << 65) + denominator(mid),
                             2 * denominator(mid));
  lattice &= (BigInt(1) << 64) - 1;
  step_ = CirclePoint::from_raw(lattice.convert_to<std::uint64_t>());
}

std::int64_t Rotation::q(int n) const {
  if (n < 0 || n > depth())
    throw Error(ErrorKind::insufficient_depth,
                "q_" + std::to_string(n) + " requested but depth is " +
                    std::to_string(depth()));
  if (q_[n] > std::numeric_limits<std::int64_t>::max())
    throw Error(ErrorKind::out_of_range, "q_n exceeds 63 bits");
  return q_[n].convert_to<std::int64_t>();
}

nlohmann::json Rotation::to_json() const {
  return {{"alpha_hex", alpha_hex_},
          {"partial_quotients", quotients_},
          {"depth", depth()}};
}

Rotation Rotation::from_json(const nlohmann::json& j) {
  try {
    auto hex = j.at("alpha_hex").get<std::string>();
    auto quotients = j.at("partial_quotients").get<std::vector<std::int64_t>>();
    int depth = j.at("depth").get<int>();
    if (depth != static_cast<int>(quotients.size()) || depth < 1)
      fail(ErrorKind::schema_violation, "depth does not match partial_quotients");
    auto lit = parse_positional(hex);
    if (!lit || !hex.starts_with("0x"))
      fail(ErrorKind::schema_violation, "alpha_hex must look like 0x0.<hex>");
    // The stored value is a rounding of the bracket midpoint; widen by one
    // unit of the serialization grid.
    BigRational unit(1, BigInt(1) << kAlphaBits);
    Rotation rot = Rotation::expand(hex, depth);
    if (rot.quotients_ != quotients)
      fail(ErrorKind::schema_violation, "partial_quotients disagree with alpha_hex");
    rot.exact_rational_ = false;
    rot.lower_ = lit->first - unit;
    rot.upper_ = lit->first + unit;
    rot.finish(hex);
    return rot;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema_violation, std::string("rotation record: ") + e.what());
  }
}

std::int64_t bounded_type_constant(const Rotation& rot) {
  const auto& a = rot.partial_quotients();
  return *std::max_element(a.begin(), a.end()) + 1;
}

std::vector<ConvergentBound> check_convergent_bounds(const Rotation& rot) {
  const auto& p = rot.numerators();
  const auto& q = rot.denominators();
  const auto& a = rot.partial_quotients();
  std::vector<ConvergentBound> out;
  for (int n = 0; n < rot.depth(); ++n) {
    ConvergentBound b;
    b.n = n;
    BigRational e(p[n], q[n]);
    BigRational dlo = abs(rot.alpha_lower() - e);
    BigRational dhi = abs(rot.alpha_upper() - e);
    bool inside = rot.alpha_lower() <= e && e <= rot.alpha_upper();
    BigRational dmin = inside ? BigRational(0) : std::min(dlo, dhi);
    BigRational dmax = std::max(dlo, dhi);
    BigRational unit(1, q[n] * q[n + 1]);
    b.lower_holds = dmin > unit / 2;
    b.upper_holds = dmax < unit;
    BigInt q_before = n == 0 ? BigInt(0) : q[n - 1];
    BigInt p_before = n == 0 ? BigInt(1) : p[n - 1];
    b.recurrence_holds = q[n + 1] == a[n] * q[n] + q_before &&
                         p[n + 1] == a[n] * p[n] + p_before;
    b.coprime = boost::multiprecision::gcd(p[n], q[n]) == 1;
    out.push_back(b);
  }
  return out;
}

std::vector<std::int64_t> ostrowski_digits(std::int64_t n, const Rotation& rot) {
  const int k = rot.depth();
  if (n < 0 || BigInt(n) >= rot.denominators()[k])
    throw Error(ErrorKind::out_of_range, "ostrowski_digits needs 0 <= n < q_K");
  std::vector<std::int64_t> digits(k, 0);
  std::int64_t rest = n;
  for (int j = k - 1; j >= 0; --j) {
    if (rot.denominators()[j] > rest) continue;
    std::int64_t qj = rot.q(j);
    digits[j] = rest / qj;
    rest -= digits[j] * qj;
  }
  return digits;
}

bool ostrowski_legal(const std::vector<std::int64_t>& digits, const Rotation& rot) {
  const auto& a = rot.partial_quotients();
  if (digits.size() > a.size()) return false;
  for (std::size_t j = 0; j < digits.size(); ++j) {
    std::int64_t cap = j == 0 ? a[0] - 1 : a[j];
    if (digits[j] < 0 || digits[j] > cap) return false;
    if (j > 0 && digits[j] == a[j] && digits[j - 1] != 0) return false;
  }
  return true;
}

}  // namespace mildmix
