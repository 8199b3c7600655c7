#include "mildmix/cocycle.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "mildmix/errors.hpp"
#include "mildmix/numeric.hpp"

namespace mildmix {

namespace {

constexpr u128 kModulus = u128{1} << 64;

double u128_to_unit(u128 v) {
  // v / 2^64
  return static_cast<double>(static_cast<std::uint64_t>(v >> 64)) +
         std::ldexp(static_cast<double>(static_cast<std::uint64_t>(v)), -64);
}

void check_window(std::int64_t n) {
  if (n > kFastWindow || n < -kFastWindow)
    throw Error(ErrorKind::window_exceeded,
                "|n| = " + std::to_string(n) + " exceeds the fast-path window");
}

bool closed_form_segment(const AcSegment& seg) {
  return seg.kind == AcSegment::Kind::trig && seg.lo == 0.0 && seg.hi == 1.0 &&
         seg.params[1] == std::round(seg.params[1]) && std::abs(seg.params[1]) < 1e9;
}

// sum_{j<m} A sin(2 pi w (start + j step) + phase) via the geometric series.
// Returns false when the ratio is too close to 1 for a stable evaluation.
bool trig_sum(const AcSegment& seg, CirclePoint start, CirclePoint step, std::int64_t m,
              double& out) {
  const double amp = seg.params[0];
  const auto w = static_cast<std::int64_t>(seg.params[1]);
  const double phase = seg.params[2];
  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto unit = [&](CirclePoint p) { return std::polar(1.0, two_pi * p.to_double()); };
  const std::complex<double> ratio = unit(step.times(w));
  const std::complex<double> denom = 1.0 - ratio;
  if (std::abs(denom) < 1e-3) return false;
  const std::complex<double> first = unit(start.times(w)) * std::polar(1.0, phase);
  const std::complex<double> total = first * (1.0 - unit(step.times(w * m))) / denom;
  out = amp * total.imag();
  return true;
}

// Forward or backward orbit parametrization of f^(n): the terms are
// f(start + j*step) for j < m, with overall sign.
struct OrbitRange {
  CirclePoint start;
  CirclePoint step;
  std::int64_t m;
  double sign;
};

OrbitRange orbit_range(const Rotation& rot, std::int64_t n, CirclePoint x) {
  if (n >= 0) return {x, rot.step(), n, 1.0};
  return {x - rot.step(), -rot.step(), -n, -1.0};
}

}  // namespace

std::int64_t count_in_arc(CirclePoint start, CirclePoint step, std::int64_t n,
                          CirclePoint a, CirclePoint b) {
  if (n <= 0) return 0;
  const u128 len = (b - a).raw();
  if (len == 0) return 0;
  const u128 r = (start - a - CirclePoint::from_raw(1)).raw();
  const u128 A = step.raw();
  const u128 nn = static_cast<u128>(n);
  const u128 at_or_above =
      floor_sum(nn, kModulus, A, r + kModulus - len) - floor_sum(nn, kModulus, A, r);
  return n - static_cast<std::int64_t>(at_or_above);
}

double fractional_sum(CirclePoint start, CirclePoint step, std::int64_t n) {
  if (n <= 0) return 0.0;
  const u128 nn = static_cast<u128>(n);
  const u128 r = start.raw();
  const u128 A = step.raw();
  // sum (r + jA) mod 2^64, exact modulo 2^128; the true value is < n * 2^64
  const u128 total = nn * r + A * (nn * (nn - 1) / 2) - (floor_sum(nn, kModulus, A, r) << 64);
  return u128_to_unit(total);
}

double birkhoff_naive(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                      CirclePoint x) {
  if (n == 0) return 0.0;
  const auto range = orbit_range(rot, n, x);
  NeumaierSum sum;
  CirclePoint p = range.start;
  for (std::int64_t j = 0; j < range.m; ++j) {
    sum += f.eval(p);
    p += range.step;
  }
  return range.sign * sum.value();
}

double birkhoff_pl_fast(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                        CirclePoint x) {
  check_window(n);
  if (n == 0) return 0.0;
  const auto range = orbit_range(rot, n, x);
  NeumaierSum sum;
  sum += static_cast<double>(range.m) * f.constant();
  for (std::size_t i = 0; i < f.breakpoints().size(); ++i)
    sum += f.jumps()[i] * fractional_sum(range.start - f.breakpoints()[i], range.step, range.m);
  return range.sign * sum.value();
}

double birkhoff_fast(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                     CirclePoint x) {
  check_window(n);
  if (n == 0) return 0.0;
  double total = birkhoff_pl_fast(rot, f, n, x);
  if (!f.has_ac_part()) return total;

  const auto range = orbit_range(rot, n, x);
  std::vector<const AcSegment*> rest;
  NeumaierSum ac;
  for (const auto& seg : f.segments()) {
    double v = 0.0;
    if (closed_form_segment(seg) && trig_sum(seg, range.start, range.step, range.m, v)) {
      ac += v;
    } else {
      rest.push_back(&seg);
    }
  }
  if (!rest.empty()) {
    CirclePoint p = range.start;
    for (std::int64_t j = 0; j < range.m; ++j) {
      const double xd = p.to_double();
      for (const auto* seg : rest)
        if (seg->covers(xd)) ac += seg->value(xd);
      p += range.step;
    }
  }
  return total + range.sign * ac.value();
}

double jump_count(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                  CirclePoint x, CirclePoint y) {
  if (x == y) throw Error(ErrorKind::degenerate_pair, "jump_count needs x != y");
  if (n < 0) throw Error(ErrorKind::out_of_range, "jump_count needs n >= 0");
  NeumaierSum sum;
  for (std::size_t i = 0; i < f.breakpoints().size(); ++i) {
    auto hits = count_in_arc(f.breakpoints()[i], -rot.step(), n, x, y);
    if (hits) sum += f.jumps()[i] * static_cast<double>(hits);
  }
  return sum.value();
}

double pl_difference(const Rotation& rot, const RoofFunction& f, std::int64_t n,
                     CirclePoint x, CirclePoint y) {
  if (n == 0) return 0.0;
  const double d = jump_count(rot, f, n, x, y);
  return static_cast<double>(n) * f.sum_of_jumps() * forward_arc(x, y) - d;
}

SmallnessSample ac_uniform_smallness(const Rotation& rot, const RoofFunction& g, int s,
                                     const SmallnessGrid& grid) {
  SmallnessSample out;
  out.s = s;
  out.q_s = rot.q(s);
  out.q_next = rot.q(s + 1);
  std::vector<double> offsets;
  for (int k = 1; k < grid.offsets; ++k) {
    double h = static_cast<double>(k) / (grid.offsets * static_cast<double>(out.q_s));
    offsets.push_back(h);
    offsets.push_back(-h);
  }
  offsets.push_back(0.999 / static_cast<double>(out.q_s));
  offsets.push_back(-0.999 / static_cast<double>(out.q_s));

  const CirclePoint step = rot.step();
  for (int i = 0; i < grid.x_points; ++i) {
    const double xd = static_cast<double>(i) / grid.x_points;
    const CirclePoint x0 = CirclePoint::from_double(xd);
    for (double h : offsets) {
      const CirclePoint y0 = CirclePoint::from_double(xd + h);
      CirclePoint xp = x0, yp = y0;
      NeumaierSum diff;
      for (std::int64_t n = 1; n <= out.q_next; ++n) {
        diff += g.eval(yp) - g.eval(xp);
        xp += step;
        yp += step;
        double v = std::abs(diff.value());
        if (v > out.sup) {
          out.sup = v;
          out.arg_n = n;
          out.arg_x = x0.to_double();
          out.arg_y = y0.to_double();
        }
      }
    }
  }
  return out;
}

SmallnessTrend ac_smallness_trend(const Rotation& rot, const RoofFunction& g, int s_from,
                                  int s_to, const SmallnessGrid& grid) {
  SmallnessTrend trend;
  for (int s = s_from; s <= s_to; ++s) {
    trend.samples.push_back(ac_uniform_smallness(rot, g, s, grid));
    if (trend.samples.size() > 1 &&
        !(trend.samples.back().sup < trend.samples[trend.samples.size() - 2].sup))
      trend.strictly_decreasing = false;
  }
  return trend;
}

}  // namespace mildmix
