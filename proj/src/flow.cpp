#include "mildmix/flow.hpp"

#include <cmath>
#include <random>

#include "mildmix/cocycle.hpp"
#include "mildmix/errors.hpp"
#include "mildmix/numeric.hpp"
#include "mildmix/parallel.hpp"

namespace mildmix {

namespace {

// Bracketing margin below which f^(n) is recomputed by direct summation.
constexpr double kCertifyMargin = 1e-7;
// Direct summation is only attempted up to this many terms.
constexpr std::int64_t kNaiveLimit = 20'000'000;
constexpr std::int64_t kVolumeChunk = 4096;

}  // namespace

SpecialFlow::SpecialFlow(Rotation rot, RoofFunction f)
    : rot_(std::move(rot)), f_(std::move(f)), bounds_(f_.bounds()), mean_(f_.mean()) {}

double SpecialFlow::birkhoff(std::int64_t n, CirclePoint x) const {
  if (n > kFastWindow || n < -kFastWindow) return birkhoff_naive(rot_, f_, n, x);
  return birkhoff_fast(rot_, f_, n, x);
}

void SpecialFlow::validate(const FlowPoint& p) const {
  if (!(p.s >= 0.0 && p.s < f_.eval(p.x)))
    throw Error(ErrorKind::out_of_range, "point is not under the roof");
}

FlowPoint SpecialFlow::advance(const FlowPoint& p, double t) const {
  std::int64_t n = 0;
  return advance(p, t, n);
}

FlowPoint SpecialFlow::advance(const FlowPoint& p, double t, std::int64_t& n) const {
  n = 0;
  if (t == 0.0) return p;
  if (!std::isfinite(t)) throw Error(ErrorKind::out_of_range, "flow time must be finite");
  const double h = p.s + t;
  const double seed = std::floor(h / mean_);
  if (std::abs(seed) > 1e15) throw Error(ErrorKind::out_of_range, "flow time too large");
  n = static_cast<std::int64_t>(seed);

  const CirclePoint step = rot_.step();
  double F = birkhoff(n, p.x);
  CirclePoint xn = rot_.apply(p.x, n);
  bool certified = false;
  double fx = 0.0;
  while (true) {
    while (F > h) {
      --n;
      xn = xn - step;
      F -= f_.eval(xn);
    }
    while (true) {
      fx = f_.eval(xn);
      if (F + fx > h) break;
      F += fx;
      ++n;
      xn += step;
    }
    const double margin = std::min(h - F, F + fx - h);
    if (certified || margin >= kCertifyMargin || n == 0 || std::abs(n) > kNaiveLimit) break;
    F = birkhoff_naive(rot_, f_, n, p.x);
    certified = true;
  }

  // Local fix-up: the returned point satisfies 0 <= s < f(x) as evaluated.
  double s = h - F;
  while (s < 0.0) {
    --n;
    xn = xn - step;
    s += f_.eval(xn);
  }
  while (s >= (fx = f_.eval(xn))) {
    s -= fx;
    ++n;
    xn += step;
  }
  return {xn, s};
}

VolumeReport volume_check(const SpecialFlow& flow, double t, std::int64_t samples,
                          std::uint64_t seed, const VolumeBox& box, unsigned threads) {
  if (samples < 1) throw Error(ErrorKind::out_of_range, "volume_check needs samples >= 1");
  const double height = flow.bounds().upper;
  const auto chunks = static_cast<std::size_t>((samples + kVolumeChunk - 1) / kVolumeChunk);
  struct Tally {
    std::int64_t in_box = 0, in_preimage = 0, diff = 0, mismatch = 0;
  };
  std::vector<Tally> tallies(chunks);
  auto inside = [&](const FlowPoint& q) {
    double x = q.x.to_double();
    return x >= box.x_lo && x < box.x_hi && q.s >= box.s_lo && q.s < box.s_hi;
  };
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(c)));
    const std::int64_t begin = static_cast<std::int64_t>(c) * kVolumeChunk;
    const std::int64_t end = std::min(samples, begin + kVolumeChunk);
    Tally tally;
    for (std::int64_t i = begin; i < end; ++i) {
      FlowPoint q{CirclePoint::from_double(uniform01(rng)), uniform01(rng) * height};
      if (q.s >= flow.roof().eval(q.x)) continue;
      const int a = inside(q);
      const int b = t == 0.0 ? a : inside(flow.advance(q, t));
      tally.in_box += a;
      tally.in_preimage += b;
      tally.diff += b - a;
      tally.mismatch += a != b;
    }
    tallies[c] = tally;
  });

  Tally total;
  for (const auto& tl : tallies) {
    total.in_box += tl.in_box;
    total.in_preimage += tl.in_preimage;
    total.diff += tl.diff;
    total.mismatch += tl.mismatch;
  }
  const double n = static_cast<double>(samples);
  VolumeReport r;
  r.t = t;
  r.samples = samples;
  r.measure_box = height * static_cast<double>(total.in_box) / n;
  r.measure_preimage = height * static_cast<double>(total.in_preimage) / n;
  r.discrepancy = height * static_cast<double>(total.diff) / n;
  const double mean_d = static_cast<double>(total.diff) / n;
  const double var_d = static_cast<double>(total.mismatch) / n - mean_d * mean_d;
  r.standard_error = height * std::sqrt(std::max(var_d, 0.0) / n);
  return r;
}

std::vector<OrbitSample> flow_orbit(const SpecialFlow& flow, const FlowPoint& p, double dt,
                                    std::int64_t count) {
  flow.validate(p);
  std::vector<OrbitSample> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
  FlowPoint q = p;
  for (std::int64_t k = 0; k < count; ++k) {
    out.push_back({static_cast<double>(k) * dt, q.x.to_double(), q.s});
    q = flow.advance(q, dt);
  }
  return out;
}

}  // namespace mildmix
