#include "mildmix/rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mildmix/errors.hpp"
#include "mildmix/numeric.hpp"
#include "mildmix/parallel.hpp"

namespace mildmix {

namespace {

constexpr std::int64_t kGridChunk = 256;

void check_eps(const RoofFunction& f, double eps) {
  const double c = f.bounds().lower;
  if (!(eps > 0 && eps < c))
    throw Error(ErrorKind::out_of_range, "epsilon must lie in (0, c_f)");
}

}  // namespace

std::vector<std::int64_t> near_return_indices(const Rotation& rot, const RoofFunction& f,
                                              CirclePoint x, double t, double eps,
                                              NearReturnOptions opts) {
  check_eps(f, eps);
  if (!(t > 0)) throw Error(ErrorKind::out_of_range, "t must be positive");
  const double c = f.bounds().lower;
  const double j_end = (t + eps) / c;
  std::vector<std::int64_t> out;
  double F = 0.0;
  CirclePoint p = x;
  for (std::int64_t j = 0; static_cast<double>(j) < j_end; ++j) {
    if ((j > 0 || opts.include_zero) && std::abs(F - t) < eps) out.push_back(j);
    F += f.eval(p);
    p += rot.step();
  }
  return out;
}

double measure_B(const Rotation& rot, const RoofFunction& f, double t, double eps,
                 std::int64_t grid_size, NearReturnOptions opts, unsigned threads) {
  auto profile = rigidity_scan(rot, f, {t}, eps, grid_size, 1.0, opts, threads);
  return profile.rows.front().mu_hat;
}

double nonrigidity_bound(int k, std::int64_t C, double S, double c, double V, double eps) {
  return (32.0 * k * static_cast<double>(C) / (std::abs(S) * c * c)) * (c + V) * eps + eps;
}

RigidityProfile rigidity_scan(const Rotation& rot, const RoofFunction& f,
                              const std::vector<double>& times, double eps,
                              std::int64_t grid_size, double threshold,
                              NearReturnOptions opts, unsigned threads) {
  check_eps(f, eps);
  if (grid_size < 1000) throw Error(ErrorKind::out_of_range, "grid_size must be >= 1000");
  for (double t : times)
    if (!(t > 0)) throw Error(ErrorKind::out_of_range, "times must be positive");
  const auto b = f.bounds();

  RigidityProfile prof;
  prof.epsilon = eps;
  prof.grid_size = grid_size;
  prof.include_zero = opts.include_zero;
  prof.threshold = threshold;
  prof.bound = f.sum_of_jumps() == 0.0
                   ? std::numeric_limits<double>::infinity()
                   : nonrigidity_bound(f.jump_count(), bounded_type_constant(rot),
                                       f.sum_of_jumps(), b.lower, b.variation, eps);
  if (times.empty()) return prof;

  // Sorted view of the times; counts are mapped back afterwards.
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return times[i] < times[j]; });
  std::vector<double> sorted(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = times[order[i]];
  const double j_end = (sorted.back() + eps) / b.lower;

  const auto chunks = static_cast<std::size_t>((grid_size + kGridChunk - 1) / kGridChunk);
  std::vector<std::vector<std::int64_t>> partial(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<std::int64_t> counts(sorted.size(), 0);
    std::vector<std::int64_t> last(sorted.size(), -1);
    const std::int64_t begin = static_cast<std::int64_t>(c) * kGridChunk;
    const std::int64_t end = std::min(grid_size, begin + kGridChunk);
    for (std::int64_t i = begin; i < end; ++i) {
      CirclePoint p = CirclePoint::from_double(static_cast<double>(i) /
                                               static_cast<double>(grid_size));
      double F = 0.0;
      for (std::int64_t j = 0; static_cast<double>(j) < j_end; ++j) {
        if (j > 0 || opts.include_zero) {
          auto it = std::upper_bound(sorted.begin(), sorted.end(), F - eps);
          for (; it != sorted.end() && *it < F + eps; ++it) {
            const auto idx = static_cast<std::size_t>(it - sorted.begin());
            if (last[idx] != i) {
              last[idx] = i;
              ++counts[idx];
            }
          }
        }
        F += f.eval(p);
        p += rot.step();
      }
    }
    partial[c] = std::move(counts);
  });

  std::vector<std::int64_t> total(sorted.size(), 0);
  for (const auto& part : partial)
    for (std::size_t i = 0; i < part.size(); ++i) total[i] += part[i];
  std::vector<std::int64_t> by_input(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) by_input[order[i]] = total[i];

  prof.sup = -1.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    RigidityRow row;
    row.t = times[i];
    row.epsilon = eps;
    row.mu_hat = static_cast<double>(by_input[i]) / static_cast<double>(grid_size);
    row.window_lo = (row.t - eps) / b.upper;
    row.window_hi = (row.t + eps) / b.lower;
    if (row.mu_hat > prof.sup) {
      prof.sup = row.mu_hat;
      prof.argmax = row.t;
    }
    prof.rows.push_back(row);
  }
  prof.flag = prof.sup >= threshold;
  return prof;
}

nlohmann::json RigidityProfile::summary_json() const {
  return {{"epsilon", epsilon},
          {"grid_size", grid_size},
          {"include_zero", include_zero},
          {"times", rows.size()},
          {"sup", sup},
          {"argmax", argmax},
          {"threshold", threshold},
          {"rigidity_flag", flag},
          {"bound", std::isfinite(bound) ? nlohmann::json(bound) : nlohmann::json(nullptr)}};
}

ContainmentReport containment_check(const SpecialFlow& flow, double t, double eps,
                                    std::int64_t samples, std::uint64_t seed) {
  ContainmentReport r;
  r.samples = samples;
  std::mt19937_64 rng(splitmix64(seed));
  const auto& rot = flow.rotation();
  const auto& f = flow.roof();
  for (std::int64_t i = 0; i < samples; ++i) {
    FlowPoint p{CirclePoint::from_double(uniform01(rng)), 0.0};
    p.s = uniform01(rng) * std::min(eps, f.eval(p.x));
    std::int64_t n = 0;
    FlowPoint q = flow.advance(p, t, n);
    if (!(q.s < eps)) continue;
    ++r.returns;
    auto idx = near_return_indices(rot, f, p.x, t, eps, {true});
    if (std::find(idx.begin(), idx.end(), n) == idx.end()) ++r.violations;
  }
  return r;
}

}  // namespace mildmix
