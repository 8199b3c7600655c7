#include <doctest.h>

#include <cmath>
#include <random>

#include "mildmix/cocycle.hpp"
#include "mildmix/numeric.hpp"
#include "mildmix/rigidity.hpp"
#include "test_util.hpp"

using namespace mildmix;
using mildmix::testing::kind_of;

namespace {

CirclePoint pt(double x) { return CirclePoint::from_double(x); }

}  // namespace

TEST_CASE("near-return indices") {
  auto rot = Rotation::expand("golden", 60);
  auto one = RoofFunction::constant_roof(1.0);
  for (double x : {0.0, 0.3, 0.77})
    CHECK(near_return_indices(rot, one, pt(x), 5.0, 0.1) == std::vector<std::int64_t>{5});

  auto f = RoofFunction::canonical();
  CHECK(near_return_indices(rot, f, pt(0.2), 0.5, 0.1).empty());
  CHECK(near_return_indices(rot, f, pt(0.2), 0.5, 0.1, {true}).empty());
  CHECK(near_return_indices(rot, f, pt(0.2), 0.05, 0.1).empty());
  CHECK(near_return_indices(rot, f, pt(0.2), 0.05, 0.1, {true}) ==
        std::vector<std::int64_t>{0});

  CHECK(kind_of([&] { near_return_indices(rot, f, pt(0.2), 5.0, 1.0); }) ==
        ErrorKind::out_of_range);
  CHECK(kind_of([&] { near_return_indices(rot, f, pt(0.2), -1.0, 0.1); }) ==
        ErrorKind::out_of_range);
}

TEST_CASE("indices match a direct search") {
  auto rot = Rotation::expand("golden", 60);
  AcSegment wave{AcSegment::Kind::trig, {0.1, 1.0, 0.0}, 0.0, 1.0};
  RoofFunction f({0.0}, {1.0}, 1.0, {wave});
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    auto x = pt(uniform01(rng));
    double t = 5 + 200 * uniform01(rng);
    auto idx = near_return_indices(rot, f, x, t, 0.3);
    std::vector<std::int64_t> brute;
    for (std::int64_t j = 1; j < 400; ++j)
      if (std::abs(birkhoff_naive(rot, f, j, x) - t) < 0.3) brute.push_back(j);
    CHECK(idx == brute);
  }
}

TEST_CASE("window correctness") {
  auto rot = Rotation::expand("golden", 60);
  auto f = RoofFunction::canonical();
  auto b = f.bounds();
  std::mt19937_64 rng(21);
  const double eps = 0.05;
  int checked = 0;
  while (checked < 1000) {
    auto x = pt(uniform01(rng));
    double t = 1 + 300 * uniform01(rng);
    auto j = static_cast<std::int64_t>(uniform01(rng) * 600);
    double lo = (t - eps) / b.upper, hi = (t + eps) / b.lower;
    if (static_cast<double>(j) > lo && static_cast<double>(j) < hi) continue;
    CHECK(std::abs(birkhoff_naive(rot, f, j, x) - t) >= eps);
    ++checked;
  }
}

TEST_CASE("measure of B_t") {
  auto rot = Rotation::expand("golden", 60);
  CHECK(measure_B(rot, RoofFunction::constant_roof(1.0), 5.0, 0.1, 1000) == 1.0);
  CHECK(measure_B(rot, RoofFunction::canonical(), 0.5, 0.1, 1000) == 0.0);
  CHECK(kind_of([&] { measure_B(rot, RoofFunction::canonical(), 0.5, 0.1, 999); }) ==
        ErrorKind::out_of_range);

  // grid estimate against a direct per-point evaluation
  auto f = RoofFunction::canonical();
  std::int64_t hits = 0;
  for (int i = 0; i < 2000; ++i)
    hits += !near_return_indices(rot, f, pt(i / 2000.0), 77.0, 0.02).empty();
  CHECK(measure_B(rot, f, 77.0, 0.02, 2000) == static_cast<double>(hits) / 2000);
}

TEST_CASE("monotone in epsilon") {
  auto rot = Rotation::expand("golden", 60);
  auto f = RoofFunction::canonical();
  for (double t : {13.0, 100.0, 377.5}) {
    double prev = 0.0;
    for (double eps : {1e-4, 1e-3, 1e-2, 0.05, 0.2, 0.5}) {
      double m = measure_B(rot, f, t, eps, 2000);
      CHECK(m >= prev);
      prev = m;
    }
  }
}

TEST_CASE("rigidity scan") {
  auto rot = Rotation::expand("golden", 60);
  auto f = RoofFunction::canonical();
  auto empty = rigidity_scan(rot, f, {}, 1e-3, 1000, 0.5);
  CHECK(empty.rows.empty());

  std::vector<double> qtimes;
  for (int s = 4; s <= 14; ++s) qtimes.push_back(static_cast<double>(rot.q(s)) * f.mean());
  auto prof = rigidity_scan(rot, f, qtimes, 1e-3, 4000, 0.5);
  CHECK(prof.sup <= 0.15);
  CHECK_FALSE(prof.flag);
  CHECK(prof.bound == doctest::Approx(129e-3));

  std::vector<double> ints{3, 1, 2, 10, 7};
  auto control = rigidity_scan(rot, RoofFunction::constant_roof(1.0), ints, 1e-3, 1000, 0.5);
  for (const auto& row : control.rows) CHECK(row.mu_hat == 1.0);
  CHECK(control.flag);
  CHECK(control.rows[0].t == 3.0);  // input order kept

  auto a = rigidity_scan(rot, f, qtimes, 1e-2, 3000, 0.5, {}, 1);
  auto b = rigidity_scan(rot, f, qtimes, 1e-2, 3000, 0.5, {}, 4);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].mu_hat == b.rows[i].mu_hat);
}

TEST_CASE("returning strip points have base points in B_t") {
  SpecialFlow flow(Rotation::expand("golden", 60), RoofFunction::canonical());
  std::int64_t returns = 0;
  for (double t : {3.0, 21.0, 55.5, 144.0}) {
    auto r = containment_check(flow, t, 0.05, 4000, 17);
    CHECK(r.violations == 0);
    returns += r.returns;
  }
  CHECK(returns > 0);
}
