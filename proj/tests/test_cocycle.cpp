#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mildmix/cocycle.hpp"
#include "mildmix/numeric.hpp"
#include "test_util.hpp"

using namespace mildmix;
using mildmix::testing::kind_of;

namespace {

CirclePoint pt(double x) { return CirclePoint::from_double(x); }

// Membership of p in the forward arc (a, b].
bool in_arc(CirclePoint p, CirclePoint a, CirclePoint b) {
  return (p - a - CirclePoint::from_raw(1)).raw() < (b - a).raw();
}

RoofFunction mixed_roof() {
  AcSegment wave{AcSegment::Kind::trig, {0.1, 1.0, 0.0}, 0.0, 1.0};
  AcSegment wave3{AcSegment::Kind::trig, {0.05, -3.0, 0.7}, 0.0, 1.0};
  AcSegment up{AcSegment::Kind::poly, {0.0, 1.0, -1.0}, 0.0, 0.5};
  AcSegment down{AcSegment::Kind::poly, {0.25, 0.0, -1.0}, 0.5, 1.0};
  return RoofFunction({0.2, 0.7, 0.0}, {0.4, -0.9, 1.2}, 3.0, {wave, wave3, up, down});
}

}  // namespace

TEST_CASE("naive birkhoff sums") {
  auto rot = Rotation::expand("golden", 40);
  auto f = RoofFunction::canonical();
  const double g = (std::sqrt(5.0) - 1) / 2;
  CHECK(birkhoff_naive(rot, f, 0, pt(0.3)) == 0.0);
  CHECK(birkhoff_naive(rot, f, 2, pt(0.0)) == doctest::Approx(2 + g).epsilon(1e-15));
  CHECK(birkhoff_naive(rot, f, -1, rot.step()) == -1.0);
  CHECK(birkhoff_naive(rot, f, 1, pt(0.4)) == f.eval(pt(0.4)));
}

TEST_CASE("cocycle identity") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> idx(-1000, 1000);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const char* alpha : {"golden", "sqrt2m1"}) {
    auto rot = Rotation::expand(alpha, 40);
    for (const auto& f : {RoofFunction::canonical(), mixed_roof()}) {
      double worst = 0.0;
      for (int i = 0; i < 300; ++i) {
        int m = idx(rng), n = idx(rng);
        auto x = pt(unit(rng));
        double lhs = birkhoff_naive(rot, f, m + n, x);
        double rhs = birkhoff_naive(rot, f, m, x) + birkhoff_naive(rot, f, n, rot.apply(x, m));
        worst = std::max(worst, std::abs(lhs - rhs));
      }
      CHECK(worst < 1e-9);
    }
  }
}

TEST_CASE("orbit counting matches enumeration") {
  auto rot = Rotation::expand("golden", 60);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    auto start = pt(unit(rng)), a = pt(unit(rng)), b = pt(unit(rng));
    auto step = trial % 2 ? rot.step() : -rot.step();
    std::int64_t brute = 0;
    auto p = start;
    for (std::int64_t n = 0; n <= 3000; ++n) {
      if (count_in_arc(start, step, n, a, b) != brute) {
        FAIL_CHECK("trial " << trial << " n=" << n);
        break;
      }
      if (in_arc(p, a, b)) ++brute;
      p += step;
    }
  }
  CHECK(count_in_arc(pt(0.1), rot.step(), 100, pt(0.5), pt(0.5)) == 0);
  // the full circle minus one lattice point
  CHECK(count_in_arc(pt(0.1), rot.step(), 100, pt(0.5),
                     pt(0.5) - CirclePoint::from_raw(1)) <= 100);
}

TEST_CASE("fractional sums are exact") {
  auto rot = Rotation::expand("sqrt2m1", 60);
  auto start = pt(0.123);
  NeumaierSum brute;
  auto p = start;
  for (int j = 0; j < 20000; ++j) {
    brute += static_cast<double>(p.raw()) * 0x1p-64;
    p += rot.step();
  }
  CHECK(fractional_sum(start, rot.step(), 20000) == doctest::Approx(brute.value()).epsilon(1e-14));
}

TEST_CASE("jump count") {
  auto rot = Rotation::expand("golden", 40);
  auto f = RoofFunction::canonical();
  CHECK(jump_count(rot, f, 0, pt(0.3), pt(0.4)) == 0.0);
  CHECK(jump_count(rot, f, 3, pt(0.3), pt(0.4)) == 1.0);
  CHECK(kind_of([&] { jump_count(rot, f, 3, pt(0.3), pt(0.3)); }) ==
        ErrorKind::degenerate_pair);
}

TEST_CASE("pl difference identity") {
  auto rot = Rotation::expand("golden", 40);
  auto f = RoofFunction::canonical();
  CHECK(pl_difference(rot, f, 3, pt(0.3), pt(0.4)) == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(pl_difference(rot, f, 0, pt(0.3), pt(0.4)) == 0.0);

  auto pl = mixed_roof().decompose().first;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> idx(0, 2000);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    auto x = pt(unit(rng)), y = pt(unit(rng));
    int n = idx(rng);
    double naive = birkhoff_naive(rot, pl, n, y) - birkhoff_naive(rot, pl, n, x);
    worst = std::max(worst, std::abs(naive - pl_difference(rot, pl, n, x, y)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("fast evaluator matches the naive oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> idx(-20000, 20000);
  for (const char* alpha : {"golden", "sqrt2m1", "cf:1,3"}) {
    auto rot = Rotation::expand(alpha, 60);
    for (const auto& f : {RoofFunction::canonical(), mixed_roof()}) {
      for (int i = 0; i < 60; ++i) {
        auto x = pt(unit(rng));
        std::int64_t n = idx(rng);
        double a = birkhoff_naive(rot, f, n, x);
        double b = birkhoff_fast(rot, f, n, x);
        INFO(alpha << " n=" << n);
        CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
      }
    }
    auto f = RoofFunction::canonical();
    CHECK(birkhoff_fast(rot, f, 0, pt(0.4)) == 0.0);
    CHECK(birkhoff_fast(rot, f, 1, pt(0.4)) == doctest::Approx(f.eval(pt(0.4))).epsilon(1e-15));
    double a = birkhoff_naive(rot, f, 100000, pt(0.1));
    CHECK(std::abs(a - birkhoff_fast(rot, f, 100000, pt(0.1))) <= 1e-9 * a);
  }
  auto rot = Rotation::expand("golden", 60);
  CHECK(kind_of([&] {
          birkhoff_fast(rot, RoofFunction::canonical(), kFastWindow + 1, pt(0.0));
        }) == ErrorKind::window_exceeded);
}

TEST_CASE("smooth part: uniform smallness") {
  auto rot = Rotation::expand("golden", 40);
  auto zero = RoofFunction::constant_roof(0.0);
  CHECK(ac_uniform_smallness(rot, zero, 5).sup == 0.0);

  AcSegment wave{AcSegment::Kind::trig, {0.1, 1.0, 0.0}, 0.0, 1.0};
  RoofFunction g({}, {}, 0.0, {wave});
  SmallnessGrid grid{64, 8};
  auto trend = ac_smallness_trend(rot, g, 4, 10, grid);
  CHECK(trend.strictly_decreasing);
  // each point of the circle lies in at most two of the arcs [x + j a, y + j a],
  // j < q_{s+1}, so the sum of increments is at most 2 Var g
  const double var = g.raw_bounds().variation;
  for (const auto& s : trend.samples) CHECK(s.sup <= 2 * var);
}

TEST_CASE("arcs of length 1/q_s overlap at most twice over q_{s+1} steps") {
  auto rot = Rotation::expand("golden", 40);
  for (int s = 3; s <= 9; ++s) {
    const auto qs = rot.q(s), qn = rot.q(s + 1);
    const auto len = CirclePoint::from_double(1.0 / static_cast<double>(qs));
    const auto x = CirclePoint::from_double(0.3141);
    std::int64_t worst = 0;
    for (int i = 0; i < 2000; ++i) {
      auto probe = CirclePoint::from_double((i + 0.5) / 2000);
      std::int64_t cover = count_in_arc(x - probe, rot.step(), qn,
                                        CirclePoint::from_raw(0) - len, CirclePoint{});
      worst = std::max(worst, cover);
    }
    CHECK(worst <= 2);
  }
}
