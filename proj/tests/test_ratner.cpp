#include <doctest.h>

#include <cmath>

#include "mildmix/cocycle.hpp"
#include "mildmix/ratner.hpp"
#include "test_util.hpp"

using namespace mildmix;
using mildmix::testing::kind_of;

namespace {

CirclePoint pt(double x) { return CirclePoint::from_double(x); }

RatnerConfig canonical_config() {
  return build_config(Rotation::expand("golden", 60), RoofFunction::canonical(), 0.1, 10, 1.0);
}

// d_n(x, y) by enumerating beta_i - j alpha, j < n.
double brute_jump_count(const RatnerConfig& cfg, std::int64_t n, CirclePoint a, CirclePoint b) {
  double total = 0.0;
  const auto& f = cfg.f;
  for (std::size_t i = 0; i < f.breakpoints().size(); ++i) {
    CirclePoint p = f.breakpoints()[i];
    for (std::int64_t j = 0; j < n; ++j) {
      if ((p - a - CirclePoint::from_raw(1)).raw() < (b - a).raw()) total += f.jumps()[i];
      p = p - cfg.rot.step();
    }
  }
  return total;
}

bool in_P(const RatnerConfig& cfg, double shift) {
  for (double d : cfg.D)
    for (double v : {cfg.sigma() * cfg.p - d, -cfg.sigma() * cfg.p + d})
      if (std::abs(v - shift) < 1e-9) return true;
  return false;
}

}  // namespace

TEST_CASE("configuration for the canonical roof") {
  auto cfg = canonical_config();
  CHECK(cfg.C == 2);
  CHECK(cfg.k == 1);
  CHECK(cfg.D == std::vector<double>{0, 1, 2, 3, 4, 5});
  CHECK(cfg.p == 0.5);
  CHECK(cfg.kappa == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(cfg.rot.q(cfg.s0) == 1597);
  CHECK(cfg.delta == doctest::Approx(0.5 / 2584).epsilon(1e-14));
  CHECK(cfg.delta == doctest::Approx(1.9349e-4).epsilon(1e-4));
  CHECK(cfg.flow_base_epsilon() == doctest::Approx(0.1 / 24));

  auto silver = build_config(Rotation::expand("sqrt2m1", 60), RoofFunction::canonical(), 0.1,
                             10, 1.0);
  CHECK(silver.C == 3);
  CHECK(silver.D.size() == 8);
  CHECK(silver.kappa == doctest::Approx((1.0 / 7) * std::min(0.1 / 3, 1.0 / 9)));
}

TEST_CASE("configuration errors") {
  auto rot = Rotation::expand("golden", 60);
  CHECK(kind_of([&] { build_config(rot, RoofFunction::constant_roof(1.0), 0.1, 10); }) ==
        ErrorKind::zero_jump_sum);
  CHECK(kind_of([&] { build_config(rot, RoofFunction({0.0}, {1.0}, -0.5), 0.1, 10); }) ==
        ErrorKind::positivity_violation);
  CHECK(kind_of([&] {
          build_config(Rotation::expand("golden", 10), RoofFunction::canonical(), 0.1, 10);
        }) == ErrorKind::insufficient_depth);
}

TEST_CASE("p avoids D and -D") {
  auto rot = Rotation::expand("golden", 60);
  RoofFunction f({0.2, 0.7}, {0.4, 0.9}, 1.0);
  auto cfg = build_config(rot, f, 0.1, 10);
  CHECK(cfg.p > 0);
  CHECK(cfg.p < std::abs(cfg.S));
  for (double d : cfg.D) {
    CHECK(std::abs(cfg.p - d) > 1e-6);
    CHECK(std::abs(cfg.p + d) > 1e-6);
  }
}

TEST_CASE("base witness errors") {
  auto cfg = canonical_config();
  CHECK(kind_of([&] { base_witness(cfg, pt(0.1), pt(0.1)); }) == ErrorKind::degenerate_pair);
  auto x = pt(0.1);
  auto at_delta = x + CirclePoint::from_raw(
                          static_cast<std::uint64_t>(std::ceil(std::ldexp(cfg.delta, 64))));
  CHECK(kind_of([&] { base_witness(cfg, x, at_delta); }) == ErrorKind::out_of_delta);
}

TEST_CASE("base witness against naive oracles") {
  auto cfg = canonical_config();
  for (double off : {0.5, -0.5, 0.9, 0.13, -0.77}) {
    auto x = pt(0.1);
    auto y = x + pt(std::abs(off) * cfg.delta);
    if (off < 0) y = x - pt(std::abs(off) * cfg.delta);
    auto w = base_witness(cfg, x, y);
    INFO("offset " << off);
    REQUIRE(w.found);
    CHECK(w.base_success);
    CHECK(w.ratio >= cfg.kappa);
    CHECK(static_cast<double>(w.length()) >= cfg.kappa * static_cast<double>(w.q_next));
    CHECK(w.d_in_D);
    CHECK(in_P(cfg, w.shift));
    CHECK(w.monotone_violations == 0);

    // scale bracketing in plain floating point (far from ties here)
    const double dist = circle_distance(x, y);
    CHECK(cfg.p / (static_cast<double>(w.q_next)) < dist);
    CHECK(dist <= cfg.p / static_cast<double>(w.q_s));
    CHECK(w.q_s <= w.j_lo);
    CHECK(w.j_hi <= w.q_next);

    auto a = w.swapped ? y : x;
    auto b = w.swapped ? x : y;
    for (std::int64_t n = w.j_lo; n <= w.j_hi; n += std::max<std::int64_t>(1, w.length() / 25)) {
      CHECK(brute_jump_count(cfg, n, a, b) == w.d);
      double fx = birkhoff_naive(cfg.rot, cfg.f, n, x);
      double fy = birkhoff_naive(cfg.rot, cfg.f, n, y);
      CHECK(std::abs(fy - fx - w.shift) < cfg.epsilon);
    }
  }
}

TEST_CASE("flow witness") {
  auto cfg = canonical_config();
  const FlowPoint p1{pt(0.1), 0.5};
  SUBCASE("same base point") {
    CHECK(kind_of([&] { flow_witness(cfg, p1, {pt(0.1), 0.50001}); }) ==
          ErrorKind::degenerate_pair);
  }
  SUBCASE("same orbit") {
    CHECK(kind_of([&] {
            // T^{-2584} x lies within ||2584 alpha|| ~ 1.7e-4 of x
            flow_witness(cfg, p1, {cfg.rot.apply(p1.x, -2584), 0.5});
          }) == ErrorKind::same_orbit);
  }
  SUBCASE("window and hits") {
    const FlowPoint p2{p1.x + pt(0.4 * cfg.delta), 0.5 + 0.3 * cfg.delta};
    auto w = flow_witness(cfg, p1, p2);
    REQUIRE(w.found);
    CHECK(w.flow_success);
    CHECK(w.hit_fraction > 1 - cfg.epsilon);
    CHECK(w.b_violations == 0);
    CHECK(w.b_size > 0);
    const double cC = cfg.c_f / cfg.C_f;
    CHECK(w.L / w.M >= cC * static_cast<double>(w.L_prime()) / static_cast<double>(w.M_prime()));
    CHECK(w.M >= cfg.N);
    CHECK(w.L >= cfg.N);

    // recount hits with direct (non-incremental) flow evaluation
    const SpecialFlow flow(cfg.rot, cfg.f);
    std::int64_t hits = 0;
    for (std::int64_t k = w.k_lo; k <= w.k_hi; ++k) {
      auto q1 = flow.advance(p1, static_cast<double>(k) * cfg.gamma);
      auto q2 = flow.advance(p2, static_cast<double>(k) * cfg.gamma + w.shift);
      hits += metric(q1, q2) < cfg.epsilon;
    }
    CHECK(hits == w.hits);
  }
}

TEST_CASE("ratner scan") {
  auto cfg = canonical_config();
  CHECK(kind_of([&] { ratner_scan(cfg, {0, 1}); }) == ErrorKind::out_of_range);
  auto one = ratner_scan(cfg, {60, 99, true, 1});
  CHECK(one.success_rate == 1.0);
  auto three = ratner_scan(cfg, {60, 99, true, 3});
  CHECK(one.to_json(cfg).dump() == three.to_json(cfg).dump());
  auto other = ratner_scan(cfg, {60, 100, true, 1});
  CHECK(one.to_json(cfg).dump() != other.to_json(cfg).dump());

  auto j = one.to_json(cfg);
  CHECK(j.contains("success_rate"));
  CHECK(j["failures"].empty());
  CHECK(j["base"]["empirical_kappa"].get<double>() >= cfg.kappa);
}
