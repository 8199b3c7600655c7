#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "mildmix/errors.hpp"
#include "mildmix/poincare.hpp"
#include "test_util.hpp"

using namespace mildmix;
using mildmix::testing::kind_of;

TEST_CASE("vector field values") {
  auto f = field_singular(1.0, 0.0);
  CHECK(f.x == 0.0);
  CHECK(f.y == 0.0);
  f = field_singular(2.0, 0.0);
  CHECK(f.x == 0.0);
  CHECK(f.y == doctest::Approx(0.5));
  CHECK(kind_of([] { field_singular(0.0, 0.0); }) == ErrorKind::singularity);

  // Independent check against the complex form i (z - 1) / z.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 100; ++i) {
    std::complex<double> z(u(rng), u(rng));
    auto w = std::complex<double>(0, 1) * (z - 1.0) / z;
    auto g = field_singular(z.real(), z.imag());
    CHECK(g.x == doctest::Approx(w.real()).epsilon(1e-12));
    CHECK(g.y == doctest::Approx(w.imag()).epsilon(1e-12));
    auto n = field(PlanarSystem::normalized, z.real(), z.imag());
    auto v = 1.0 / z;
    CHECK(n.x == doctest::Approx(v.real()).epsilon(1e-12));
    CHECK(n.y == doctest::Approx(v.imag()).epsilon(1e-12));
  }
}

TEST_CASE("hamiltonian values and gradient") {
  CHECK(hamiltonian(1.0, 0.0) == 0.0);
  CHECK(hamiltonian(0.0, 0.0) == 0.5);
  CHECK(hamiltonian(1.2, 0.0) == doctest::Approx(0.5 * std::exp(2.4) * 0.04));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 200; ++i) {
    double x = u(rng), y = u(rng);
    const double h = 1e-6;
    auto g = hamiltonian_gradient(x, y);
    CHECK(g.x == doctest::Approx((hamiltonian(x + h, y) - hamiltonian(x - h, y)) / (2 * h))
                     .epsilon(1e-6));
    CHECK(g.y == doctest::Approx((hamiltonian(x, y + h) - hamiltonian(x, y - h)) / (2 * h))
                     .epsilon(1e-6));
  }
}

TEST_CASE("first integral and invariant density identities") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  double worst_rate = 0, worst_div = 0;
  for (int i = 0; i < 10000; ++i) {
    double x = u(rng), y = u(rng);
    if (x * x + y * y < 1e-4) continue;
    auto g = hamiltonian_gradient(x, y);
    auto f = field_singular(x, y);
    const double scale = (std::abs(g.x * f.x) + std::abs(g.y * f.y)) + 1e-300;
    worst_rate = std::max(worst_rate, std::abs(hamiltonian_rate(x, y)) / scale);
    const double dscale = invariant_density(x, y) * (std::abs(f.x) + std::abs(f.y) + 1);
    worst_div = std::max(worst_div, std::abs(density_divergence(x, y)) / dscale);
  }
  CHECK(worst_rate < 1e-12);
  CHECK(worst_div < 1e-12);
}

TEST_CASE("integration conserves H") {
  auto res = integrate(PlanarSystem::singular, {2.0, 0.0, 0.0}, 1.0);
  CHECK(res.reached_time);
  CHECK(res.end.t == 1.0);
  const double h0 = hamiltonian(2.0, 0.0);
  double drift = 0;
  for (const auto& p : res.trajectory) drift = std::max(drift, std::abs(p.H - h0) / h0);
  CHECK(drift < 1e-8);
}

TEST_CASE("rest point stays put") {
  auto res = integrate(PlanarSystem::singular, {1.0, 0.0, 0.0}, 5.0);
  CHECK(res.end.x == 1.0);
  CHECK(res.end.y == 0.0);
  CHECK(res.reached_time);
  CHECK(kind_of([] { integrate(PlanarSystem::singular, {0.0, 0.0, 0.0}, 1.0); }) ==
        ErrorKind::singularity);
}

TEST_CASE("orbits around the centre close up") {
  IntegrateOptions opts;
  opts.event = [](const PlanarState& s) { return s.x > 1.0 ? s.y : -1.0; };
  opts.record = false;
  // Leave the section first: y becomes positive immediately from (1.2, 0).
  auto res = integrate(PlanarSystem::singular, {1.2, -1e-12, 0.0}, std::nullopt, opts);
  REQUIRE(res.event_fired);
  CHECK(std::abs(res.end.x - 1.2) < 1e-6);
  CHECK(res.end.t > 0);
}

TEST_CASE("backward integration retraces") {
  auto fwd = integrate(PlanarSystem::singular, {0.5, 0.5, 0.0}, 2.0);
  auto back = integrate(PlanarSystem::singular, {fwd.end.x, fwd.end.y, 2.0}, 0.0);
  CHECK(back.end.x == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(back.end.y == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("closed-form return times") {
  CHECK(first_return_closed(0.1, 0.0) == doctest::Approx(-0.01));
  CHECK(first_return_closed(0.1, std::numbers::pi / 2) == doctest::Approx(0.01));
  CHECK(std::abs(first_return_closed(0.1, std::numbers::pi / 4)) < 1e-15);
  CHECK(kind_of([] { first_return_numeric(PlanarSystem::normalized, 0.1, std::numbers::pi / 4); }) ==
        ErrorKind::no_return);
}

TEST_CASE("numeric return times agree with the closed form") {
  const double r = 0.1;
  double worst = 0;
  int averaged = 0;
  for (int i = 0; i < 100; ++i) {
    const double theta = 2 * std::numbers::pi * (i + 0.5) / 100;
    if (std::abs(std::cos(2 * theta)) < 1e-6) continue;
    auto ev = first_return_numeric(PlanarSystem::normalized, r, theta);
    worst = std::max(worst, std::abs(ev.tau - first_return_closed(r, theta)));
    averaged += ev.averaged;
  }
  CHECK(worst < 1e-4 * r * r);
  CHECK(averaged == 0);
  for (double theta : {0.0, std::numbers::pi / 2, std::numbers::pi, 3 * std::numbers::pi / 2}) {
    auto ev = first_return_numeric(PlanarSystem::normalized, r, theta);
    CHECK(ev.averaged);
    CHECK(ev.tau == doctest::Approx(first_return_closed(r, theta)).epsilon(1e-4));
  }
}

TEST_CASE("direct and rescaled modes agree away from the origin") {
  for (PlanarSystem sys : {PlanarSystem::singular, PlanarSystem::normalized}) {
    IntegrateOptions a, b;
    a.tol = b.tol = 1e-12;
    a.mode = IntegrateOptions::Mode::direct;
    b.mode = IntegrateOptions::Mode::rescaled;
    auto ra = integrate(sys, {0.3, 0.4, 0.0}, 0.05, a);
    auto rb = integrate(sys, {0.3, 0.4, 0.0}, 0.05, b);
    CHECK(std::abs(ra.end.x - rb.end.x) < 1e-8);
    CHECK(std::abs(ra.end.y - rb.end.y) < 1e-8);
  }
}

TEST_CASE("separatrix loop time") {
  auto est = separatrix_return_time();
  CHECK(est.tau0 > 0);
  CHECK(est.monotone);
  CHECK(est.shrinking);
  CHECK(est.error < 1e-4);
  for (double t : est.tau) CHECK(t < est.tau0 + 1e-9);
  // dt = z dz / (i (z - 1)); the loop encloses only the pole at 1, so the
  // contour integral is 2 pi i * (1 / i).
  CHECK(std::abs(est.tau0 - 2 * std::numbers::pi) < 1e-6);
}

TEST_CASE("linear section map") {
  auto rot = Rotation::expand("golden", 30);
  auto m = linear_section_map(rot);
  auto x = CirclePoint::from_double(0.3);
  CHECK(m.return_time(x) == 1.0);
  CHECK(m.map(x).to_double() == doctest::Approx(std::fmod(0.3 + rot.alpha(), 1.0)).epsilon(1e-15));
  for (int n = 1; n <= 20; ++n) {
    const std::int64_t q = rot.q(n);
    CirclePoint y = x;
    for (std::int64_t i = 0; i < q; ++i) y = m.map(y);
    CHECK(circle_distance(x, y) <= dist_to_int(static_cast<double>(q) * rot.alpha()) + 1e-12);
  }
}
