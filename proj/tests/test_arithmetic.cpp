#include <doctest.h>

#include <cmath>
#include <random>

#include "mildmix/arithmetic.hpp"
#include "mildmix/errors.hpp"
#include "test_util.hpp"

using namespace mildmix;
using mildmix::testing::kind_of;

namespace {

std::vector<std::int64_t> as_int64(const std::vector<BigInt>& v) {
  std::vector<std::int64_t> out;
  for (const auto& x : v) out.push_back(x.convert_to<std::int64_t>());
  return out;
}

}  // namespace

TEST_CASE("golden ratio expansion") {
  auto rot = Rotation::expand("golden", 8);
  CHECK(rot.partial_quotients() == std::vector<std::int64_t>(8, 1));
  CHECK(as_int64(rot.denominators()) ==
        std::vector<std::int64_t>{1, 1, 2, 3, 5, 8, 13, 21, 34});
  CHECK(rot.alpha() == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-15));
  CHECK(bounded_type_constant(rot) == 2);
  CHECK_FALSE(rot.exact_rational_input());
}

TEST_CASE("sqrt(2)-1 expansion") {
  auto rot = Rotation::expand("sqrt2m1", 4);
  CHECK(rot.partial_quotients() == std::vector<std::int64_t>{2, 2, 2, 2});
  CHECK(bounded_type_constant(rot) == 3);
}

TEST_CASE("periodic pattern and bounded-type constant") {
  auto rot = Rotation::expand("cf:1,3", 6);
  CHECK(rot.partial_quotients() == std::vector<std::int64_t>{1, 3, 1, 3, 1, 3});
  CHECK(bounded_type_constant(rot) == 4);
  // [0; 1, 3, 1, 3, ...] = (sqrt(21) - 3) / 2
  CHECK(rot.alpha() == doctest::Approx((std::sqrt(21.0) - 3) / 2).epsilon(1e-15));
  auto surd = Rotation::expand("quad:-3:21:2", 6);
  CHECK(surd.partial_quotients() == rot.partial_quotients());
}

TEST_CASE("rational inputs are rejected") {
  CHECK(kind_of([] { Rotation::expand("1/2", 3); }) == ErrorKind::rational_detected);
  CHECK(kind_of([] { Rotation::expand("0.5", 3); }) == ErrorKind::rational_detected);
  CHECK(kind_of([] { Rotation::expand("quad:0:4:3", 3); }) ==
        ErrorKind::rational_detected);
  CHECK(kind_of([] { Rotation::expand("quad:1:5:2", 3); }) == ErrorKind::out_of_range);
  CHECK(kind_of([] { Rotation::expand("pi", 3); }) == ErrorKind::schema_violation);
}

TEST_CASE("decimal literals certify only what their digits support") {
  auto rot = Rotation::expand("0.6180339887498949", 8);
  CHECK(rot.partial_quotients() == std::vector<std::int64_t>(8, 1));
  CHECK(rot.exact_rational_input());
  CHECK(kind_of([] { Rotation::expand("0.6180339887498949", 40); }) ==
        ErrorKind::precision_exhausted);
}

TEST_CASE("dist_to_int") {
  CHECK(dist_to_int(0.75) == 0.25);
  CHECK(dist_to_int(0.0) == 0.0);
  auto rot = Rotation::expand("golden", 8);
  double v = dist_to_int(8 * rot.alpha());
  CHECK(v > 1.0 / 26);
  CHECK(v < 1.0 / 13);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    double t = u(rng);
    double m = std::floor(u(rng));
    CHECK(dist_to_int(t) == doctest::Approx(dist_to_int(-t)).epsilon(1e-12));
    CHECK(dist_to_int(t) == doctest::Approx(dist_to_int(t + m)).epsilon(1e-9));
    CHECK(dist_to_int(t) <= 0.5);
  }
}

TEST_CASE("circle lattice wraps exactly") {
  auto a = CirclePoint::from_double(0.75);
  auto b = CirclePoint::from_double(0.5);
  CHECK((a + b).to_double() == 0.25);
  CHECK(circle_distance(CirclePoint::from_double(0.0), CirclePoint::from_double(0.9)) ==
        doctest::Approx(0.1));
  CHECK(CirclePoint::from_double(-1e-300).to_double() < 1.0);
  CHECK(CirclePoint::from_double(std::nextafter(1.0, 0.0)).to_double() < 1.0);
}

TEST_CASE("denominator inequalities hold with exact arithmetic up to n = 35") {
  for (const char* alpha : {"golden", "sqrt2m1", "cf:1,3"}) {
    auto rot = Rotation::expand(alpha, 36);
    for (const auto& b : check_convergent_bounds(rot)) {
      INFO(alpha << " n=" << b.n);
      CHECK(b.lower_holds);
      CHECK(b.upper_holds);
      CHECK(b.recurrence_holds);
      CHECK(b.coprime);
    }
  }
}

TEST_CASE("ostrowski digits") {
  auto rot = Rotation::expand("golden", 8);
  auto zero = ostrowski_digits(0, rot);
  CHECK(std::all_of(zero.begin(), zero.end(), [](auto d) { return d == 0; }));

  auto four = ostrowski_digits(4, rot);
  std::vector<std::int64_t> expected(8, 0);
  expected[3] = 1;
  expected[1] = 1;
  CHECK(four == expected);

  auto basis = ostrowski_digits(8, rot);  // q_5
  std::vector<std::int64_t> single(8, 0);
  single[5] = 1;
  CHECK(basis == single);

  CHECK_THROWS_AS(ostrowski_digits(34, rot), Error);
  CHECK_THROWS_AS(ostrowski_digits(-1, rot), Error);
}

TEST_CASE("ostrowski reconstruction is exact and legal for every n < q_K") {
  for (const char* alpha : {"golden", "sqrt2m1", "cf:1,3"}) {
    int depth = 1;
    auto rot = Rotation::expand(alpha, depth);
    while (rot.denominators().back() < 100000) rot = Rotation::expand(alpha, ++depth);
    rot = Rotation::expand(alpha, depth - 1);
    const std::int64_t qk = rot.q(rot.depth());
    for (std::int64_t n = 0; n < qk; ++n) {
      auto digits = ostrowski_digits(n, rot);
      std::int64_t sum = 0;
      for (int j = 0; j < rot.depth(); ++j) sum += digits[j] * rot.q(j);
      if (sum != n || !ostrowski_legal(digits, rot)) {
        FAIL_CHECK(alpha << " n=" << n);
        break;
      }
    }
  }
}

TEST_CASE("rotation record round-trips through json") {
  auto rot = Rotation::expand("sqrt2m1", 40);
  auto j = rot.to_json();
  CHECK(j.at("alpha_hex").get<std::string>().starts_with("0x0.6a09e667f3bcc908"));
  auto back = Rotation::from_json(j);
  CHECK(back.partial_quotients() == rot.partial_quotients());
  CHECK(back.step() == rot.step());
  CHECK(back.alpha_hex() == rot.alpha_hex());

  auto bad = j;
  bad["partial_quotients"][3] = 3;
  CHECK(kind_of([&] { Rotation::from_json(bad); }) == ErrorKind::schema_violation);
  bad = j;
  bad.erase("depth");
  CHECK(kind_of([&] { Rotation::from_json(bad); }) == ErrorKind::schema_violation);
}
