#include <cmath>
#include <stdexcept>

#include <loopflux/infrared.hpp>

#include "doctest.h"

using namespace loopflux;

namespace {
// simple-cubic lattice Green value at the origin (Watson's constant)
constexpr double kCubicGreen0 = 1.516386059151978;
constexpr std::array<int, 3> kO{0, 0, 0};
}  // namespace

TEST_CASE("coupling transform hits its extremes exactly") {
  const double pi = std::acos(-1.0);
  CHECK(j_hat({0.0, 0.0, 0.0}) == 1.0);
  CHECK(j_hat({pi, pi, pi}) == -1.0);
  CHECK(j_hat({0.3, -1.2, 2.5}) == j_hat({-0.3, 1.2, -2.5}));

  // strictly below 1 everywhere off the origin, probed on a node grid that
  // skips k = 0 by construction
  const int m = 24;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < m; ++l) {
        std::array<double, 3> k{-pi + (i + 0.5) * 2 * pi / m,
                                -pi + (j + 0.5) * 2 * pi / m,
                                -pi + (l + 0.5) * 2 * pi / m};
        CHECK(1.0 - j_hat(k) > 0.0);
        CHECK(std::abs(j_hat(k)) <= 1.0);
      }
}

TEST_CASE("green rejects malformed quadrature plans") {
  GreenSpec bad;
  bad.grid = 24;  // below the floor
  CHECK_THROWS_AS((void)green(bad, kO, kO), std::invalid_argument);
  bad.grid = 34;  // not a multiple of 4
  CHECK_THROWS_AS((void)green(bad, kO, kO), std::invalid_argument);
  bad.grid = 32;
  bad.levels = 0;
  CHECK_THROWS_AS((void)green(bad, kO, kO), std::invalid_argument);
  CHECK_THROWS_AS(avg_green(bad, 1), std::invalid_argument);
}

TEST_CASE("green depends only on the displacement geometry") {
  GreenSpec s;
  s.levels = 20;
  const double a = green(s, {2, 1, 0}, {1, 1, -1});   // d = (1,0,1)
  const double b = green(s, {5, -3, 2}, {4, -3, 1});  // same displacement
  CHECK(a == b);
  const double swapped = green(s, {1, 1, -1}, {2, 1, 0});  // d = (-1,0,-1)
  CHECK(a == doctest::Approx(swapped).epsilon(1e-13));
  const double permuted = green(s, {0, 1, 1}, kO);  // axes permuted
  CHECK(a == doctest::Approx(permuted).epsilon(1e-13));
}

TEST_CASE("dual quadrature schemes agree at the origin") {
  GreenDual g = green_dual(32, kO);
  CHECK(g.delta < 1e-4);
  CHECK(std::abs(g.gauss - kCubicGreen0) < 1e-3);
  CHECK(std::abs(g.midpoint - kCubicGreen0) < 1e-3);
  CHECK_THROWS_AS((void)green_dual(32, kO, 1e-9), std::runtime_error);
}

TEST_CASE("green decays strictly along an axis") {
  GreenSpec s;
  double prev = green(s, kO, kO);
  for (int r = 1; r <= 6; ++r) {
    const double cur = green(s, {r, 0, 0}, kO);
    CHECK(cur > 0.0);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("quadrature satisfies the lattice delta identity") {
  // (1 - j_hat) has the integrand as its reciprocal, so on the lattice the
  // value at the origin exceeds the neighbour average by exactly 1 and is
  // discretely harmonic everywhere else
  GreenSpec s;
  const double g0 = green(s, kO, kO);
  const double g1 = green(s, {1, 0, 0}, kO);
  const double g2 = green(s, {2, 0, 0}, kO);
  const double g11 = green(s, {1, 1, 0}, kO);
  CHECK(g0 - g1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(6 * g1 == doctest::Approx(g0 + g2 + 4 * g11).epsilon(1e-5));
}

TEST_CASE("box-averaged green shrinks as the box grows") {
  GreenSpec s;
  s.levels = 24;
  double prev = avg_green(s, 0);
  CHECK(prev == doctest::Approx(green(s, kO, kO)));
  for (int n = 1; n <= 4; ++n) {
    const double cur = avg_green(s, n);
    CHECK(cur > 0.0);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(avg_green(s, -1), std::invalid_argument);
}

TEST_CASE("bound report compares samples against the green scale") {
  BoundReport a = bound_report(0.3, 1, 0.2, 0.01, 200, 0.9);
  BoundReport b = bound_report(0.6, 1, 0.2, 0.01, 200, 0.9);
  CHECK(a.rhs == doctest::Approx(0.9 / 0.6));
  CHECK(a.rhs == doctest::Approx(2.0 * b.rhs));  // rhs scales as 1/beta
  CHECK(a.pass);

  BoundReport c = bound_report(0.5, 1, 0.95, 0.01, 150, 0.9);
  CHECK(c.rhs == doctest::Approx(0.9));
  CHECK(!c.pass);  // overshoots three sigma
  CHECK(c.margin == doctest::Approx(-0.05));
  BoundReport d = bound_report(0.5, 1, 0.92, 0.01, 150, 0.9);
  CHECK(d.pass);  // inside three sigma

  CHECK_THROWS_AS(bound_report(0.0, 1, 0.2, 0.01, 200, 0.9),
                  std::invalid_argument);
  CHECK_THROWS_AS(bound_report(0.5, 1, 0.2, 0.01, 99, 0.9),
                  std::invalid_argument);
  CHECK_THROWS_AS(bound_report(0.5, -1, 0.2, 0.01, 200, 0.9),
                  std::invalid_argument);
  CHECK_THROWS_AS(bound_report(0.5, 1, 0.2, -0.01, 200, 0.9),
                  std::invalid_argument);
}
