#include <cmath>

#include "doctest.h"
#include "loopflux/spin_oracle.hpp"

using namespace loopflux;

TEST_CASE("partition value is exactly 1 at beta = 0") {
  QuadratureSpec spec{16, 0.0};
  CHECK(quadrature_Z(Lattice::dumbbell(), spec) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(quadrature_Z(Lattice::cycle_graph(4), spec) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(quadrature_Z(Lattice::plus_box(1), spec) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(bessel_Z(Lattice::path_graph(3), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("dumbbell closes to the first Bessel ratio") {
  for (double beta : {0.1, 0.5, 1.0}) {
    QuadratureSpec spec{32, beta};
    Lattice d = Lattice::dumbbell();
    double I0 = modified_bessel(0, beta / 3.0);  // bond strength 2*beta*J
    double I1 = modified_bessel(1, beta / 3.0);
    CHECK(quadrature_Z(d, spec) == doctest::Approx(I0).epsilon(1e-12));
    CHECK(quadrature_two_point(d, spec, at(0, 0, 0), at(1, 0, 0)) ==
          doctest::Approx(I1 / I0).epsilon(1e-12));
  }
}

TEST_CASE("series bond sum converges to the library Bessel value") {
  CHECK(bessel_bond_sum(0, 0.0, 5) == 1.0);
  CHECK(bessel_bond_sum(1, 0.05, 20) ==
        doctest::Approx(modified_bessel(1, 0.1)).epsilon(1e-12));
  CHECK(bessel_bond_sum(-2, 0.3, 24) == bessel_bond_sum(2, 0.3, 24));
  CHECK(bessel_bond_sum(0, 0.5, 30) ==
        doctest::Approx(modified_bessel(0, 1.0)).epsilon(1e-13));
  // partial sums of nonnegative terms grow with the cutoff
  CHECK(bessel_bond_sum(1, 0.4, 5) <= bessel_bond_sum(1, 0.4, 9));
  CHECK_THROWS((void)bessel_bond_sum(3, 0.1, 2));
}

TEST_CASE("closed forms match quadrature on trees and cycles") {
  for (double beta : {0.3, 0.7, 1.0}) {
    QuadratureSpec spec{32, beta};
    for (const Lattice& lat :
         {Lattice::dumbbell(), Lattice::path_graph(3), Lattice::path_graph(4),
          Lattice::cycle_graph(3), Lattice::cycle_graph(4),
          Lattice::cycle_graph(5)}) {
      double zq = quadrature_Z(lat, spec);
      double zb = bessel_Z(lat, beta);
      CHECK(std::abs(zb - zq) / zq <= 1e-10);
    }
  }
  // 3-path: product of two independent bond factors
  double I0 = modified_bessel(0, 2.0 * 0.5 / 6.0);
  CHECK(bessel_Z(Lattice::path_graph(3), 0.5) ==
        doctest::Approx(I0 * I0).epsilon(1e-13));
  CHECK_THROWS((void)bessel_Z(Lattice::free_box(2), 0.5));
}

TEST_CASE("doubling the grid changes nothing at double precision") {
  for (const Lattice& lat : {Lattice::dumbbell(), Lattice::cycle_graph(4)}) {
    double z32 = quadrature_Z(lat, {32, 1.0});
    double z64 = quadrature_Z(lat, {64, 1.0});
    CHECK(std::abs(z64 - z32) < 1e-12);
  }
}

TEST_CASE("two-point basics: diagonal, symmetry, decoupling, range") {
  QuadratureSpec spec{32, 0.6};
  Lattice c = Lattice::cycle_graph(4);
  Site x = at(0, 0, 0), y = at(1, 1, 0);  // opposite corners
  CHECK(quadrature_two_point(c, spec, x, x) == 1.0);
  double xy = quadrature_two_point(c, spec, x, y);
  double yx = quadrature_two_point(c, spec, y, x);
  CHECK(xy == doctest::Approx(yx).epsilon(1e-12));
  CHECK(std::abs(xy) <= 1.0 + 1e-9);
  CHECK(quadrature_two_point(c, {32, 0.0}, x, y) ==
        doctest::Approx(0.0).epsilon(1e-13));

  // free-bc shell spins carry no bonds: exact zero correlation
  Lattice f = Lattice::free_box(1);
  CHECK(quadrature_two_point(f, spec, at(0, 0, 0), at(1, 0, 0)) == 0.0);
  CHECK_THROWS((void)quadrature_two_point(f, spec, at(0, 0, 0), at(5, 0, 0)));
}

TEST_CASE("two-point grows with beta on a fixed graph") {
  Lattice c = Lattice::cycle_graph(4);
  double prev = -1.0;
  for (int i = 1; i <= 10; ++i) {
    double v = quadrature_two_point(c, {32, 0.1 * i}, at(0, 0, 0), at(1, 0, 0));
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
}

TEST_CASE("ghost correlator doubles as the boundary-field magnetization") {
  // one interior spin coupled to the ghost with total boundary weight 1:
  // <cos theta_0> under a fixed boundary equals the ghost two-point value
  Lattice p = Lattice::plus_box(1);
  REQUIRE(p.vertex_count() == 2);
  REQUIRE(p.coupling(at(0, 0, 0), ghost_site()) == 1);
  double beta = 0.8;
  double m = quadrature_two_point(p, {48, beta}, at(0, 0, 0), ghost_site());
  double expect = modified_bessel(1, 2.0 * beta) / modified_bessel(0, 2.0 * beta);
  CHECK(m == doctest::Approx(expect).epsilon(1e-12));

  OracleResult r = run_oracle(p, {48, beta}, {{at(0, 0, 0), ghost_site()}});
  REQUIRE(r.magnetization.has_value());
  CHECK(*r.magnetization == doctest::Approx(m).epsilon(1e-13));
  CHECK(r.two_point.size() == 1);
}

TEST_CASE("cost guards reject oversized grids, bad specs") {
  CHECK_THROWS_AS((void)quadrature_Z(Lattice::free_box(2), {16, 0.1}),
                  cost_guard_error);
  CHECK_THROWS_AS((void)quadrature_Z(Lattice::dumbbell(), {4, 0.1}),
                  std::invalid_argument);
  // 8 free angles within budget: periodic box with a cheap grid
  Lattice p1 = Lattice::periodic_box(1);  // 8 vertices, 7 free angles
  CHECK(quadrature_Z(p1, {8, 0.0}) == doctest::Approx(1.0).epsilon(1e-13));
}
