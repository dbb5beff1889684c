#include <cmath>
#include <set>

#include "doctest.h"
#include "loopflux/flux.hpp"
#include "loopflux/spin_oracle.hpp"

using namespace loopflux;

namespace {
Site A = at(-1, 0, 0), B = at(0, 0, 0), C = at(1, 0, 0);
}

TEST_CASE("boundary operator: sources, sinks, conservation") {
  Lattice p = Lattice::path_graph(3);
  FluxConfig n(p);
  CHECK(boundary(n) == std::vector<int>(3, 0));

  n.add(p.vertex_at(A), p.vertex_at(B), 1);
  auto d = boundary(n);
  CHECK(d[p.vertex_at(A)] == 1);
  CHECK(d[p.vertex_at(B)] == -1);
  CHECK(satisfies(n, BoundarySpec::source_sink(A, B)));
  CHECK(!satisfies(n, BoundarySpec::empty()));
  CHECK(!satisfies(n, BoundarySpec::source_sink(B, A)));

  Lattice cyc = Lattice::cycle_graph(3);
  FluxConfig ring(cyc);
  ring.add(0, 1, 1);
  ring.add(1, 2, 1);
  ring.add(2, 0, 1);
  CHECK(satisfies(ring, BoundarySpec::empty()));
  int total = 0;
  for (int v : boundary(ring)) total += v;
  CHECK(total == 0);

  CHECK_THROWS((void)BoundarySpec::source_sink(A, A));
  CHECK_THROWS((void)BoundarySpec::source_sink(A, ghost_site()));
}

TEST_CASE("config weights are the exact per-edge rationals") {
  Lattice p = Lattice::path_graph(3);
  FluxConfig n(p);
  CHECK(weight(n, Rat(1, 2)).value == 1);

  n.set(p.vertex_at(A), p.vertex_at(B), 2);
  CHECK(weight(n, 1).value == Rat(1, 72));  // (1/6)^2 / 2!

  FluxConfig m(p);
  m.set(p.vertex_at(B), p.vertex_at(C), 1);
  FluxConfig both = n;
  both.set(p.vertex_at(B), p.vertex_at(C), 1);
  CHECK(weight(both, Rat(2, 3)).value ==
        weight(n, Rat(2, 3)).value * weight(m, Rat(2, 3)).value);
  CHECK_THROWS((void)weight(n, Rat(-1)));
}

TEST_CASE("merge flattens direction; embedding counts are multinomials") {
  Lattice p = Lattice::path_graph(3);
  FluxConfig nd(p), n0(p);
  nd.set(p.vertex_at(A), p.vertex_at(B), 1);
  n0.set(p.vertex_at(B), p.vertex_at(A), 1);
  n0.set(p.vertex_at(B), p.vertex_at(C), 2);

  BondTotals t = merge(nd, n0);
  CHECK(t.total_edges() == 4);
  CHECK(t.per_bond == merge(n0, nd).per_bond);

  FluxConfig empty(p);
  BondTotals solo = merge(nd, empty);
  CHECK(solo.total_edges() == nd.total_edges());

  CHECK(embedding_count(nd, empty) == 1);
  CHECK(embedding_count(nd, n0) == 2 * 1);  // 2!/1!/1! per shared bond
  FluxConfig two(p);
  two.set(p.vertex_at(A), p.vertex_at(B), 2);
  CHECK(embedding_count(nd, two) == 3);  // 3!/1!/2!
}

TEST_CASE("enumeration: exact small counts, order, dedup, reversal closure") {
  Lattice d = Lattice::dumbbell();
  CHECK(enumerate_flux_all(d, BoundarySpec::empty(), 0).size() == 1);
  auto configs = enumerate_flux_all(d, BoundarySpec::empty(), 2);
  REQUIRE(configs.size() == 2);
  CHECK(configs[0].total_edges() == 0);  // lexicographic: empty leads
  CHECK(configs[1].bond_mult(0) == std::pair<std::uint32_t, std::uint32_t>{1, 1});

  Lattice c3 = Lattice::cycle_graph(3);
  auto balanced = enumerate_flux_all(c3, BoundarySpec::empty(), 3);
  CHECK(balanced.size() == 6);  // empty, 3 bond pairs, 2 oriented triangles

  Lattice p = Lattice::path_graph(3);
  CHECK(enumerate_flux_all(p, BoundarySpec::source_sink(A, C), 2).size() == 1);
  CHECK(enumerate_flux_all(p, BoundarySpec::source_sink(A, C), 4).size() == 3);

  auto big = enumerate_flux_all(c3, BoundarySpec::empty(), 6);
  CHECK(big.size() > balanced.size());
  std::set<FluxConfig> dedup(big.begin(), big.end());
  CHECK(dedup.size() == big.size());
  for (const FluxConfig& n : big) {
    CHECK(satisfies(n, BoundarySpec::empty()));
    CHECK(dedup.count(n.reversed()) == 1);
  }
  // identical call, identical stream
  CHECK(big == enumerate_flux_all(c3, BoundarySpec::empty(), 6));

  CHECK_THROWS_AS((void)enumerate_flux_all(d, BoundarySpec::empty(), 17),
                  cost_guard_error);
}

TEST_CASE("truncated series nails the quadrature oracle") {
  for (double bd : {0.1, 0.3, 0.5}) {
    Rat beta = parse_rational(bd == 0.1 ? "1/10" : bd == 0.3 ? "3/10" : "1/2");
    for (const Lattice& lat :
         {Lattice::dumbbell(), Lattice::path_graph(3),
          Lattice::cycle_graph(4)}) {
      double zq = quadrature_Z(lat, {32, bd});
      double zt = rat_to_double(truncated_Z(lat, beta, 16));
      CHECK(std::abs(zt - zq) / zq <= 1e-8);
    }
  }
  // monotone in the cutoff: all terms are nonnegative
  Lattice c4 = Lattice::cycle_graph(4);
  Rat prev = 0;
  for (int cap : {0, 2, 4, 8, 12}) {
    Rat z = truncated_Z(c4, Rat(1, 2), cap);
    CHECK(z >= prev);
    prev = z;
  }
}

TEST_CASE("two-point ratio from flux matches quadrature and Bessel") {
  Rat beta(1, 2);
  Lattice d = Lattice::dumbbell();
  Site x = at(0, 0, 0), y = at(1, 0, 0);
  Rat f = truncated_F(d, beta, x, y, 16);
  Rat z = truncated_Z(d, beta, 16);
  double ratio = rat_to_double(2 * f / z);
  CHECK(std::abs(ratio - quadrature_two_point(d, {32, 0.5}, x, y)) <= 1e-8);
  double I0 = modified_bessel(0, 2.0 * 0.5 / 6.0);
  double I1 = modified_bessel(1, 2.0 * 0.5 / 6.0);
  CHECK(std::abs(ratio - I1 / I0) <= 1e-9);

  // reversal symmetry makes the directed halves exactly equal
  CHECK(truncated_F(d, beta, x, y, 16) == truncated_F(d, beta, y, x, 16));
  Lattice p = Lattice::path_graph(3);
  CHECK(truncated_F(p, beta, A, C, 10) == truncated_F(p, beta, C, A, 10));
  CHECK(truncated_F(p, Rat(0), A, C, 10) == 0);

  Lattice c4 = Lattice::cycle_graph(4);
  Site u = at(0, 0, 0), w = at(1, 1, 0);
  double r4 = rat_to_double(2 * truncated_F(c4, beta, u, w, 16) /
                            truncated_Z(c4, beta, 16));
  CHECK(std::abs(r4 - quadrature_two_point(c4, {32, 0.5}, u, w)) <= 1e-8);
}

TEST_CASE("difference terms on a radius-2 box pair") {
  Lattice lp = Lattice::plus_box(2);
  Lattice lf = Lattice::free_box(2);
  Site x = at(-1, 0, 0), y = at(1, 0, 0);

  auto [z1, z2] = difference_terms(lp, lf, Rat(0), x, y, 4);
  CHECK(z1 == 0);
  CHECK(z2 == 0);

  Rat beta(3, 10);
  auto [d1, d2] = difference_terms(lp, lf, beta, x, y, 4);
  CHECK(d1 == d2);  // directed halves pair up under edge reversal
  CHECK(d1 != 0);

  // ghost routes make the plus-side ratio strictly larger at equal cutoff
  Rat ratio_plus = truncated_F(lp, beta, x, y, 4) / truncated_Z(lp, beta, 4);
  Rat ratio_free = truncated_F(lf, beta, x, y, 4) / truncated_Z(lf, beta, 4);
  CHECK(d1 == ratio_plus - ratio_free);

  CHECK_THROWS((void)difference_terms(lp, lf, beta, x, x, 4));
  CHECK_THROWS((void)difference_terms(lf, lf, beta, x, y, 4));
  CHECK_THROWS((void)difference_terms(lp, Lattice::free_box(3), beta, x, y, 4));
  // boundary-shell sites carry no flux and are rejected up front
  CHECK_THROWS((void)difference_terms(lp, lf, beta, at(2, 0, 0), y, 4));
}
