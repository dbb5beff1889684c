#include <cmath>
#include <stdexcept>

#include <loopflux/infrared.hpp>
#include <loopflux/mcmc.hpp>
#include <loopflux/spin_oracle.hpp>

#include "doctest.h"

using namespace loopflux;

TEST_CASE("derived seeds separate streams") {
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(mix_seed(1, 2) != mix_seed(2, 2));
  CHECK(mix_seed(7, 0) == mix_seed(7, 0));
}

TEST_CASE("seeded spin chains are bit-identical") {
  Lattice lat = Lattice::free_box(2);
  SpinSampler a(lat, 0.4, 99), b(lat, 0.4, 99), c(lat, 0.4, 100);
  for (int s = 0; s < 50; ++s) {
    a.sweep();
    b.sweep();
    c.sweep();
  }
  CHECK(a.angles() == b.angles());
  CHECK(a.angles() != c.angles());
  CHECK(a.accepted() == b.accepted());
}

TEST_CASE("beta zero resamples every site uniformly") {
  Lattice lat = Lattice::free_box(2);
  SpinSampler a(lat, 0.0, 5);
  for (int s = 0; s < 20; ++s) a.sweep();
  CHECK(a.accepted() == a.proposed());  // flat measure accepts everything

  Estimate cos0 = run_estimator(lat, 0.0, 2000, 100, 100, 11,
                                [&lat](const SpinSampler& ch) {
                                  return std::cos(
                                      ch.angles()[lat.vertex_at(at(0, 0, 0))]);
                                });
  CHECK(std::abs(cos0.mean) <= 3.0 * cos0.se);

  // coincident points give the constant observable
  Estimate diag =
      estimate_two_point(lat, 0.0, at(1, 0, 0), at(1, 0, 0), 1000, 3);
  CHECK(diag.mean == 1.0);
  CHECK(diag.se == 0.0);
}

TEST_CASE("dumbbell estimates match the angle integral") {
  Lattice lat = Lattice::dumbbell();
  const double beta = 0.5;
  QuadratureSpec qs;
  qs.beta = beta;
  const double truth =
      quadrature_two_point(lat, qs, at(0, 0, 0), at(1, 0, 0));
  Estimate mc =
      estimate_two_point(lat, beta, at(0, 0, 0), at(1, 0, 0), 6000, 21);
  CHECK(std::abs(mc.mean - truth) <= 3.0 * mc.se);
  CHECK(mc.se > 0.0);
  CHECK(mc.se < 0.02);
}

TEST_CASE("box-pair average at beta zero counts coincidences") {
  Lattice lat = Lattice::free_box(2);
  Estimate mn = estimate_Mn(lat, 0.0, 1, 3000, 17);
  CHECK(std::abs(mn.mean - 1.0 / 27.0) <= 3.0 * mn.se);
  CHECK_THROWS_AS(estimate_Mn(lat, 0.0, 2, 1000, 17), std::invalid_argument);
  CHECK_THROWS_AS(estimate_Mn(lat, 0.0, -1, 1000, 17), std::invalid_argument);
}

TEST_CASE("magnetization decouples from the boundary at beta zero") {
  Lattice lat = Lattice::plus_box(2);
  Estimate m = estimate_mag(lat, 0.0, at(0, 0, 0), 2000, 13);
  CHECK(std::abs(m.mean) <= 3.0 * m.se);
  CHECK_THROWS_AS(estimate_mag(Lattice::free_box(2), 0.0, at(0, 0, 0), 2000, 1),
                  std::invalid_argument);
}

TEST_CASE("estimator rejects malformed sampling plans") {
  Lattice lat = Lattice::dumbbell();
  auto obs = [](const SpinSampler&) { return 0.0; };
  CHECK_THROWS_AS(run_estimator(lat, 0.1, 1000, 0, 99, 1, obs),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_estimator(lat, 0.1, 99, 0, 100, 1, obs),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_estimator(lat, 0.1, 1000, -1, 100, 1, obs),
                  std::invalid_argument);
  CHECK_THROWS_AS(SpinSampler(lat, -0.1, 1), std::invalid_argument);
}

TEST_CASE("correlation inequalities hold at high temperature") {
  InequalityReport rep =
      inequality_suite(0.5, 2, 3, at(0, 0, 0), at(1, 0, 0), 1500, 4242);
  REQUIRE(rep.checks.size() == 4);
  for (const auto& c : rep.checks) {
    INFO(c.name, ": lhs ", c.lhs, " rhs ", c.rhs, " sigma ", c.sigma);
    CHECK(c.pass);
  }
  CHECK(rep.all_pass);
  CHECK_THROWS_AS(
      inequality_suite(0.5, 2, 2, at(0, 0, 0), at(1, 0, 0), 1500, 1),
      std::invalid_argument);
}

TEST_CASE("worm trajectories stay balanced and reproduce per seed") {
  Lattice lat = Lattice::free_box(2);
  WormSampler a(lat, 0.5, 31), b(lat, 0.5, 31), c(lat, 0.5, 32);
  std::uint64_t ha = 0, hb = 0, hc = 0;
  for (int s = 0; s < 20000; ++s) {
    a.step();  // every step re-checks balance internally
    b.step();
    c.step();
    ha = ha * 31 + a.flux().total_edges();
    hb = hb * 31 + b.flux().total_edges();
    hc = hc * 31 + c.flux().total_edges();
  }
  CHECK(a.flux() == b.flux());
  CHECK(ha == hb);  // the whole trajectory matches, not just the endpoint
  CHECK(a.accepted() == b.accepted());
  CHECK(a.accepted() > 0);
  CHECK(a.square_count() > 0);
  CHECK(ha != hc);

  Lattice tri = Lattice::cycle_graph(3);
  WormSampler t(tri, 0.8, 7);
  CHECK(t.square_count() == 0);  // no 4-cycles: pair moves only
  for (int s = 0; s < 5000; ++s) t.step();
  CHECK(t.accepted() > 0);
}

TEST_CASE("worm acceptance ratios are exact weight ratios") {
  Lattice lat = Lattice::free_box(2);
  const Rat beta(3, 10);

  FluxConfig n(lat);
  n.set_bond_mult(0, 2, 1);
  FluxConfig up = n;
  up.set_bond_mult(0, 3, 2);
  CHECK(pair_move_ratio(n, 0, true, beta) ==
        weight(up, beta).value / weight(n, beta).value);
  CHECK(pair_move_ratio(up, 0, false, beta) ==
        weight(n, beta).value / weight(up, beta).value);
  FluxConfig empty(lat);
  CHECK_THROWS_AS(pair_move_ratio(empty, 0, false, beta),
                  std::invalid_argument);

  // one oriented unit square, with some prior flux in the way
  const SiteId c0 = lat.vertex_at(at(0, 0, 0)), c1 = lat.vertex_at(at(1, 0, 0));
  const SiteId c2 = lat.vertex_at(at(1, 1, 0)), c3 = lat.vertex_at(at(0, 1, 0));
  const std::array<std::pair<SiteId, SiteId>, 4> edges{
      {{c0, c1}, {c1, c2}, {c2, c3}, {c3, c0}}};
  std::vector<std::pair<BondId, bool>> cycle;
  for (const auto& [t, h] : edges) {
    const BondId b = *lat.bond_between(t, h);
    cycle.push_back({b, lat.bonds()[b].lo == t});
  }
  FluxConfig base(lat);
  base.add(c0, c1, 2);
  base.add(c2, c1, 1);
  FluxConfig lifted = base;
  for (const auto& [t, h] : edges) lifted.add(t, h, 1);
  CHECK(square_move_ratio(base, cycle, true, beta) ==
        weight(lifted, beta).value / weight(base, beta).value);
  CHECK(square_move_ratio(lifted, cycle, false, beta) ==
        weight(base, beta).value / weight(lifted, beta).value);
  CHECK_THROWS_AS(square_move_ratio(base, cycle, false, beta),
                  std::invalid_argument);
}

TEST_CASE("loop census fractions are monotone with full terminal coverage") {
  Lattice lat = Lattice::free_box(2);
  WormSampler w(lat, 0.5, 2024);
  LoopProbe probe = loop_structure_probe(w, 20000, 200, 12, 5);
  CHECK(probe.states == 100);
  CHECK(probe.edges_total > 0);
  CHECK(probe.monotone);
  CHECK(probe.terminal_one);
  CHECK(!probe.histogram.empty());
  CHECK(probe.histogram.begin()->first >= 2);  // nothing shorter than a pair
  CHECK(probe.fraction.front() == 0.0);        // no loops of length 1
  CHECK(probe.median_length >= 2);
  for (double f : probe.fraction) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }

  // beta = 0 never accepts an insertion: the census sees empty states only
  WormSampler z(lat, 0.0, 6);
  LoopProbe zero = loop_structure_probe(z, 500, 50, 4, 7);
  CHECK(zero.edges_total == 0);
  CHECK(zero.monotone);
  CHECK(zero.terminal_one);
  for (double f : zero.fraction) CHECK(f == 1.0);

  CHECK_THROWS_AS(loop_structure_probe(w, 0, 1, 4, 1), std::invalid_argument);
}

TEST_CASE("sampled box average obeys the green-scale bound") {
  Lattice lat = Lattice::periodic_box(4);
  const double beta = 0.6;
  Estimate mn = estimate_Mn(lat, beta, 1, 2000, 77);
  GreenSpec gs;
  const double g1 = avg_green(gs, 1);
  BoundReport rep = bound_report(beta, 1, mn.mean, mn.se, mn.batches, g1);
  INFO("lhs ", rep.lhs, " +- ", rep.lhs_stderr, " rhs ", rep.rhs);
  CHECK(rep.pass);
  CHECK(rep.margin > 0);
}
