#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "loopflux/lattice.hpp"

namespace loopflux {

// Uniform angle grid on [0,2pi); trapezoid sums on the periodic circle are
// spectrally accurate, so modest point counts reach ~1e-12.
struct QuadratureSpec {
  int points = 32;
  double beta = 0.0;
};

struct OracleResult {
  double Z = 1.0;
  std::vector<std::pair<std::pair<Site, Site>, double>> two_point;
  std::optional<double> magnetization;  // ghost lattices only
};

// Direct integration of the angle measure (dtheta/2pi per free angle, one
// angle pinned per connected component). Throws cost_guard_error when the
// grid would be too large, std::invalid_argument for points < 8.
double quadrature_Z(const Lattice& lat, const QuadratureSpec& spec);
double quadrature_two_point(const Lattice& lat, const QuadratureSpec& spec,
                            const Site& x, const Site& y);

// Partial sum over s = a+b <= cutoff, a-b = m, of x^(a+b)/(a! b!); converges
// monotonically (x >= 0) to the modified Bessel value I_m(2x).
double bessel_bond_sum(int m, double x, int cutoff);

// Library-backed I_m(arg); the independent reference for the series above.
double modified_bessel(int m, double arg);

// Closed-form partition value for lattices whose components are trees or
// single cycles: trees contribute one I_0 factor per bond, a cycle sums a
// common winding number over its bonds. Throws on any other topology.
double bessel_Z(const Lattice& lat, double beta);

OracleResult run_oracle(const Lattice& lat, const QuadratureSpec& spec,
                        const std::vector<std::pair<Site, Site>>& pairs);

}  // namespace loopflux
