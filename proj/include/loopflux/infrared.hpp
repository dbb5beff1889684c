#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace loopflux {

// Nearest-neighbour coupling transform on the momentum cube [-pi,pi]^3,
// normalized so the value at k = 0 is exactly 1.
double j_hat(const std::array<double, 3>& k);

enum class QuadScheme { Midpoint, Gauss2 };

// Quadrature plan for the momentum integral: the cube is sliced into dyadic
// shells closing in on the k = 0 singularity; each shell is integrated with
// `grid` cells per axis using the chosen rule.
struct GreenSpec {
  int grid = 32;                            // cells per axis, multiple of 4
  QuadScheme scheme = QuadScheme::Gauss2;   // cell rule
  int levels = 28;                          // dyadic shells toward k = 0
};

// Lattice Green value: the momentum integral of cos(k.(x-y)) / (1 - j_hat(k))
// over [-pi,pi]^3 / (2pi)^3.
double green(const GreenSpec& spec, const std::array<int, 3>& x,
             const std::array<int, 3>& y);

// Same value computed twice with unrelated cell rules; `delta` is their gap.
// Throws std::runtime_error when the gap exceeds `tol`.
struct GreenDual {
  double midpoint = 0;
  double gauss = 0;
  double delta = 0;
};
GreenDual green_dual(int grid, const std::array<int, 3>& dx, double tol = 1e-4);

// Box average (1/|B_n|^2) sum_{x,y in B_n} G(x,y) over the cube |z_k| <= n.
// Values are cached per (spec, displacement) across calls.
double avg_green(const GreenSpec& spec, int n);

// Comparison of a sampled box-averaged two-point value against the
// beta-scaled Green average; passes when lhs <= rhs + 3 sigma.
struct BoundReport {
  double beta = 0;
  int n = 0;
  double lhs = 0;         // sampled average over box pairs
  double lhs_stderr = 0;  // batch-mean standard error
  double rhs = 0;         // avg_green / (2 beta)
  double margin = 0;      // rhs - lhs
  bool pass = false;
};
BoundReport bound_report(double beta, int n, double mn_mean, double mn_stderr,
                         long batches, double avg_g);

}  // namespace loopflux
