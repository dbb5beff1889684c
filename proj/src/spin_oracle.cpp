#include "loopflux/spin_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace loopflux {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<int> component_labels(const Lattice& lat) {
  std::vector<int> comp(lat.vertex_count(), -1);
  int next = 0;
  for (SiteId root = 0; root < lat.vertex_count(); ++root) {
    if (comp[root] >= 0) continue;
    comp[root] = next;
    std::vector<SiteId> stack{root};
    while (!stack.empty()) {
      SiteId v = stack.back();
      stack.pop_back();
      for (const auto& [bid, other] : lat.adjacency()[v])
        if (comp[other] < 0) {
          comp[other] = next;
          stack.push_back(other);
        }
    }
    ++next;
  }
  return comp;
}

struct KahanSum {
  double sum = 0.0, carry = 0.0;
  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Grid sum of prod_bonds exp(2*beta*J_b*cos(theta_a - theta_b)), one vertex
// per component pinned to angle 0 (exact: the grid sum is invariant under
// whole-component grid rotations), times an optional cos(theta_x - theta_y).
double grid_sum(const Lattice& lat, const QuadratureSpec& spec,
                std::optional<std::pair<SiteId, SiteId>> cos_pair) {
  if (spec.points < 8)
    throw std::invalid_argument("quadrature: need at least 8 points");
  const int P = spec.points;
  const std::size_t V = lat.vertex_count();
  auto comp = component_labels(lat);

  std::vector<char> pinned(V, 0);
  {
    std::vector<char> seen;
    for (SiteId v = 0; v < V; ++v) {
      if (std::size_t(comp[v]) >= seen.size()) seen.resize(comp[v] + 1, 0);
      if (!seen[comp[v]]) {
        seen[comp[v]] = 1;
        pinned[v] = 1;
      }
    }
  }
  std::size_t free_angles = 0;
  for (SiteId v = 0; v < V; ++v)
    if (!pinned[v]) ++free_angles;
  if (free_angles > 8)
    throw cost_guard_error("quadrature: more than 8 free angles");
  double work = 1.0;
  for (std::size_t i = 0; i < free_angles; ++i) work *= P;
  if (work > double(1u << 31))
    throw cost_guard_error("quadrature: grid larger than 2^31 points");

  // per-bond lookup tables over the angle difference d = (g_lo - g_hi) mod P
  std::vector<std::vector<double>> w(lat.bonds().size());
  for (std::size_t b = 0; b < lat.bonds().size(); ++b) {
    double arg = 2.0 * spec.beta * rat_to_double(lat.bonds()[b].J);
    w[b].resize(P);
    for (int d = 0; d < P; ++d)
      w[b][d] = std::exp(arg * std::cos(kTwoPi * d / P));
  }
  std::vector<double> cos_table(P);
  for (int d = 0; d < P; ++d) cos_table[d] = std::cos(kTwoPi * d / P);

  // bonds whose other endpoint is already assigned when v gets its angle
  std::vector<std::vector<std::pair<BondId, SiteId>>> closing(V);
  for (BondId b = 0; b < lat.bonds().size(); ++b) {
    SiteId lo = lat.bonds()[b].lo, hi = lat.bonds()[b].hi;
    closing[std::max(lo, hi)].push_back({b, std::min(lo, hi)});
  }

  std::vector<int> g(V, 0);
  KahanSum acc;
  auto recurse = [&](auto&& self, SiteId v, double prod) -> void {
    if (v == V) {
      if (cos_pair)
        prod *= cos_table[((g[cos_pair->first] - g[cos_pair->second]) % P +
                           P) % P];
      acc.add(prod);
      return;
    }
    int lo = 0, hi = pinned[v] ? 1 : P;
    for (int a = lo; a < hi; ++a) {
      g[v] = a;
      double p = prod;
      for (const auto& [bid, other] : closing[v])
        p *= w[bid][((g[v] - g[other]) % P + P) % P];
      self(self, v + 1, p);
    }
  };
  recurse(recurse, 0, 1.0);

  double norm = 1.0;
  for (std::size_t i = 0; i < free_angles; ++i) norm *= P;
  return acc.sum / norm;
}

}  // namespace

double quadrature_Z(const Lattice& lat, const QuadratureSpec& spec) {
  return grid_sum(lat, spec, std::nullopt);
}

double quadrature_two_point(const Lattice& lat, const QuadratureSpec& spec,
                            const Site& x, const Site& y) {
  if (!lat.member(x) || !lat.member(y))
    throw std::invalid_argument("two_point: site not in lattice");
  if (x == y) return 1.0;
  auto vx = lat.vertex_of(x), vy = lat.vertex_of(y);
  if (!vx || !vy) return 0.0;  // decoupled shell spin averages to zero
  if (*vx == *vy) return 1.0;  // periodic wrap identified the two names
  auto comp = component_labels(lat);
  if (comp[*vx] != comp[*vy]) return 0.0;  // independent components
  double num = grid_sum(lat, spec, std::make_pair(*vx, *vy));
  double den = grid_sum(lat, spec, std::nullopt);
  return num / den;
}

double bessel_bond_sum(int m, double x, int cutoff) {
  if (x < 0) throw std::invalid_argument("bessel_bond_sum: x < 0");
  int am = std::abs(m);
  if (cutoff < am) throw std::invalid_argument("bessel_bond_sum: cutoff < |m|");
  double total = 0.0;
  for (int s = am; s <= cutoff; s += 2) {
    int a = (s + m) / 2, b = (s - m) / 2;
    double term = 1.0;  // x^s / (a! b!)
    for (int i = 1; i <= a; ++i) term *= x / i;
    for (int i = 1; i <= b; ++i) term *= x / i;
    total += term;
  }
  return total;
}

double modified_bessel(int m, double arg) {
  return std::cyl_bessel_i(double(std::abs(m)), arg);
}

double bessel_Z(const Lattice& lat, double beta) {
  auto comp = component_labels(lat);
  int ncomp = 0;
  for (int c : comp) ncomp = std::max(ncomp, c + 1);
  double Z = 1.0;
  for (int c = 0; c < ncomp; ++c) {
    std::vector<SiteId> verts;
    for (SiteId v = 0; v < lat.vertex_count(); ++v)
      if (comp[v] == c) verts.push_back(v);
    std::vector<BondId> bonds;
    for (BondId b = 0; b < lat.bonds().size(); ++b)
      if (comp[lat.bonds()[b].lo] == c) bonds.push_back(b);
    if (bonds.size() + 1 == verts.size()) {
      // tree: no cycles, so every bond carries zero net winding
      for (BondId b : bonds)
        Z *= modified_bessel(0, 2.0 * beta * rat_to_double(lat.bonds()[b].J));
    } else if (bonds.size() == verts.size() && bonds.size() <= 12) {
      bool all_deg2 = true;
      for (SiteId v : verts)
        if (lat.adjacency()[v].size() != 2) all_deg2 = false;
      if (!all_deg2)
        throw std::invalid_argument("bessel_Z: component is not a tree/cycle");
      // single cycle: one common winding number around it
      double sum = 0.0;
      for (int m = -30; m <= 30; ++m) {
        double term = 1.0;
        for (BondId b : bonds)
          term *=
              modified_bessel(m, 2.0 * beta * rat_to_double(lat.bonds()[b].J));
        sum += term;
      }
      Z *= sum;
    } else {
      throw std::invalid_argument("bessel_Z: component is not a tree/cycle");
    }
  }
  return Z;
}

OracleResult run_oracle(const Lattice& lat, const QuadratureSpec& spec,
                        const std::vector<std::pair<Site, Site>>& pairs) {
  OracleResult out;
  out.Z = quadrature_Z(lat, spec);
  for (const auto& [x, y] : pairs)
    out.two_point.push_back({{x, y}, quadrature_two_point(lat, spec, x, y)});
  if (lat.has_ghost()) {
    Site origin = at(0, 0, 0);
    out.magnetization =
        quadrature_two_point(lat, spec, origin, ghost_site());
  }
  return out;
}

}  // namespace loopflux
