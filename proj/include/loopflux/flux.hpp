#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "loopflux/lattice.hpp"

namespace loopflux {

// Nonnegative edge multiplicities per ordered adjacent pair, stored per bond
// as (lo->hi, hi->lo). Value type; the lattice is referenced, not owned.
class FluxConfig {
 public:
  explicit FluxConfig(const Lattice& lat)
      : lat_(&lat), m_(lat.bonds().size(), {0, 0}) {}

  const Lattice& lattice() const { return *lat_; }

  std::uint32_t get(SiteId from, SiteId to) const;
  void set(SiteId from, SiteId to, std::uint32_t n);  // throws without a bond
  void add(SiteId from, SiteId to, int delta);

  const std::pair<std::uint32_t, std::uint32_t>& bond_mult(BondId b) const {
    return m_[b];
  }
  void set_bond_mult(BondId b, std::uint32_t fwd, std::uint32_t bwd) {
    m_[b] = {fwd, bwd};
  }

  std::uint64_t total_edges() const;
  std::uint64_t out_degree(SiteId v) const;
  std::uint64_t in_degree(SiteId v) const;
  FluxConfig reversed() const;
  std::string str() const;

  friend bool operator==(const FluxConfig& a, const FluxConfig& b) {
    return a.m_ == b.m_;
  }
  friend auto operator<=>(const FluxConfig& a, const FluxConfig& b) {
    return a.m_ <=> b.m_;
  }

 private:
  const Lattice* lat_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> m_;
};

struct BoundarySpec {
  enum class Kind { Empty, SourceSink };
  Kind kind = Kind::Empty;
  Site x{}, y{};

  static BoundarySpec empty() { return {}; }
  static BoundarySpec source_sink(const Site& x, const Site& y);

  friend bool operator==(const BoundarySpec&, const BoundarySpec&) = default;
};

struct GraphWeight {
  Rat value;  // prod over ordered pairs of (beta*J)^n / n!
  Rat beta;
};

// out-degree minus in-degree, indexed by vertex id; entries sum to zero.
std::vector<int> boundary(const FluxConfig& n);
bool satisfies(const FluxConfig& n, const BoundarySpec& b);
GraphWeight weight(const FluxConfig& n, const Rat& beta);

// Direction-blind per-bond totals of two stacked configs.
struct BondTotals {
  const Lattice* lat = nullptr;
  std::vector<std::uint64_t> per_bond;
  std::uint64_t total_edges() const;
};
BondTotals merge(const FluxConfig& ndelta, const FluxConfig& n0);

// Ways of interleaving the two configs inside their merged bond totals:
// product over bonds of (sum of the four counts)! / (each count)!.
Int embedding_count(const FluxConfig& ndelta, const FluxConfig& n0);

// Every config with total_edges <= max_edges satisfying b, visited once in
// lexicographic (bond, multiplicity) order. The weight argument is the exact
// config weight when beta is given, 1 otherwise. Guards: max_edges <= 16 and
// a global node budget; violations throw cost_guard_error.
void enumerate_flux(
    const Lattice& lat, const BoundarySpec& b, int max_edges,
    const std::function<void(const FluxConfig&, const Rat&)>& sink,
    const Rat* beta = nullptr);
std::vector<FluxConfig> enumerate_flux_all(const Lattice& lat,
                                           const BoundarySpec& b,
                                           int max_edges);

Rat truncated_Z(const Lattice& lat, const Rat& beta, int max_edges);
// Directed half-sum over sourced configs; both directions add to the full
// two-point numerator.
Rat truncated_F(const Lattice& lat, const Rat& beta, const Site& x,
                const Site& y, int max_edges);

// The two cross-boundary cancellation terms for a plus/free box pair of the
// same radius: D1 = Ft(x->y)/Zt - F0(y->x)/Z0 and D2 with x and y swapped.
std::pair<Rat, Rat> difference_terms(const Lattice& lat_plus,
                                     const Lattice& lat_free, const Rat& beta,
                                     const Site& x, const Site& y,
                                     int max_edges);

}  // namespace loopflux
