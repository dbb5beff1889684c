#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "loopflux/flux.hpp"
#include "loopflux/lattice.hpp"

namespace loopflux {

// ---- undirected two-layer switching -------------------------------------

struct UPath {
  std::vector<BondId> edges;  // consecutive bonds share a site, x..y walk
  bool delta_avoiding = true;

  friend bool operator==(const UPath&, const UPath&) = default;
};

// Two disjoint undirected edge layers; the tag says which one carries the
// odd degrees at {x,y}. The second layer never touches the ghost.
struct UndirectedPair {
  std::vector<BondId> first;   // may touch the ghost
  std::vector<BondId> second;  // ghost-free layer
  bool first_sinked = true;

  friend bool operator==(const UndirectedPair&, const UndirectedPair&) =
      default;
  friend auto operator<=>(const UndirectedPair&, const UndirectedPair&) =
      default;
};

// All ghost-avoiding simple x..y paths, ordered by (length, bond sequence).
std::vector<UPath> enumerate_upaths(const Lattice& lat, const Site& x,
                                    const Site& y);

// Layer-exchange along p: edges of p swap layers, everything else stays;
// the sink tag flips. Involution; preserves the union exactly.
UndirectedPair undirected_switch(const UndirectedPair& pair, const UPath& p);

// Assign each pair to its first containing path; throws when some pair
// contains none of the listed paths.
std::vector<std::vector<std::size_t>> canonical_partition(
    const std::vector<UndirectedPair>& pairs, const std::vector<UPath>& paths);

struct UndirectedReport {
  std::size_t lambda_size = 0, gamma_size = 0;
  std::size_t blocks_used = 0;
  std::vector<std::pair<std::size_t, std::size_t>> block_sizes;
  bool ok = false;
  std::string failure;
};

// Exhaustive check of the layer-exchange bijection between the sinked-first
// family and the sinked-second family with unions containing a ghost-free
// x..y path, over all disjoint pairs with at most max_edges edges.
UndirectedReport verify_undirected_bijection(const Lattice& lat, const Site& x,
                                             const Site& y, int max_edges);

// ---- directed multiset switching -----------------------------------------

struct DPath {
  std::vector<std::pair<SiteId, SiteId>> edges;  // tail/head chain x..y

  friend bool operator==(const DPath&, const DPath&) = default;
};

DPath reverse_path(const DPath& p);

struct DirectedPair {
  FluxConfig first, second;
  bool first_sinked = true;

  friend bool operator==(const DirectedPair&, const DirectedPair&) = default;
  friend auto operator<=>(const DirectedPair&, const DirectedPair&) = default;
};

// Path reversal across layers: each path edge is removed from one layer
// (the sinked one when available, or as forced) and its reversal joins the
// other layer; the sink tag flips and the source/sink pair swaps to y->x.
// The returned per-edge record says which layer supplied each edge; feeding
// it back through directed_switch_back restores the input exactly.
struct DirectedSwitchResult {
  DirectedPair pair;
  std::vector<bool> from_sinked;
};

DirectedSwitchResult directed_switch(const DirectedPair& pr, const DPath& p,
                                     const std::vector<bool>* forced = nullptr);
DirectedPair directed_switch_back(const DirectedPair& switched,
                                  const DPath& original_path,
                                  const std::vector<bool>& record);

// All ghost-avoiding simple directed x->y paths, (length, lex) order.
std::vector<DPath> enumerate_dpaths(const Lattice& lat, const Site& x,
                                    const Site& y);

struct DirectedReport {
  std::size_t pairs_checked = 0, switches_checked = 0;
  bool ok = false;
  std::string failure;
};

// Exhaustive small-scale properties of directed_switch: edge-count
// preservation, source/sink swap, record-based reversibility.
DirectedReport verify_directed_switch(const Lattice& lat, const Site& x,
                                      const Site& y, int max_edges);

// ---- the reproducible failure of record-free directed switching ----------

struct AdverseWitness {
  std::shared_ptr<const Lattice> lat;
  DirectedPair g, f;
  DPath p, q;            // p inside g only, q inside f only
  DirectedPair image;    // common value of both switches
};

// Deterministic search over small two-layer configs for distinct inputs
// whose canonical switches collide; throws std::logic_error if none exists
// at the search scale (it must succeed).
AdverseWitness adverse_example();

// Standard audit instance: a 4-site ring between (0,0,0) and (1,0,0) with
// every ring site coupled to the ghost.
Lattice ring_ghost_lattice();

}  // namespace loopflux
