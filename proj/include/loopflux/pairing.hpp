#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loopflux/flux.hpp"
#include "loopflux/lattice.hpp"
#include "loopflux/switching.hpp"

namespace loopflux {

// One edge copy. Copies live on their bond under a persistent label; the
// id packs (bond << 5) | label, so a bond holds at most 32 copies.
using SlotId = std::uint32_t;

inline SlotId make_slot(BondId b, std::uint32_t label) {
  return (b << 5) | label;
}
inline BondId slot_bond(SlotId s) { return s >> 5; }
inline std::uint32_t slot_label(SlotId s) { return s & 31u; }

// Presentation coordinate: position among the copies currently pointing
// the same way on the same bond, in label order.
struct SlotRef {
  BondId bond = 0;
  bool rev = false;  // false: lo->hi, true: hi->lo
  std::uint32_t index = 0;

  friend bool operator==(const SlotRef&, const SlotRef&) = default;
  friend auto operator<=>(const SlotRef&, const SlotRef&) = default;
};

// Number of ways to match incoming to outgoing edge copies at z:
// (out-degree)!, after checking balance. Throws on in != out.
Int pairing_count(const FluxConfig& flux, const Site& z);

// Product of pairing_count over every site that gets matched (all sites
// except the source/sink of b).
Int psi_total(const FluxConfig& flux, const BoundarySpec& b);

// A flux whose edge copies carry persistent labels, together with a
// matching of incoming to outgoing copies at every paired site. Full
// graphs (region() < 0) pair everywhere except the source/sink; regional
// graphs keep bonds inside a sup-norm ball of radius N (ghost edges follow
// their finite endpoint) and pair only at sites strictly inside the ball,
// never at the ghost.
class PairedGraph {
 public:
  // Explicit small-instance builder: flux must use each directed edge at
  // most once; pairs lists ((t,h),(h,h2)) meaning the copy of t->h is
  // matched at h with the copy of h->h2. Every copy at a paired site must
  // be covered exactly once.
  static PairedGraph assemble(
      const FluxConfig& flux, const BoundarySpec& b,
      const std::vector<std::pair<std::pair<SiteId, SiteId>,
                                  std::pair<SiteId, SiteId>>>& pairs);

  const Lattice& lattice() const { return *lat_; }
  const BoundarySpec& boundary() const { return bnd_; }
  int region() const { return region_; }
  bool paired_at(SiteId v) const;

  FluxConfig flux() const;
  std::uint64_t total_edges() const;
  // (beta J)^copies over bonds / prod over bonds (copies on bond)! / psi()
  Rat weight(const Rat& beta) const;
  // Product over paired sites of (out-degree)!.
  Int psi() const;

  std::uint32_t copies(BondId b) const;
  bool slot_rev(SlotId s) const;
  SiteId slot_tail(SlotId s) const;
  SiteId slot_head(SlotId s) const;
  std::uint32_t slot_count(BondId b, bool rev) const;
  SlotRef ref_of(SlotId s) const;
  SlotId id_of(const SlotRef& r) const;
  // The outgoing copy matched with s at its head, if that site is paired.
  std::optional<SlotId> next_slot(SlotId s) const;
  std::optional<SlotId> prev_slot(SlotId s) const;
  std::vector<SlotId> all_slots() const;

  // Literal canonical form: region, boundary, per-bond copy directions,
  // matching entries. Equal keys = equal objects.
  std::vector<std::uint32_t> key() const;

  friend bool operator==(const PairedGraph& a, const PairedGraph& b) {
    return a.key() == b.key();
  }
  friend bool operator<(const PairedGraph& a, const PairedGraph& b) {
    return a.key() < b.key();
  }

 private:
  PairedGraph(const Lattice& lat, BoundarySpec b, int region);

  void add_copies(BondId b, std::uint32_t fwd, std::uint32_t bwd);
  void pair_slots(SlotId in, SlotId out);
  void unpair(SlotId in, SlotId out);
  // Relabel every bond so forward copies take the low labels again,
  // carrying the matching along. Restores the constructor's arrangement.
  void canonicalize_labels();
  void check_matching() const;

  const Lattice* lat_;
  BoundarySpec bnd_;
  int region_;
  std::vector<std::uint32_t> copies_;   // per bond
  std::vector<std::uint32_t> revmask_;  // per bond, bit l = copy l is hi->lo
  std::map<SlotId, SlotId> next_, prev_;

  friend std::vector<PairedGraph> enumerate_pairings(const FluxConfig&,
                                                     const BoundarySpec&);
  friend PairedGraph paired_switch(const PairedGraph&);
  friend PairedGraph surgical_switch(const PairedGraph&,
                                     const std::vector<DPath>&);
  friend PairedGraph restrict_region(const PairedGraph&, int);
};

// Every matching of the flux exactly once; count = psi_total. Guard:
// psi_total <= 10^6, else cost_guard_error.
std::vector<PairedGraph> enumerate_pairings(const FluxConfig& flux,
                                            const BoundarySpec& b);

struct TrailDecomposition {
  std::vector<std::vector<SlotRef>> loops;
  std::optional<std::vector<SlotRef>> trail;

  std::size_t covered() const;
};

// Partition of all edge copies into closed loops plus, for a sourced
// graph, one x->y trail that chains every copy at x and y (free choices
// at the unpaired endpoints resolved by slot order). Full graphs only.
TrailDecomposition decompose(const PairedGraph& pg);

// Deterministic greedy circuit peeling of a balanced flux.
TrailDecomposition euler_decompose(const FluxConfig& flux);

struct SwitchGraph {
  std::vector<std::vector<SlotId>> walks;  // components touching x or y

  std::vector<SlotId> all() const;
};

// Union of all matched components through the source or sink; nullopt
// when any of them passes the ghost. Sourced full graphs only.
std::optional<SwitchGraph> extract_switch_graph(const PairedGraph& pg);

// Reverse every edge copy of the switch graph in place, matchings carried
// along; source and sink swap. Literal involution; exact same weight.
PairedGraph paired_switch(const PairedGraph& pg);

// Reverse an unpaired subgraph given as self-avoiding, pairwise
// site-disjoint parts (exactly one x->y path plus closed loops),
// re-matching at the affected sites: a matched pair internal to the
// subgraph reverses in place, a mixed pair crosses over to the reversed
// copies. Copies are consumed lowest label first; the result is relabeled
// to the canonical arrangement. Works on full and regional graphs.
PairedGraph surgical_switch(const PairedGraph& pg,
                            const std::vector<DPath>& parts);

// Keep bonds inside the ball of radius N and matchings strictly inside.
PairedGraph restrict_region(const PairedGraph& pg, int N);

// Five finite sites with a ghost-coupled outer arm: x-y core, detour u,
// and a w - ghost - c arc so that some connections must pass the ghost.
Lattice ghost_arm_lattice();

// The worked 8-site instance: a matched x->y path braided with a loop,
// switched along a path that exits and re-enters the loop.
struct FigureInstance {
  std::shared_ptr<const Lattice> lat;
  PairedGraph before;
  std::vector<DPath> path;
  PairedGraph after;
};
FigureInstance figure_instance();

struct PairedSwitchReport {
  std::size_t graphs_total = 0, switchable = 0;
  bool ok = false;
  std::string failure;
};

// Exhaustive audit over all sourced paired graphs with <= max_edges edges:
// involution, boundary swap, exact weight equality, switchability of the
// image, and injectivity.
PairedSwitchReport verify_paired_switch(const Lattice& lat, const Rat& beta,
                                        const Site& x, const Site& y,
                                        int max_edges);

struct LedgerReport {
  std::size_t classes = 0, members = 0, refined_classes = 0;
  bool ok = false;
  std::string failure;
};

// Regional weight bookkeeping at radius N over both sourced families:
// equal C across every projection class, class size = product of interior
// factorials, D = class average = C, and exact refinement sums to radius M.
LedgerReport verify_ledger(const Lattice& lat, const Rat& beta, const Site& x,
                           const Site& y, int N, int M, int max_edges);

struct SurgicalReport {
  std::size_t pairs = 0, paths = 0;
  bool ok = false;
  std::string failure;
};

// For every regional class at radius N and every interior self-avoiding
// x->y path inside its projection: the switched class exists on the
// reverse side with equal C, equal D, equal interior factorial count, and
// distinct members map to distinct images for each fixed path.
SurgicalReport verify_surgical_weight_equality(const Lattice& lat,
                                               const Rat& beta, const Site& x,
                                               const Site& y, int N,
                                               int max_edges);

}  // namespace loopflux
