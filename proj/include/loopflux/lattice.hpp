#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "loopflux/rational.hpp"

namespace loopflux {

using SiteId = std::uint32_t;
using BondId = std::uint32_t;

enum class Bc { Free, Plus, Periodic, Graph };

struct Site {
  bool ghost = false;
  std::array<int, 3> xyz{0, 0, 0};

  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;
};

Site ghost_site();
Site at(int x, int y, int z);
std::string site_str(const Site& s);

struct Bond {
  SiteId lo = 0, hi = 0;  // vertex ids, lo < hi
  Rat J;
};

// One offset -> coupling entry; symmetric closure is applied on build.
using CouplingTable = std::vector<std::pair<std::array<int, 3>, Rat>>;

// Box or explicit-graph lattice. Vertices are the spin/flux-carrying sites
// (interior under free, interior+ghost under plus, every torus class under
// periodic); site_order additionally covers spinless boundary sites.
class Lattice {
 public:
  static Lattice free_box(int L, const CouplingTable* table = nullptr);
  static Lattice plus_box(int L, const CouplingTable* table = nullptr);
  static Lattice periodic_box(int L, const CouplingTable* table = nullptr);
  static Lattice graph(std::string name, std::vector<Site> sites,
                       std::vector<std::tuple<Site, Site, Rat>> edges);

  static Lattice dumbbell(const Rat& J = Rat(1, 6));
  static Lattice path_graph(int n_sites, const Rat& J = Rat(1, 6));
  static Lattice cycle_graph(int n_sites, const Rat& J = Rat(1, 6));

  // Line-oriented "key = value" config: L, bc, repeated coupling lines
  // ("dx dy dz p/q"), or graph = dumbbell|path<n>|cycle<n>.
  static Lattice from_config(const std::string& text);

  Bc bc() const { return bc_; }
  int box_radius() const { return L_; }
  const std::string& name() const { return name_; }

  std::size_t vertex_count() const { return verts_.size(); }
  const Site& site_of(SiteId v) const { return verts_[v]; }
  bool is_ghost(SiteId v) const { return verts_[v].ghost; }
  bool has_ghost() const { return ghost_ != kNone; }
  SiteId ghost_vertex() const;
  std::optional<SiteId> vertex_of(const Site& s) const;
  SiteId vertex_at(const Site& s) const;  // throws if s carries no spin/flux

  const std::vector<Bond>& bonds() const { return bonds_; }
  // per vertex: (bond id, other endpoint), ordered by the other endpoint
  const std::vector<std::vector<std::pair<BondId, SiteId>>>& adjacency() const {
    return adj_;
  }
  std::optional<BondId> bond_between(SiteId a, SiteId b) const;

  bool member(const Site& s) const;          // site of the lattice at all
  Rat coupling(const Site& a, const Site& b) const;
  std::vector<Site> neighbors(const Site& s) const;

  // sigma: every site of the lattice (ghost last), lexicographic otherwise
  const std::vector<Site>& site_order() const { return order_; }
  int rank(const Site& s) const;

  // sup-norm distance from the origin; ghost counts as infinitely far out
  int region_radius(SiteId v) const;

 private:
  Lattice() = default;
  // sorts verts_, resolves edges to bonds, builds adjacency and rank map
  void finish_edges(const std::vector<std::tuple<Site, Site, Rat>>& edges);

  static constexpr SiteId kNone = ~SiteId(0);

  Bc bc_ = Bc::Graph;
  int L_ = 0;
  std::string name_;
  std::vector<Site> verts_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::pair<BondId, SiteId>>> adj_;
  std::vector<Site> order_;
  std::map<Site, SiteId> vert_ids_;
  std::map<Site, int> ranks_;
  SiteId ghost_ = kNone;
};

}  // namespace loopflux
