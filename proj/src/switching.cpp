#include "loopflux/switching.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace loopflux {

namespace {

std::vector<BondId> sorted_unique(std::vector<BondId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool bond_touches_ghost(const Lattice& lat, BondId b) {
  return lat.is_ghost(lat.bonds()[b].lo) || lat.is_ghost(lat.bonds()[b].hi);
}

}  // namespace

std::vector<UPath> enumerate_upaths(const Lattice& lat, const Site& x,
                                    const Site& y) {
  SiteId vx = lat.vertex_at(x), vy = lat.vertex_at(y);
  if (vx == vy) throw std::invalid_argument("paths: x = y");
  std::vector<UPath> out;
  std::vector<char> visited(lat.vertex_count(), 0);
  std::vector<BondId> walk;
  auto dfs = [&](auto&& self, SiteId v) -> void {
    if (v == vy) {
      out.push_back({walk, true});
      return;
    }
    for (const auto& [bid, other] : lat.adjacency()[v]) {
      if (visited[other] || lat.is_ghost(other)) continue;
      visited[other] = 1;
      walk.push_back(bid);
      self(self, other);
      walk.pop_back();
      visited[other] = 0;
    }
  };
  if (!lat.is_ghost(vx)) {
    visited[vx] = 1;
    dfs(dfs, vx);
  }
  std::sort(out.begin(), out.end(), [](const UPath& a, const UPath& b) {
    return std::pair(a.edges.size(), a.edges) <
           std::pair(b.edges.size(), b.edges);
  });
  return out;
}

UndirectedPair undirected_switch(const UndirectedPair& pair, const UPath& p) {
  if (!p.delta_avoiding)
    throw std::invalid_argument("switch: path touches the ghost");
  std::vector<BondId> a = sorted_unique(pair.first);
  std::vector<BondId> b = sorted_unique(pair.second);
  std::vector<BondId> path = sorted_unique(p.edges);
  if (a.size() != pair.first.size() || b.size() != pair.second.size())
    throw std::invalid_argument("switch: layers must be edge sets");
  std::vector<BondId> overlap;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(overlap));
  if (!overlap.empty())
    throw std::invalid_argument("switch: layers must be disjoint");
  std::vector<BondId> uni, missing;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(uni));
  std::set_difference(path.begin(), path.end(), uni.begin(), uni.end(),
                      std::back_inserter(missing));
  if (!missing.empty())
    throw std::invalid_argument("switch: path not contained in the union");

  auto split = [&](const std::vector<BondId>& keep,
                   const std::vector<BondId>& gain) {
    std::vector<BondId> off, on, res;
    std::set_difference(keep.begin(), keep.end(), path.begin(), path.end(),
                        std::back_inserter(off));
    std::set_intersection(gain.begin(), gain.end(), path.begin(), path.end(),
                          std::back_inserter(on));
    std::set_union(off.begin(), off.end(), on.begin(), on.end(),
                   std::back_inserter(res));
    return res;
  };
  return UndirectedPair{split(a, b), split(b, a), !pair.first_sinked};
}

std::vector<std::vector<std::size_t>> canonical_partition(
    const std::vector<UndirectedPair>& pairs,
    const std::vector<UPath>& paths) {
  std::vector<std::vector<std::size_t>> blocks(paths.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::vector<BondId> uni;
    std::vector<BondId> a = sorted_unique(pairs[i].first);
    std::vector<BondId> b = sorted_unique(pairs[i].second);
    std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                   std::back_inserter(uni));
    bool placed = false;
    for (std::size_t k = 0; k < paths.size() && !placed; ++k) {
      std::vector<BondId> path = sorted_unique(paths[k].edges);
      if (std::includes(uni.begin(), uni.end(), path.begin(), path.end())) {
        blocks[k].push_back(i);
        placed = true;
      }
    }
    if (!placed)
      throw std::invalid_argument("partition: a pair contains no listed path");
  }
  return blocks;
}

namespace {

std::string mask_str(std::uint32_t mask) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (int b = 0; b < 32; ++b)
    if (mask >> b & 1) {
      if (!first) os << ",";
      first = false;
      os << b;
    }
  os << "}";
  return os.str();
}

}  // namespace

UndirectedReport verify_undirected_bijection(const Lattice& lat, const Site& x,
                                             const Site& y, int max_edges) {
  UndirectedReport rep;
  const std::size_t B = lat.bonds().size();
  if (B > 16)
    throw cost_guard_error("undirected verify: more than 16 bonds");
  if (lat.vertex_count() > 30)
    throw cost_guard_error("undirected verify: more than 30 vertices");
  SiteId vx = lat.vertex_at(x), vy = lat.vertex_at(y);
  const std::uint32_t target = (1u << vx) | (1u << vy);

  std::uint32_t ghost_bonds = 0;
  std::vector<std::uint32_t> bond_ends(B);
  for (BondId b = 0; b < B; ++b) {
    bond_ends[b] = (1u << lat.bonds()[b].lo) | (1u << lat.bonds()[b].hi);
    if (bond_touches_ghost(lat, b)) ghost_bonds |= 1u << b;
  }
  // odd-degree vertex set of every edge subset, built bond by bond
  std::vector<std::uint32_t> odd(std::size_t(1) << B, 0);
  for (std::uint32_t s = 1; s < odd.size(); ++s) {
    std::uint32_t low = s & -s;
    odd[s] = odd[s ^ low] ^ bond_ends[std::countr_zero(low)];
  }

  auto paths = enumerate_upaths(lat, x, y);
  std::vector<std::uint32_t> path_mask;
  for (const UPath& p : paths) {
    std::uint32_t m = 0;
    for (BondId b : p.edges) m |= 1u << b;
    path_mask.push_back(m);
  }
  auto first_path = [&](std::uint32_t uni) -> int {
    for (std::size_t k = 0; k < path_mask.size(); ++k)
      if ((path_mask[k] & ~uni) == 0) return int(k);
    return -1;
  };

  using MaskPair = std::pair<std::uint32_t, std::uint32_t>;
  std::vector<std::vector<MaskPair>> lambda(paths.size()), gamma(paths.size());
  std::vector<Rat> lambda_weights, gamma_weights;
  auto union_weight = [&](std::uint32_t uni) {
    Rat w = 1;
    for (BondId b = 0; b < B; ++b)
      if (uni >> b & 1) w *= lat.bonds()[b].J;
    return w;
  };

  const std::uint32_t full = (std::uint32_t(1) << B) - 1;
  for (std::uint32_t a = 0;; ++a) {
    if (std::popcount(a) <= max_edges) {
      std::uint32_t rest = full & ~a & ~ghost_bonds;
      std::uint32_t b = rest;
      while (true) {
        if (std::popcount(a) + std::popcount(b) <= max_edges) {
          int k = -1;
          bool lam = odd[a] == target && odd[b] == 0;
          bool gam = odd[a] == 0 && odd[b] == target;
          if ((lam || gam) && (k = first_path(a | b)) >= 0) {
            if (lam) {
              lambda[k].push_back({a, b});
              lambda_weights.push_back(union_weight(a | b));
            } else {
              gamma[k].push_back({a, b});
              gamma_weights.push_back(union_weight(a | b));
            }
          }
        }
        if (b == 0) break;
        b = (b - 1) & rest;
      }
    }
    if (a == full) break;
  }

  for (std::size_t k = 0; k < paths.size(); ++k) {
    rep.lambda_size += lambda[k].size();
    rep.gamma_size += gamma[k].size();
    if (!lambda[k].empty() || !gamma[k].empty()) {
      ++rep.blocks_used;
      rep.block_sizes.push_back({lambda[k].size(), gamma[k].size()});
    }
  }

  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.failure = std::move(msg);
    return rep;
  };

  for (std::size_t k = 0; k < paths.size(); ++k) {
    const std::uint32_t pm = path_mask[k];
    std::set<MaskPair> gamma_block(gamma[k].begin(), gamma[k].end());
    std::set<MaskPair> image;
    for (const auto& [a, b] : lambda[k]) {
      std::uint32_t c = (a & ~pm) | (b & pm);
      std::uint32_t d = (b & ~pm) | (a & pm);
      if ((a | b) != (c | d))
        return fail("union not conserved at A=" + mask_str(a) +
                    " B=" + mask_str(b));
      std::uint32_t a2 = (c & ~pm) | (d & pm);
      std::uint32_t b2 = (d & ~pm) | (c & pm);
      if (a2 != a || b2 != b)
        return fail("switch is not an involution at A=" + mask_str(a) +
                    " B=" + mask_str(b));
      if (!gamma_block.count({c, d}))
        return fail("image not in the target block: C=" + mask_str(c) +
                    " D=" + mask_str(d));
      if (!image.insert({c, d}).second)
        return fail("two pairs share the image C=" + mask_str(c) +
                    " D=" + mask_str(d));
    }
    if (image.size() != gamma_block.size())
      return fail("block " + std::to_string(k) + " is not onto");
  }

  std::sort(lambda_weights.begin(), lambda_weights.end());
  std::sort(gamma_weights.begin(), gamma_weights.end());
  if (lambda_weights != gamma_weights)
    return fail("weight multisets differ between the two families");

  rep.ok = true;
  return rep;
}

// ---- directed -------------------------------------------------------------

DPath reverse_path(const DPath& p) {
  DPath out;
  for (auto it = p.edges.rbegin(); it != p.edges.rend(); ++it)
    out.edges.push_back({it->second, it->first});
  return out;
}

namespace {

void validate_dpath(const Lattice& lat, const DPath& p) {
  if (p.edges.empty()) throw std::invalid_argument("switch: empty path");
  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    auto [t, h] = p.edges[i];
    if (lat.is_ghost(t) || lat.is_ghost(h))
      throw std::invalid_argument("switch: path touches the ghost");
    if (!lat.bond_between(t, h))
      throw std::invalid_argument("switch: path edge is not a lattice bond");
    if (i + 1 < p.edges.size() && h != p.edges[i + 1].first)
      throw std::invalid_argument("switch: path edges do not chain");
  }
}

}  // namespace

DirectedSwitchResult directed_switch(const DirectedPair& pr, const DPath& p,
                                     const std::vector<bool>* forced) {
  const Lattice& lat = pr.first.lattice();
  if (&lat != &pr.second.lattice())
    throw std::invalid_argument("switch: layers on different lattices");
  validate_dpath(lat, p);
  if (forced && forced->size() != p.edges.size())
    throw std::invalid_argument("switch: record length mismatch");

  const FluxConfig& A = pr.first_sinked ? pr.first : pr.second;
  const FluxConfig& B = pr.first_sinked ? pr.second : pr.first;
  SiteId start = p.edges.front().first, end = p.edges.back().second;
  {
    std::vector<int> want(lat.vertex_count(), 0);
    want[start] = 1;
    want[end] -= 1;
    if (boundary(A) != want)
      throw std::invalid_argument("switch: sinked layer boundary mismatch");
    if (boundary(B) != std::vector<int>(lat.vertex_count(), 0))
      throw std::invalid_argument("switch: even layer is not sourceless");
  }

  FluxConfig a = A, b = B;
  std::vector<bool> record;
  std::vector<std::pair<SiteId, SiteId>> rev_to_a, rev_to_b;
  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    auto [t, h] = p.edges[i];
    bool take_sinked = forced ? (*forced)[i] : a.get(t, h) > 0;
    if (take_sinked) {
      if (a.get(t, h) == 0)
        throw std::invalid_argument("switch: path exceeds the sinked layer");
      a.add(t, h, -1);
      rev_to_b.push_back({h, t});
    } else {
      if (b.get(t, h) == 0)
        throw std::invalid_argument("switch: path not contained in the union");
      b.add(t, h, -1);
      rev_to_a.push_back({h, t});
    }
    record.push_back(take_sinked);
  }
  for (auto [t, h] : rev_to_a) a.add(t, h, +1);
  for (auto [t, h] : rev_to_b) b.add(t, h, +1);

  DirectedPair out = pr.first_sinked ? DirectedPair{a, b, false}
                                     : DirectedPair{b, a, true};
  return {out, record};
}

DirectedPair directed_switch_back(const DirectedPair& switched,
                                  const DPath& original_path,
                                  const std::vector<bool>& record) {
  std::vector<bool> forced(record.rbegin(), record.rend());
  return directed_switch(switched, reverse_path(original_path), &forced).pair;
}

std::vector<DPath> enumerate_dpaths(const Lattice& lat, const Site& x,
                                    const Site& y) {
  SiteId vx = lat.vertex_at(x), vy = lat.vertex_at(y);
  if (vx == vy) throw std::invalid_argument("paths: x = y");
  std::vector<DPath> out;
  std::vector<char> visited(lat.vertex_count(), 0);
  DPath walk;
  auto dfs = [&](auto&& self, SiteId v) -> void {
    if (v == vy) {
      out.push_back(walk);
      return;
    }
    for (const auto& [bid, other] : lat.adjacency()[v]) {
      if (visited[other] || lat.is_ghost(other)) continue;
      visited[other] = 1;
      walk.edges.push_back({v, other});
      self(self, other);
      walk.edges.pop_back();
      visited[other] = 0;
    }
  };
  if (!lat.is_ghost(vx)) {
    visited[vx] = 1;
    dfs(dfs, vx);
  }
  std::sort(out.begin(), out.end(), [](const DPath& a, const DPath& b) {
    return std::pair(a.edges.size(), a.edges) <
           std::pair(b.edges.size(), b.edges);
  });
  return out;
}

namespace {

bool contains_path(const DirectedPair& pr, const DPath& p) {
  for (auto [t, h] : p.edges)
    if (pr.first.get(t, h) + pr.second.get(t, h) == 0) return false;
  return true;
}

}  // namespace

DirectedReport verify_directed_switch(const Lattice& lat, const Site& x,
                                      const Site& y, int max_edges) {
  DirectedReport rep;
  auto paths = enumerate_dpaths(lat, x, y);
  auto sourced =
      enumerate_flux_all(lat, BoundarySpec::source_sink(x, y), max_edges);
  auto even = enumerate_flux_all(lat, BoundarySpec::empty(), max_edges);
  SiteId vx = lat.vertex_at(x), vy = lat.vertex_at(y);

  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.failure = std::move(msg);
    return rep;
  };

  for (const FluxConfig& s : sourced)
    for (const FluxConfig& e : even) {
      if (s.total_edges() + e.total_edges() > std::uint64_t(max_edges))
        continue;
      ++rep.pairs_checked;
      DirectedPair pr{s, e, true};
      for (const DPath& p : paths) {
        if (!contains_path(pr, p)) continue;
        ++rep.switches_checked;
        DirectedSwitchResult res = directed_switch(pr, p);
        const FluxConfig& ns = res.pair.first_sinked ? res.pair.first
                                                     : res.pair.second;
        const FluxConfig& ne = res.pair.first_sinked ? res.pair.second
                                                     : res.pair.first;
        if (ns.total_edges() + ne.total_edges() !=
            s.total_edges() + e.total_edges())
          return fail("edge count changed for " + s.str() + " | " + e.str());
        std::vector<int> want(lat.vertex_count(), 0);
        want[vy] = 1;
        want[vx] -= 1;
        if (boundary(ns) != want)
          return fail("sink did not swap for " + s.str() + " | " + e.str());
        if (boundary(ne) != std::vector<int>(lat.vertex_count(), 0))
          return fail("even layer gained sources for " + s.str());
        if (directed_switch_back(res.pair, p, res.from_sinked) != pr)
          return fail("record reversal failed for " + s.str() + " | " +
                      e.str());
      }
    }
  rep.ok = true;
  return rep;
}

AdverseWitness adverse_example() {
  Site x = at(0, 0, 0), y = at(1, 0, 0), a = at(0, 1, 0), b = at(1, 1, 0);
  auto lat = std::make_shared<Lattice>(Lattice::graph(
      "adverse",
      {x, y, a, b},
      {{x, y, Rat(1, 6)}, {x, a, Rat(1, 6)}, {a, y, Rat(1, 6)},
       {x, b, Rat(1, 6)}, {b, y, Rat(1, 6)}}));

  auto paths = enumerate_dpaths(*lat, x, y);
  auto sourced =
      enumerate_flux_all(*lat, BoundarySpec::source_sink(x, y), 4);
  auto even = enumerate_flux_all(*lat, BoundarySpec::empty(), 4);

  struct Entry {
    std::size_t s, e, p;
  };
  std::map<DirectedPair, std::vector<Entry>> by_image;
  std::vector<DirectedPair> pairs;
  for (std::size_t si = 0; si < sourced.size(); ++si)
    for (std::size_t ei = 0; ei < even.size(); ++ei) {
      if (sourced[si].total_edges() + even[ei].total_edges() > 6) continue;
      DirectedPair pr{sourced[si], even[ei], true};
      for (std::size_t pi = 0; pi < paths.size(); ++pi) {
        if (!contains_path(pr, paths[pi])) continue;
        by_image[directed_switch(pr, paths[pi]).pair].push_back({si, ei, pi});
      }
    }

  for (const auto& [image, entries] : by_image) {
    for (std::size_t i = 0; i < entries.size(); ++i)
      for (std::size_t j = i + 1; j < entries.size(); ++j) {
        const Entry &gi = entries[i], &fj = entries[j];
        DirectedPair g{sourced[gi.s], even[gi.e], true};
        DirectedPair f{sourced[fj.s], even[fj.e], true};
        if (g == f) continue;
        if (contains_path(f, paths[gi.p])) continue;  // p must miss f
        if (contains_path(g, paths[fj.p])) continue;  // q must miss g
        return AdverseWitness{lat, g, f, paths[gi.p], paths[fj.p], image};
      }
  }
  throw std::logic_error("adverse search found no witness");
}

Lattice ring_ghost_lattice() {
  const Site x = at(0, 0, 0), y = at(1, 0, 0);
  const Site r2 = at(1, 1, 0), r3 = at(0, 1, 0), g = ghost_site();
  return Lattice::graph("ring4+ghost", {x, y, r2, r3, g},
                        {{x, y, Rat(1, 6)},
                         {y, r2, Rat(1, 6)},
                         {r2, r3, Rat(1, 6)},
                         {r3, x, Rat(1, 6)},
                         {x, g, Rat(1, 3)},
                         {y, g, Rat(1, 3)},
                         {r2, g, Rat(1, 3)},
                         {r3, g, Rat(1, 3)}});
}

}  // namespace loopflux
