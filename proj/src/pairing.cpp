#include "loopflux/pairing.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <set>
#include <stdexcept>

namespace loopflux {

namespace {

constexpr std::uint32_t kMaxCopies = 31;
const Int kPairingGuard = 1000000;

std::pair<std::optional<SiteId>, std::optional<SiteId>> endpoint_ids(
    const Lattice& lat, const BoundarySpec& b) {
  if (b.kind != BoundarySpec::Kind::SourceSink)
    return {std::nullopt, std::nullopt};
  return {lat.vertex_at(b.x), lat.vertex_at(b.y)};
}

// Edge copies live at the larger finite endpoint; a ghost edge follows its
// finite end so that no finite site ever loses incident copies.
bool bond_inside(const Lattice& lat, BondId b, int N) {
  const Bond& bd = lat.bonds()[b];
  int r = 0;
  for (SiteId v : {bd.lo, bd.hi})
    if (!lat.is_ghost(v)) r = std::max(r, lat.region_radius(v));
  return r <= N;
}

}  // namespace

Int pairing_count(const FluxConfig& flux, const Site& z) {
  SiteId v = flux.lattice().vertex_at(z);
  std::uint64_t out = flux.out_degree(v);
  if (out != flux.in_degree(v))
    throw std::invalid_argument("pairing_count: unbalanced site " +
                                site_str(z));
  return factorial(out);
}

Int psi_total(const FluxConfig& flux, const BoundarySpec& b) {
  const Lattice& lat = flux.lattice();
  auto [vx, vy] = endpoint_ids(lat, b);
  Int total = 1;
  for (SiteId v = 0; v < lat.vertex_count(); ++v) {
    if ((vx && v == *vx) || (vy && v == *vy)) continue;
    std::uint64_t out = flux.out_degree(v);
    if (out != flux.in_degree(v))
      throw std::invalid_argument("psi_total: unbalanced site " +
                                  site_str(lat.site_of(v)));
    total *= factorial(out);
  }
  return total;
}

// ---- PairedGraph ----------------------------------------------------------

PairedGraph::PairedGraph(const Lattice& lat, BoundarySpec b, int region)
    : lat_(&lat),
      bnd_(std::move(b)),
      region_(region),
      copies_(lat.bonds().size(), 0),
      revmask_(lat.bonds().size(), 0) {}

void PairedGraph::add_copies(BondId b, std::uint32_t fwd, std::uint32_t bwd) {
  if (fwd + bwd > kMaxCopies)
    throw cost_guard_error("paired graph: more than 32 copies on one bond");
  copies_[b] = fwd + bwd;
  revmask_[b] = ((bwd ? (1u << bwd) - 1 : 0u)) << fwd;
}

bool PairedGraph::paired_at(SiteId v) const {
  auto [vx, vy] = endpoint_ids(*lat_, bnd_);
  if ((vx && v == *vx) || (vy && v == *vy)) return false;
  if (region_ < 0) return true;
  return !lat_->is_ghost(v) && lat_->region_radius(v) < region_;
}

FluxConfig PairedGraph::flux() const {
  FluxConfig n(*lat_);
  for (BondId b = 0; b < copies_.size(); ++b) {
    std::uint32_t bwd = std::popcount(revmask_[b]);
    n.set_bond_mult(b, copies_[b] - bwd, bwd);
  }
  return n;
}

std::uint64_t PairedGraph::total_edges() const {
  return std::accumulate(copies_.begin(), copies_.end(), std::uint64_t{0});
}

Rat PairedGraph::weight(const Rat& beta) const {
  Rat w = 1;
  for (BondId b = 0; b < copies_.size(); ++b) {
    if (!copies_[b]) continue;
    w *= rat_pow(beta * lat_->bonds()[b].J, copies_[b]);
    w /= Rat(factorial(copies_[b]));
  }
  return w / Rat(psi());
}

Int PairedGraph::psi() const {
  FluxConfig n = flux();
  Int total = 1;
  for (SiteId v = 0; v < lat_->vertex_count(); ++v) {
    if (!paired_at(v)) continue;
    std::uint64_t out = n.out_degree(v);
    if (out != n.in_degree(v))
      throw std::logic_error("paired graph: unbalanced matched site");
    total *= factorial(out);
  }
  return total;
}

std::uint32_t PairedGraph::copies(BondId b) const {
  if (b >= copies_.size()) throw std::out_of_range("copies: no such bond");
  return copies_[b];
}

bool PairedGraph::slot_rev(SlotId s) const {
  BondId b = slot_bond(s);
  std::uint32_t l = slot_label(s);
  if (b >= copies_.size() || l >= copies_[b])
    throw std::out_of_range("slot_rev: no such copy");
  return (revmask_[b] >> l) & 1u;
}

SiteId PairedGraph::slot_tail(SlotId s) const {
  const Bond& bd = lat_->bonds()[slot_bond(s)];
  return slot_rev(s) ? bd.hi : bd.lo;
}

SiteId PairedGraph::slot_head(SlotId s) const {
  const Bond& bd = lat_->bonds()[slot_bond(s)];
  return slot_rev(s) ? bd.lo : bd.hi;
}

std::uint32_t PairedGraph::slot_count(BondId b, bool rev) const {
  if (b >= copies_.size()) throw std::out_of_range("slot_count: no such bond");
  std::uint32_t bwd = std::popcount(revmask_[b]);
  return rev ? bwd : copies_[b] - bwd;
}

SlotRef PairedGraph::ref_of(SlotId s) const {
  bool rev = slot_rev(s);  // validates the id
  BondId b = slot_bond(s);
  std::uint32_t l = slot_label(s);
  std::uint32_t below = std::popcount(revmask_[b] & ((1u << l) - 1u));
  return {b, rev, rev ? below : l - below};
}

SlotId PairedGraph::id_of(const SlotRef& r) const {
  if (r.bond >= copies_.size()) throw std::out_of_range("id_of: no such bond");
  std::uint32_t seen = 0;
  for (std::uint32_t l = 0; l < copies_[r.bond]; ++l) {
    bool rev = (revmask_[r.bond] >> l) & 1u;
    if (rev == r.rev && seen++ == r.index) return make_slot(r.bond, l);
  }
  throw std::out_of_range("id_of: no such copy");
}

std::optional<SlotId> PairedGraph::next_slot(SlotId s) const {
  auto it = next_.find(s);
  if (it == next_.end()) return std::nullopt;
  return it->second;
}

std::optional<SlotId> PairedGraph::prev_slot(SlotId s) const {
  auto it = prev_.find(s);
  if (it == prev_.end()) return std::nullopt;
  return it->second;
}

std::vector<SlotId> PairedGraph::all_slots() const {
  std::vector<SlotId> out;
  for (BondId b = 0; b < copies_.size(); ++b)
    for (std::uint32_t l = 0; l < copies_[b]; ++l)
      out.push_back(make_slot(b, l));
  return out;
}

std::vector<std::uint32_t> PairedGraph::key() const {
  std::vector<std::uint32_t> k;
  k.push_back(static_cast<std::uint32_t>(region_ + 1));
  if (bnd_.kind == BoundarySpec::Kind::SourceSink) {
    k.push_back(1);
    k.push_back(lat_->vertex_at(bnd_.x));
    k.push_back(lat_->vertex_at(bnd_.y));
  } else {
    k.push_back(0);
  }
  for (BondId b = 0; b < copies_.size(); ++b) {
    k.push_back(copies_[b]);
    k.push_back(revmask_[b]);
  }
  for (const auto& [in, out] : next_) {
    k.push_back(in);
    k.push_back(out);
  }
  return k;
}

void PairedGraph::pair_slots(SlotId in, SlotId out) {
  if (next_.count(in) || prev_.count(out))
    throw std::invalid_argument("pairing: copy matched twice");
  next_[in] = out;
  prev_[out] = in;
}

void PairedGraph::unpair(SlotId in, SlotId out) {
  auto it = next_.find(in);
  if (it == next_.end() || it->second != out)
    throw std::logic_error("pairing: removing a match that is not present");
  next_.erase(it);
  prev_.erase(out);
}

void PairedGraph::canonicalize_labels() {
  std::map<SlotId, SlotId> relab;
  for (BondId b = 0; b < copies_.size(); ++b) {
    std::uint32_t bwd = std::popcount(revmask_[b]);
    std::uint32_t canon = ((bwd ? (1u << bwd) - 1 : 0u)) << (copies_[b] - bwd);
    if (revmask_[b] == canon) continue;
    std::uint32_t next_fwd = 0, next_bwd = copies_[b] - bwd;
    for (std::uint32_t l = 0; l < copies_[b]; ++l) {
      bool rev = (revmask_[b] >> l) & 1u;
      relab[make_slot(b, l)] = make_slot(b, rev ? next_bwd++ : next_fwd++);
    }
    revmask_[b] = canon;
  }
  if (relab.empty()) return;
  auto rename = [&](SlotId s) {
    auto it = relab.find(s);
    return it == relab.end() ? s : it->second;
  };
  std::map<SlotId, SlotId> nn, np;
  for (const auto& [in, out] : next_) nn[rename(in)] = rename(out);
  for (const auto& [out, in] : prev_) np[rename(out)] = rename(in);
  next_ = std::move(nn);
  prev_ = std::move(np);
}

void PairedGraph::check_matching() const {
  if (next_.size() != prev_.size())
    throw std::invalid_argument("pairing: inconsistent match maps");
  for (const auto& [in, out] : next_) {
    SiteId z = slot_head(in);  // validates both ids
    if (slot_tail(out) != z)
      throw std::invalid_argument("pairing: matched copies do not meet");
    if (!paired_at(z))
      throw std::invalid_argument("pairing: match at an unmatched site");
    auto it = prev_.find(out);
    if (it == prev_.end() || it->second != in)
      throw std::invalid_argument("pairing: dangling match entry");
  }
  for (SlotId s : all_slots()) {
    if (paired_at(slot_head(s)) && !next_.count(s))
      throw std::invalid_argument("pairing: uncovered incoming copy at " +
                                  site_str(lat_->site_of(slot_head(s))));
    if (paired_at(slot_tail(s)) && !prev_.count(s))
      throw std::invalid_argument("pairing: uncovered outgoing copy at " +
                                  site_str(lat_->site_of(slot_tail(s))));
  }
}

PairedGraph PairedGraph::assemble(
    const FluxConfig& flux, const BoundarySpec& b,
    const std::vector<std::pair<std::pair<SiteId, SiteId>,
                                std::pair<SiteId, SiteId>>>& pairs) {
  const Lattice& lat = flux.lattice();
  PairedGraph pg(lat, b, -1);
  for (BondId bd = 0; bd < lat.bonds().size(); ++bd) {
    auto [f, w] = flux.bond_mult(bd);
    if (f > 1 || w > 1)
      throw std::invalid_argument(
          "assemble: needs each directed edge at most once");
    pg.add_copies(bd, f, w);
  }
  auto dir_slot = [&](SiteId t, SiteId h) {
    auto ob = lat.bond_between(t, h);
    if (!ob || flux.get(t, h) != 1)
      throw std::invalid_argument("assemble: pair names a missing edge");
    return pg.id_of(SlotRef{*ob, lat.bonds()[*ob].lo != t, 0});
  };
  for (const auto& [e1, e2] : pairs) {
    if (e1.second != e2.first)
      throw std::invalid_argument("assemble: pair does not meet at one site");
    pg.pair_slots(dir_slot(e1.first, e1.second),
                  dir_slot(e2.first, e2.second));
  }
  pg.check_matching();
  return pg;
}

// ---- enumeration ----------------------------------------------------------

std::vector<PairedGraph> enumerate_pairings(const FluxConfig& flux,
                                            const BoundarySpec& b) {
  const Lattice& lat = flux.lattice();
  Int psi = psi_total(flux, b);  // also validates balance
  if (psi > kPairingGuard)
    throw cost_guard_error("enumerate_pairings: " + psi.str() + " matchings");
  PairedGraph base(lat, b, -1);
  for (BondId bd = 0; bd < lat.bonds().size(); ++bd) {
    auto [f, w] = flux.bond_mult(bd);
    base.add_copies(bd, f, w);
  }
  std::vector<std::vector<SlotId>> ins(lat.vertex_count()),
      outs(lat.vertex_count());
  for (SlotId s : base.all_slots()) {
    if (base.paired_at(base.slot_head(s))) ins[base.slot_head(s)].push_back(s);
    if (base.paired_at(base.slot_tail(s)))
      outs[base.slot_tail(s)].push_back(s);
  }
  std::vector<SiteId> sites;
  for (SiteId v = 0; v < lat.vertex_count(); ++v)
    if (!ins[v].empty()) sites.push_back(v);
  std::vector<std::vector<std::uint32_t>> perm(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    perm[i].resize(ins[sites[i]].size());
    std::iota(perm[i].begin(), perm[i].end(), 0u);
  }
  std::vector<PairedGraph> result;
  while (true) {
    PairedGraph pg = base;
    for (std::size_t i = 0; i < sites.size(); ++i)
      for (std::size_t j = 0; j < perm[i].size(); ++j)
        pg.pair_slots(ins[sites[i]][j], outs[sites[i]][perm[i][j]]);
    result.push_back(std::move(pg));
    std::size_t i = sites.size();
    for (; i > 0; --i)
      if (std::next_permutation(perm[i - 1].begin(), perm[i - 1].end())) break;
    if (i == 0) break;
  }
  return result;
}

// ---- decompositions -------------------------------------------------------

std::size_t TrailDecomposition::covered() const {
  std::size_t n = trail ? trail->size() : 0;
  for (const auto& l : loops) n += l.size();
  return n;
}

TrailDecomposition decompose(const PairedGraph& pg) {
  if (pg.region() >= 0)
    throw std::invalid_argument("decompose: needs a full graph");
  const Lattice& lat = pg.lattice();
  TrailDecomposition td;
  std::set<SlotId> used;
  std::vector<SlotId> slots = pg.all_slots();

  // free chaining through the unmatched endpoints, lowest copy first
  std::map<SiteId, std::vector<SlotId>> outs;
  std::map<SiteId, std::size_t> cursor;
  for (SlotId s : slots) {
    SiteId t = pg.slot_tail(s);
    if (!pg.paired_at(t)) outs[t].push_back(s);
  }
  auto chain_out = [&](SiteId v) -> std::optional<SlotId> {
    std::vector<SlotId>& lst = outs[v];
    std::size_t& c = cursor[v];
    while (c < lst.size() && used.count(lst[c])) ++c;
    if (c == lst.size()) return std::nullopt;
    return lst[c++];
  };

  if (pg.boundary().kind == BoundarySpec::Kind::SourceSink) {
    SiteId vx = lat.vertex_at(pg.boundary().x);
    SiteId vy = lat.vertex_at(pg.boundary().y);
    std::vector<SlotRef> trail;
    SiteId vcur = vx;
    SlotId last = 0;
    bool have_last = false;
    while (true) {
      SlotId s;
      if (!pg.paired_at(vcur)) {
        auto pick = chain_out(vcur);
        if (!pick) {
          if (vcur != vy)
            throw std::logic_error("decompose: walk stranded at the source");
          break;
        }
        s = *pick;
      } else {
        auto nx = pg.next_slot(last);
        if (!have_last || !nx)
          throw std::logic_error("decompose: missing match on the walk");
        s = *nx;
        if (used.count(s))
          throw std::logic_error("decompose: match reused a copy");
      }
      used.insert(s);
      trail.push_back(pg.ref_of(s));
      last = s;
      have_last = true;
      vcur = pg.slot_head(s);
    }
    td.trail = std::move(trail);
  }

  // closed walks: forced through matched sites, chained through unmatched
  // ones; a walk can only strand where it started
  for (SlotId s0 : slots) {
    if (used.count(s0)) continue;
    std::vector<SlotRef> walk;
    SiteId start = pg.slot_tail(s0);
    SlotId s = s0;
    while (true) {
      used.insert(s);
      walk.push_back(pg.ref_of(s));
      SiteId v = pg.slot_head(s);
      if (pg.paired_at(v)) {
        auto nx = pg.next_slot(s);
        if (!nx) throw std::logic_error("decompose: missing match on a loop");
        if (*nx == s0) break;
        if (used.count(*nx))
          throw std::logic_error("decompose: match reused a copy");
        s = *nx;
      } else {
        auto pick = chain_out(v);
        if (!pick) {
          if (v != start)
            throw std::logic_error("decompose: walk stranded off its start");
          break;
        }
        s = *pick;
      }
    }
    td.loops.push_back(std::move(walk));
  }
  return td;
}

TrailDecomposition euler_decompose(const FluxConfig& flux) {
  const Lattice& lat = flux.lattice();
  for (int d : boundary(flux))
    if (d != 0)
      throw std::invalid_argument("euler_decompose: needs a balanced flux");
  std::vector<std::array<std::uint32_t, 2>> left(lat.bonds().size());
  for (BondId b = 0; b < lat.bonds().size(); ++b) {
    auto [f, w] = flux.bond_mult(b);
    left[b] = {f, w};
  }
  std::vector<std::vector<std::pair<BondId, bool>>> outs(lat.vertex_count());
  for (BondId b = 0; b < lat.bonds().size(); ++b) {
    outs[lat.bonds()[b].lo].push_back({b, false});
    outs[lat.bonds()[b].hi].push_back({b, true});
  }
  auto take = [&](BondId b, bool rev) {
    auto [f, w] = flux.bond_mult(b);
    std::uint32_t orig = rev ? w : f;
    SlotRef r{b, rev, orig - left[b][rev]};
    --left[b][rev];
    return r;
  };
  TrailDecomposition td;
  for (BondId b0 = 0; b0 < lat.bonds().size(); ++b0) {
    for (int d0 = 0; d0 < 2; ++d0) {
      while (left[b0][d0] > 0) {
        const Bond& bd = lat.bonds()[b0];
        SiteId start = d0 ? bd.hi : bd.lo;
        std::vector<SlotRef> loop{take(b0, d0 != 0)};
        SiteId vcur = d0 ? bd.lo : bd.hi;
        while (vcur != start) {
          bool moved = false;
          for (auto [b, rev] : outs[vcur]) {
            if (!left[b][rev]) continue;
            loop.push_back(take(b, rev));
            vcur = rev ? lat.bonds()[b].lo : lat.bonds()[b].hi;
            moved = true;
            break;
          }
          if (!moved)
            throw std::logic_error("euler_decompose: stuck before closing");
        }
        td.loops.push_back(std::move(loop));
      }
    }
  }
  return td;
}

// ---- whole-component switching --------------------------------------------

std::vector<SlotId> SwitchGraph::all() const {
  std::vector<SlotId> out;
  for (const auto& w : walks) out.insert(out.end(), w.begin(), w.end());
  return out;
}

std::optional<SwitchGraph> extract_switch_graph(const PairedGraph& pg) {
  if (pg.region() >= 0)
    throw std::invalid_argument("extract_switch_graph: needs a full graph");
  if (pg.boundary().kind != BoundarySpec::Kind::SourceSink)
    throw std::invalid_argument(
        "extract_switch_graph: needs a source and sink");
  const Lattice& lat = pg.lattice();
  SiteId vx = lat.vertex_at(pg.boundary().x);
  SiteId vy = lat.vertex_at(pg.boundary().y);
  TrailDecomposition td = decompose(pg);
  SwitchGraph sg;
  bool ghosted = false;
  // every walk becomes segments running endpoint-to-endpoint, so each
  // interior site is matched and each matching pair sits on one segment
  auto split_at_endpoints = [&](const std::vector<SlotId>& w) {
    std::vector<SlotId> seg;
    for (SlotId s : w) {
      if (lat.is_ghost(pg.slot_tail(s)) || lat.is_ghost(pg.slot_head(s)))
        ghosted = true;
      seg.push_back(s);
      SiteId h = pg.slot_head(s);
      if (h == vx || h == vy) {
        sg.walks.push_back(std::move(seg));
        seg.clear();
      }
    }
    if (!seg.empty())
      throw std::logic_error("extract_switch_graph: segment missed its end");
  };
  {
    std::vector<SlotId> w;
    for (const SlotRef& r : *td.trail) w.push_back(pg.id_of(r));
    split_at_endpoints(w);
  }
  for (const auto& loop : td.loops) {
    std::vector<SlotId> w;
    std::size_t rot = loop.size();
    for (std::size_t i = 0; i < loop.size(); ++i) {
      SlotId s = pg.id_of(loop[i]);
      w.push_back(s);
      SiteId t = pg.slot_tail(s);
      if (rot == loop.size() && (t == vx || t == vy)) rot = i;
    }
    if (rot == loop.size()) continue;  // never meets an endpoint
    std::rotate(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(rot),
                w.end());
    split_at_endpoints(w);
  }
  if (ghosted) return std::nullopt;
  return sg;
}

PairedGraph paired_switch(const PairedGraph& pg) {
  auto sg = extract_switch_graph(pg);
  if (!sg)
    throw std::invalid_argument("paired_switch: switch graph meets the ghost");
  PairedGraph out = pg;
  std::vector<std::pair<SlotId, SlotId>> edges;
  for (const auto& w : sg->walks)
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
      edges.push_back({w[i], w[i + 1]});
  for (auto [s, t] : edges) out.unpair(s, t);
  for (auto [s, t] : edges) out.pair_slots(t, s);
  for (SlotId s : sg->all())
    out.revmask_[slot_bond(s)] ^= (1u << slot_label(s));
  out.bnd_ = BoundarySpec::source_sink(pg.boundary().y, pg.boundary().x);
  out.check_matching();
  return out;
}

// ---- surgical path reversal -------------------------------------------------

PairedGraph surgical_switch(const PairedGraph& pg,
                            const std::vector<DPath>& parts) {
  const Lattice& lat = pg.lattice();
  if (pg.boundary().kind != BoundarySpec::Kind::SourceSink)
    throw std::invalid_argument("surgical_switch: needs a source and sink");
  SiteId vx = lat.vertex_at(pg.boundary().x);
  SiteId vy = lat.vertex_at(pg.boundary().y);

  // Shape: exactly one open x->y part, the rest closed; each part
  // self-avoiding; no site shared between parts; regional parts stay
  // strictly inside except at the source and sink.
  std::set<SiteId> seen_sites;
  std::size_t open_parts = 0;
  for (const DPath& part : parts) {
    if (part.edges.empty())
      throw std::invalid_argument("surgical_switch: empty part");
    for (std::size_t i = 0; i + 1 < part.edges.size(); ++i)
      if (part.edges[i].second != part.edges[i + 1].first)
        throw std::invalid_argument("surgical_switch: part is not a chain");
    SiteId first = part.edges.front().first;
    SiteId last = part.edges.back().second;
    bool closed = first == last;
    if (!closed) {
      if (first != vx || last != vy)
        throw std::invalid_argument(
            "surgical_switch: open part must run source to sink");
      ++open_parts;
    }
    std::set<SiteId> here;
    for (std::size_t i = 0; i < part.edges.size(); ++i) {
      SiteId v = part.edges[i].first;
      if (!here.insert(v).second)
        throw std::invalid_argument("surgical_switch: part revisits a site");
      if (!seen_sites.insert(v).second)
        throw std::invalid_argument("surgical_switch: parts share a site");
    }
    if (!closed) {
      if (!here.insert(last).second || !seen_sites.insert(last).second)
        throw std::invalid_argument("surgical_switch: part revisits a site");
    }
    if (pg.region() >= 0) {
      for (std::size_t i = 0; i < part.edges.size(); ++i) {
        SiteId v = part.edges[i].first;
        bool endpoint = !closed && i == 0;
        if (!endpoint && (lat.is_ghost(v) ||
                          lat.region_radius(v) >= pg.region()))
          throw std::invalid_argument(
              "surgical_switch: part leaves the region interior");
      }
      SiteId v = part.edges.back().second;
      if (closed || v != vy) {
        if (lat.is_ghost(v) || lat.region_radius(v) >= pg.region())
          throw std::invalid_argument(
              "surgical_switch: part leaves the region interior");
      }
    }
  }
  if (open_parts != 1)
    throw std::invalid_argument(
        "surgical_switch: needs exactly one open part");

  // Consume the lowest-labeled copy of each required directed edge.
  std::set<SlotId> taken;
  std::vector<std::vector<SlotId>> chosen(parts.size());
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    for (auto [t, h] : parts[pi].edges) {
      auto ob = lat.bond_between(t, h);
      if (!ob)
        throw std::invalid_argument("surgical_switch: part uses a non-edge");
      bool rev = lat.bonds()[*ob].lo != t;
      std::optional<SlotId> pick;
      for (std::uint32_t l = 0; l < pg.copies_[*ob]; ++l) {
        SlotId s = make_slot(*ob, l);
        if (pg.slot_rev(s) == rev && !taken.count(s)) {
          pick = s;
          break;
        }
      }
      if (!pick)
        throw std::invalid_argument(
            "surgical_switch: parts not contained in the flux");
      taken.insert(*pick);
      chosen[pi].push_back(*pick);
    }
  }

  // Stage the re-matching: reads against the original matching first, then
  // removals, then insertions, then the direction flips.
  PairedGraph out = pg;
  std::vector<std::pair<SlotId, SlotId>> drop, put;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const auto& edges = parts[pi].edges;
    const auto& cs = chosen[pi];
    bool closed = edges.front().first == edges.back().second;
    std::size_t n = edges.size();
    std::size_t meets = closed ? n : n - 1;
    for (std::size_t m = 0; m < meets; ++m) {
      SlotId p_in = cs[m];
      SlotId p_out = cs[(m + 1) % n];
      SiteId z = edges[(m + 1) % n].first;
      if (!pg.paired_at(z)) continue;
      SlotId q_out = pg.next_.at(p_in);
      if (q_out == p_out) {
        drop.push_back({p_in, p_out});
        put.push_back({p_out, p_in});  // both copies reversed in place
      } else {
        SlotId q_in = pg.prev_.at(p_out);
        drop.push_back({p_in, q_out});
        drop.push_back({q_in, p_out});
        put.push_back({p_out, q_out});
        put.push_back({q_in, p_in});
      }
    }
  }
  for (auto [s, t] : drop) out.unpair(s, t);
  for (auto [s, t] : put) out.pair_slots(s, t);
  for (const auto& cs : chosen)
    for (SlotId s : cs) out.revmask_[slot_bond(s)] ^= (1u << slot_label(s));
  out.bnd_ = BoundarySpec::source_sink(pg.boundary().y, pg.boundary().x);
  out.canonicalize_labels();
  out.check_matching();
  return out;
}

PairedGraph restrict_region(const PairedGraph& pg, int N) {
  const Lattice& lat = pg.lattice();
  if (N <= 0)
    throw std::invalid_argument("restrict_region: radius must be positive");
  if (pg.region() >= 0 && pg.region() < N)
    throw std::invalid_argument("restrict_region: graph is already smaller");
  if (pg.boundary().kind == BoundarySpec::Kind::SourceSink) {
    for (const Site& s : {pg.boundary().x, pg.boundary().y})
      if (lat.region_radius(lat.vertex_at(s)) >= N)
        throw std::invalid_argument(
            "restrict_region: source or sink not strictly inside");
  }
  PairedGraph out(lat, pg.boundary(), N);
  for (BondId b = 0; b < lat.bonds().size(); ++b) {
    if (!bond_inside(lat, b, N)) continue;
    out.copies_[b] = pg.copies_[b];
    out.revmask_[b] = pg.revmask_[b];
  }
  for (const auto& [in, o] : pg.next_) {
    if (!out.paired_at(pg.slot_head(in))) continue;
    if (!bond_inside(lat, slot_bond(in), N) ||
        !bond_inside(lat, slot_bond(o), N))
      throw std::invalid_argument(
          "restrict_region: matched site loses an incident copy");
    out.pair_slots(in, o);
  }
  out.check_matching();
  return out;
}

// ---- fixed instances --------------------------------------------------------

Lattice ghost_arm_lattice() {
  const Rat J(1, 6), Jg(1, 3);
  Site x = at(0, 0, 0), y = at(1, 0, 0), u = at(0, 1, 0), w = at(-1, 0, 0),
       c = at(2, 0, 0), g = ghost_site();
  return Lattice::graph("ghost-arm", {x, y, u, w, c, g},
                        {{x, y, J},
                         {x, u, J},
                         {u, y, J},
                         {w, x, J},
                         {y, c, J},
                         {c, g, Jg},
                         {g, w, Jg}});
}

FigureInstance figure_instance() {
  const Rat J(1, 6);
  Site x = at(0, 0, 0), a1 = at(1, 0, 0), a2 = at(2, 0, 0), y = at(3, 0, 0),
       b1 = at(1, 1, 0), b4 = at(2, 1, 0), b2 = at(1, -1, 0),
       b3 = at(2, -1, 0);
  auto lat = std::make_shared<Lattice>(
      Lattice::graph("braided", {x, a1, a2, y, b1, b4, b2, b3},
                     {{x, a1, J},
                      {a1, a2, J},
                      {a2, y, J},
                      {b1, a1, J},
                      {a1, b2, J},
                      {b2, b3, J},
                      {b3, a2, J},
                      {a2, b4, J},
                      {b4, b1, J}}));
  SiteId X = lat->vertex_at(x), A1 = lat->vertex_at(a1),
         A2 = lat->vertex_at(a2), Y = lat->vertex_at(y),
         B1 = lat->vertex_at(b1), B2 = lat->vertex_at(b2),
         B3 = lat->vertex_at(b3), B4 = lat->vertex_at(b4);

  FluxConfig before_flux(*lat);
  for (auto [t, h] : std::vector<std::pair<SiteId, SiteId>>{
           {X, A1}, {A1, A2}, {A2, Y}, {B1, A1}, {A1, B2},
           {B2, B3}, {B3, A2}, {A2, B4}, {B4, B1}})
    before_flux.set(t, h, 1);
  PairedGraph before = PairedGraph::assemble(
      before_flux, BoundarySpec::source_sink(x, y),
      {{{X, A1}, {A1, A2}},
       {{B1, A1}, {A1, B2}},
       {{A1, A2}, {A2, Y}},
       {{B3, A2}, {A2, B4}},
       {{B4, B1}, {B1, A1}},
       {{A1, B2}, {B2, B3}},
       {{B2, B3}, {B3, A2}},
       {{A2, B4}, {B4, B1}}});

  DPath p{{{X, A1}, {A1, B2}, {B2, B3}, {B3, A2}, {A2, Y}}};

  FluxConfig after_flux(*lat);
  for (auto [t, h] : std::vector<std::pair<SiteId, SiteId>>{
           {A1, X}, {A1, A2}, {Y, A2}, {B1, A1}, {B2, A1},
           {B3, B2}, {A2, B3}, {A2, B4}, {B4, B1}})
    after_flux.set(t, h, 1);
  PairedGraph after = PairedGraph::assemble(
      after_flux, BoundarySpec::source_sink(y, x),
      {{{B2, A1}, {A1, A2}},
       {{B1, A1}, {A1, X}},
       {{Y, A2}, {A2, B4}},
       {{A1, A2}, {A2, B3}},
       {{B4, B1}, {B1, A1}},
       {{B3, B2}, {B2, A1}},
       {{A2, B3}, {B3, B2}},
       {{A2, B4}, {B4, B1}}});

  return {lat, std::move(before), {p}, std::move(after)};
}

// ---- exhaustive verification ------------------------------------------------

PairedSwitchReport verify_paired_switch(const Lattice& lat, const Rat& beta,
                                        const Site& x, const Site& y,
                                        int max_edges) {
  PairedSwitchReport rep;
  auto fail = [&](std::string m) {
    rep.failure = std::move(m);
    rep.ok = false;
    return rep;
  };
  BoundarySpec fwd = BoundarySpec::source_sink(x, y);
  BoundarySpec bwd = BoundarySpec::source_sink(y, x);
  std::set<std::vector<std::uint32_t>> images;
  for (const FluxConfig& n : enumerate_flux_all(lat, fwd, max_edges)) {
    std::vector<PairedGraph> pairings = enumerate_pairings(n, fwd);
    if (Int(pairings.size()) != psi_total(n, fwd))
      return fail("pairing count differs from the factorial product");
    for (const PairedGraph& pg : pairings) {
      ++rep.graphs_total;
      auto sg = extract_switch_graph(pg);
      if (!sg) continue;
      ++rep.switchable;
      PairedGraph f = paired_switch(pg);
      if (f.boundary() != bwd) return fail("boundary did not swap");
      if (!satisfies(f.flux(), bwd))
        return fail("switched flux has the wrong sources");
      if (f.weight(beta) != pg.weight(beta))
        return fail("switching changed the weight");
      if (f.total_edges() != pg.total_edges())
        return fail("switching changed the edge count");
      if (!extract_switch_graph(f))
        return fail("switched graph is not switchable back");
      if (!(paired_switch(f) == pg))
        return fail("double switch failed to restore the graph");
      if (!images.insert(f.key()).second)
        return fail("two graphs share one switched image");
    }
  }
  rep.ok = rep.switchable > 0;
  if (!rep.ok) rep.failure = "no switchable graphs in the family";
  return rep;
}

namespace {

struct RegionalLedger {
  std::map<std::vector<std::uint32_t>, Rat> C;
  std::map<std::vector<std::uint32_t>, PairedGraph> rep;
  // projection key (flux layout, no matching) -> member keys
  std::map<std::vector<std::uint32_t>, std::vector<std::vector<std::uint32_t>>>
      classes;
};

std::vector<std::uint32_t> projection_key(const PairedGraph& r) {
  auto k = r.key();
  std::size_t header =
      r.boundary().kind == BoundarySpec::Kind::SourceSink ? 4 : 2;
  k.resize(header + 2 * r.lattice().bonds().size());
  return k;
}

RegionalLedger build_ledger(const Lattice& lat, const Rat& beta,
                            const BoundarySpec& bnd, int N, int max_edges) {
  RegionalLedger led;
  for (const FluxConfig& n : enumerate_flux_all(lat, bnd, max_edges)) {
    for (const PairedGraph& pg : enumerate_pairings(n, bnd)) {
      PairedGraph r = restrict_region(pg, N);
      auto rk = r.key();
      led.C[rk] += pg.weight(beta);
      if (!led.rep.count(rk)) {
        led.classes[projection_key(r)].push_back(rk);
        led.rep.emplace(std::move(rk), std::move(r));
      }
    }
  }
  return led;
}

Rat class_average(const RegionalLedger& led,
                  const std::vector<std::uint32_t>& pkey) {
  const auto& members = led.classes.at(pkey);
  Rat sum = 0;
  for (const auto& rk : members) sum += led.C.at(rk);
  return sum / Int(members.size());
}

}  // namespace

LedgerReport verify_ledger(const Lattice& lat, const Rat& beta, const Site& x,
                           const Site& y, int N, int M, int max_edges) {
  LedgerReport rep;
  auto fail = [&](std::string m) {
    rep.failure = std::move(m);
    rep.ok = false;
    return rep;
  };
  if (N <= 0 || M <= N)
    throw std::invalid_argument("verify_ledger: needs 0 < N < M");
  for (const auto& [a, b] : std::vector<std::pair<Site, Site>>{{x, y}, {y, x}}) {
    BoundarySpec bnd = BoundarySpec::source_sink(a, b);
    RegionalLedger ledN = build_ledger(lat, beta, bnd, N, max_edges);
    RegionalLedger ledM = build_ledger(lat, beta, bnd, M, max_edges);
    for (const RegionalLedger* led : {&ledN, &ledM}) {
      for (const auto& [pk, members] : led->classes) {
        const Rat& c0 = led->C.at(members.front());
        for (const auto& rk : members)
          if (led->C.at(rk) != c0)
            return fail("class members carry different weights");
        Int ups = led->rep.at(members.front()).psi();
        if (Int(members.size()) != ups)
          return fail("class size differs from the factorial product");
        if (class_average(*led, pk) != c0)
          return fail("class average differs from the member weight");
      }
      rep.classes += led->classes.size();
      rep.members += led->C.size();
    }
    std::map<std::vector<std::uint32_t>, Rat> via;
    for (const auto& [mk, cm] : ledM.C) {
      PairedGraph rN = restrict_region(ledM.rep.at(mk), N);
      via[rN.key()] += cm;
    }
    if (via != ledN.C) return fail("refinement sums do not match");
    rep.refined_classes += ledM.C.size();
  }
  rep.ok = rep.members > 0;
  if (!rep.ok) rep.failure = "empty ledger";
  return rep;
}

SurgicalReport verify_surgical_weight_equality(const Lattice& lat,
                                               const Rat& beta, const Site& x,
                                               const Site& y, int N,
                                               int max_edges) {
  SurgicalReport rep;
  auto fail = [&](std::string m) {
    rep.failure = std::move(m);
    rep.ok = false;
    return rep;
  };
  RegionalLedger fwd =
      build_ledger(lat, beta, BoundarySpec::source_sink(x, y), N, max_edges);
  RegionalLedger rev =
      build_ledger(lat, beta, BoundarySpec::source_sink(y, x), N, max_edges);
  std::vector<DPath> paths;
  for (const DPath& p : enumerate_dpaths(lat, x, y)) {
    bool interior = true;
    for (std::size_t i = 0; i + 1 < p.edges.size(); ++i)
      if (lat.region_radius(p.edges[i].second) >= N) interior = false;
    if (interior) paths.push_back(p);
  }
  std::map<std::pair<std::vector<std::uint32_t>, std::size_t>,
           std::set<std::vector<std::uint32_t>>>
      images;
  for (const auto& [rk, R] : fwd.rep) {
    FluxConfig rflux = R.flux();
    bool any = false;
    for (std::size_t pi = 0; pi < paths.size(); ++pi) {
      bool contained = true;
      for (auto [t, h] : paths[pi].edges)
        if (!rflux.get(t, h)) contained = false;
      if (!contained) continue;
      any = true;
      PairedGraph F = surgical_switch(R, {paths[pi]});
      auto fk = F.key();
      auto it = rev.C.find(fk);
      if (it == rev.C.end())
        return fail("switched graph missing from the reverse ledger");
      if (it->second != fwd.C.at(rk))
        return fail("switching changed the regional weight");
      if (F.psi() != R.psi())
        return fail("switching changed the interior factorial count");
      if (class_average(rev, projection_key(F)) !=
          class_average(fwd, projection_key(R)))
        return fail("switching changed the class average");
      if (!images[{projection_key(R), pi}].insert(fk).second)
        return fail("two members share one switched image");
      ++rep.paths;
    }
    if (any) ++rep.pairs;
  }
  rep.ok = rep.paths > 0;
  if (!rep.ok) rep.failure = "no switchable regional members";
  return rep;
}

}  // namespace loopflux
