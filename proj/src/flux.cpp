#include "loopflux/flux.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace loopflux {

namespace {

// (bond id, true when the ordered pair runs lo->hi) or throw
std::pair<BondId, bool> directed_slot(const Lattice& lat, SiteId from,
                                      SiteId to) {
  auto b = lat.bond_between(from, to);
  if (!b) throw std::invalid_argument("flux: sites are not adjacent");
  return {*b, lat.bonds()[*b].lo == from};
}

}  // namespace

std::uint32_t FluxConfig::get(SiteId from, SiteId to) const {
  auto b = lat_->bond_between(from, to);
  if (!b) return 0;
  return lat_->bonds()[*b].lo == from ? m_[*b].first : m_[*b].second;
}

void FluxConfig::set(SiteId from, SiteId to, std::uint32_t n) {
  auto [b, fwd] = directed_slot(*lat_, from, to);
  (fwd ? m_[b].first : m_[b].second) = n;
}

void FluxConfig::add(SiteId from, SiteId to, int delta) {
  auto [b, fwd] = directed_slot(*lat_, from, to);
  std::uint32_t& slot = fwd ? m_[b].first : m_[b].second;
  if (delta < 0 && slot < std::uint32_t(-delta))
    throw std::invalid_argument("flux: multiplicity would go negative");
  slot += delta;
}

std::uint64_t FluxConfig::total_edges() const {
  std::uint64_t t = 0;
  for (const auto& [f, b] : m_) t += f + b;
  return t;
}

std::uint64_t FluxConfig::out_degree(SiteId v) const {
  std::uint64_t t = 0;
  for (const auto& [bid, other] : lat_->adjacency()[v])
    t += lat_->bonds()[bid].lo == v ? m_[bid].first : m_[bid].second;
  return t;
}

std::uint64_t FluxConfig::in_degree(SiteId v) const {
  std::uint64_t t = 0;
  for (const auto& [bid, other] : lat_->adjacency()[v])
    t += lat_->bonds()[bid].lo == v ? m_[bid].second : m_[bid].first;
  return t;
}

FluxConfig FluxConfig::reversed() const {
  FluxConfig out = *this;
  for (auto& [f, b] : out.m_) std::swap(f, b);
  return out;
}

std::string FluxConfig::str() const {
  std::ostringstream os;
  bool first = true;
  for (BondId b = 0; b < m_.size(); ++b) {
    const Bond& bd = lat_->bonds()[b];
    auto emit = [&](SiteId from, SiteId to, std::uint32_t n) {
      if (!n) return;
      if (!first) os << " ";
      first = false;
      os << site_str(lat_->site_of(from)) << ">"
         << site_str(lat_->site_of(to)) << ":" << n;
    };
    emit(bd.lo, bd.hi, m_[b].first);
    emit(bd.hi, bd.lo, m_[b].second);
  }
  if (first) os << "empty";
  return os.str();
}

BoundarySpec BoundarySpec::source_sink(const Site& x, const Site& y) {
  if (x == y) throw std::invalid_argument("boundary: x = y");
  if (x.ghost || y.ghost)
    throw std::invalid_argument("boundary: source/sink cannot be the ghost");
  return BoundarySpec{Kind::SourceSink, x, y};
}

std::vector<int> boundary(const FluxConfig& n) {
  const Lattice& lat = n.lattice();
  std::vector<int> d(lat.vertex_count(), 0);
  for (BondId b = 0; b < lat.bonds().size(); ++b) {
    const auto& [f, w] = n.bond_mult(b);
    d[lat.bonds()[b].lo] += int(f) - int(w);
    d[lat.bonds()[b].hi] += int(w) - int(f);
  }
  return d;
}

bool satisfies(const FluxConfig& n, const BoundarySpec& b) {
  const Lattice& lat = n.lattice();
  std::vector<int> target(lat.vertex_count(), 0);
  if (b.kind == BoundarySpec::Kind::SourceSink) {
    target[lat.vertex_at(b.x)] += 1;
    target[lat.vertex_at(b.y)] -= 1;
  }
  return boundary(n) == target;
}

GraphWeight weight(const FluxConfig& n, const Rat& beta) {
  if (beta < 0) throw std::invalid_argument("weight: beta < 0");
  const Lattice& lat = n.lattice();
  Rat v = 1;
  for (BondId b = 0; b < lat.bonds().size(); ++b) {
    const auto& [f, w] = n.bond_mult(b);
    if (f + w == 0) continue;
    Rat bj = beta * lat.bonds()[b].J;
    v *= rat_pow(bj, f + w);
    v /= Rat(factorial(f) * factorial(w));
  }
  return {v, beta};
}

std::uint64_t BondTotals::total_edges() const {
  std::uint64_t t = 0;
  for (std::uint64_t n : per_bond) t += n;
  return t;
}

BondTotals merge(const FluxConfig& ndelta, const FluxConfig& n0) {
  if (&ndelta.lattice() != &n0.lattice())
    throw std::invalid_argument("merge: configs live on different lattices");
  BondTotals out;
  out.lat = &ndelta.lattice();
  out.per_bond.resize(ndelta.lattice().bonds().size());
  for (BondId b = 0; b < out.per_bond.size(); ++b) {
    const auto& [df, db] = ndelta.bond_mult(b);
    const auto& [zf, zb] = n0.bond_mult(b);
    out.per_bond[b] = std::uint64_t(df) + db + zf + zb;
  }
  return out;
}

Int embedding_count(const FluxConfig& ndelta, const FluxConfig& n0) {
  BondTotals tot = merge(ndelta, n0);
  Int count = 1;
  for (BondId b = 0; b < tot.per_bond.size(); ++b) {
    const auto& [df, db] = ndelta.bond_mult(b);
    const auto& [zf, zb] = n0.bond_mult(b);
    count *= factorial(tot.per_bond[b]) /
             (factorial(df) * factorial(db) * factorial(zf) * factorial(zb));
  }
  return count;
}

namespace {

constexpr std::uint64_t kNodeBudget = 80'000'000;

struct FluxEnumerator {
  const Lattice& lat;
  int max_edges;
  const std::function<void(const FluxConfig&, const Rat&)>& sink;
  const Rat* beta;

  FluxConfig cfg;
  std::vector<int> target;     // wanted out-minus-in per vertex
  std::vector<int> deficit;    // achieved so far
  std::vector<BondId> last;    // last incident bond per vertex
  int mismatch = 0;            // sum over vertices of |deficit - target|
  int used = 0;
  std::uint64_t nodes = 0;

  FluxEnumerator(const Lattice& l, const BoundarySpec& b, int cap,
                 const std::function<void(const FluxConfig&, const Rat&)>& s,
                 const Rat* bt)
      : lat(l), max_edges(cap), sink(s), beta(bt), cfg(l),
        target(l.vertex_count(), 0), deficit(l.vertex_count(), 0),
        last(l.vertex_count(), ~BondId(0)) {
    if (b.kind == BoundarySpec::Kind::SourceSink) {
      target[lat.vertex_at(b.x)] += 1;
      target[lat.vertex_at(b.y)] -= 1;
    }
    for (BondId i = 0; i < lat.bonds().size(); ++i) {
      last[lat.bonds()[i].lo] = i;
      last[lat.bonds()[i].hi] = i;
    }
    for (SiteId v = 0; v < lat.vertex_count(); ++v)
      mismatch += std::abs(target[v]);
  }

  bool feasible() const { return mismatch <= 2 * (max_edges - used); }

  // deficit shift at the tail (+1) and head (-1) of one added edge
  void bump(SiteId v, int dir) {
    mismatch -= std::abs(deficit[v] - target[v]);
    deficit[v] += dir;
    mismatch += std::abs(deficit[v] - target[v]);
  }

  void add_edge(SiteId tail, SiteId head) {
    bump(tail, +1);
    bump(head, -1);
    ++used;
  }
  void drop_edge(SiteId tail, SiteId head) {
    bump(tail, -1);
    bump(head, +1);
    --used;
  }

  void run() {
    // a bond-less vertex can never reach a nonzero target
    for (SiteId v = 0; v < lat.vertex_count(); ++v)
      if (last[v] == ~BondId(0) && target[v] != 0) return;
    Rat one = 1;
    recurse(0, one);
  }

  void recurse(BondId b, const Rat& w) {
    if (++nodes > kNodeBudget)
      throw cost_guard_error("flux enumeration exceeded its node budget");
    if (b == lat.bonds().size()) {
      sink(cfg, w);
      return;
    }
    const Bond& bd = lat.bonds()[b];
    Rat bj = beta ? Rat(*beta * bd.J) : Rat(0);
    bool is_last_lo = last[bd.lo] == b, is_last_hi = last[bd.hi] == b;

    Rat wf = w;
    int base = used;
    for (int f = 0; f + base <= max_edges; ++f) {
      if (f) {
        add_edge(bd.lo, bd.hi);
        if (beta) wf *= bj / f;
      }
      Rat wfb = wf;
      for (int bw = 0; f + bw + base <= max_edges; ++bw) {
        if (bw) {
          add_edge(bd.hi, bd.lo);
          if (beta) wfb *= bj / bw;
        }
        cfg.set_bond_mult(b, f, bw);
        bool ok = feasible() &&
                  (!is_last_lo || deficit[bd.lo] == target[bd.lo]) &&
                  (!is_last_hi || deficit[bd.hi] == target[bd.hi]);
        if (ok) {
          if (beta && (f || bw))
            recurse(b + 1, wfb);
          else
            recurse(b + 1, w);
        }
      }
      for (int bw = max_edges - f - base; bw >= 1; --bw)
        drop_edge(bd.hi, bd.lo);
    }
    for (int f = max_edges - base; f >= 1; --f) drop_edge(bd.lo, bd.hi);
    cfg.set_bond_mult(b, 0, 0);
  }
};

}  // namespace

void enumerate_flux(
    const Lattice& lat, const BoundarySpec& b, int max_edges,
    const std::function<void(const FluxConfig&, const Rat&)>& sink,
    const Rat* beta) {
  if (max_edges < 0) throw std::invalid_argument("enumerate: max_edges < 0");
  if (max_edges > 16)
    throw cost_guard_error("flux enumeration capped at max_edges = 16");
  FluxEnumerator e(lat, b, max_edges, sink, beta);
  e.run();
}

std::vector<FluxConfig> enumerate_flux_all(const Lattice& lat,
                                           const BoundarySpec& b,
                                           int max_edges) {
  std::vector<FluxConfig> out;
  enumerate_flux(lat, b, max_edges,
                 [&](const FluxConfig& c, const Rat&) { out.push_back(c); });
  return out;
}

Rat truncated_Z(const Lattice& lat, const Rat& beta, int max_edges) {
  Rat total = 0;
  enumerate_flux(
      lat, BoundarySpec::empty(), max_edges,
      [&](const FluxConfig&, const Rat& w) { total += w; }, &beta);
  return total;
}

Rat truncated_F(const Lattice& lat, const Rat& beta, const Site& x,
                const Site& y, int max_edges) {
  Rat total = 0;
  enumerate_flux(
      lat, BoundarySpec::source_sink(x, y), max_edges,
      [&](const FluxConfig&, const Rat& w) { total += w; }, &beta);
  return total / 2;
}

std::pair<Rat, Rat> difference_terms(const Lattice& lat_plus,
                                     const Lattice& lat_free, const Rat& beta,
                                     const Site& x, const Site& y,
                                     int max_edges) {
  if (lat_plus.bc() != Bc::Plus || lat_free.bc() != Bc::Free)
    throw std::invalid_argument("difference_terms: wants a plus/free pair");
  if (lat_plus.box_radius() != lat_free.box_radius())
    throw std::invalid_argument("difference_terms: box radii differ");
  (void)lat_plus.vertex_at(x), (void)lat_plus.vertex_at(y);
  (void)lat_free.vertex_at(x), (void)lat_free.vertex_at(y);

  Rat zt = truncated_Z(lat_plus, beta, max_edges);
  Rat z0 = truncated_Z(lat_free, beta, max_edges);
  Rat ft_xy = truncated_F(lat_plus, beta, x, y, max_edges);
  Rat ft_yx = truncated_F(lat_plus, beta, y, x, max_edges);
  Rat f0_xy = truncated_F(lat_free, beta, x, y, max_edges);
  Rat f0_yx = truncated_F(lat_free, beta, y, x, max_edges);

  Rat d1 = (ft_xy * z0 - f0_yx * zt) / (zt * z0);
  Rat d2 = (ft_yx * z0 - f0_xy * zt) / (zt * z0);
  return {d1, d2};
}

}  // namespace loopflux
