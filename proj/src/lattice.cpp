#include "loopflux/lattice.hpp"

#include <algorithm>
#include <climits>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace loopflux {

Site ghost_site() { return Site{true, {0, 0, 0}}; }
Site at(int x, int y, int z) { return Site{false, {x, y, z}}; }

std::string site_str(const Site& s) {
  if (s.ghost) return "ghost";
  std::ostringstream os;
  os << "(" << s.xyz[0] << "," << s.xyz[1] << "," << s.xyz[2] << ")";
  return os.str();
}

namespace {

using Offset = std::array<int, 3>;

std::map<Offset, Rat> normalize_table(const CouplingTable* table) {
  std::map<Offset, Rat> out;
  if (!table) {
    for (int axis = 0; axis < 3; ++axis)
      for (int sgn : {-1, 1}) {
        Offset o{0, 0, 0};
        o[axis] = sgn;
        out[o] = Rat(1, 6);
      }
    return out;
  }
  for (const auto& [o, J] : *table) {
    if (o == Offset{0, 0, 0})
      throw std::invalid_argument("coupling: zero offset");
    if (J < 0) throw std::invalid_argument("coupling: negative value");
    if (J == 0) continue;
    Offset m{-o[0], -o[1], -o[2]};
    for (const Offset& k : {o, m}) {
      auto it = out.find(k);
      if (it != out.end() && it->second != J)
        throw std::invalid_argument("coupling: asymmetric table");
      out[k] = J;
    }
  }
  return out;
}

bool in_box(const Offset& p, int L) {
  return std::abs(p[0]) <= L && std::abs(p[1]) <= L && std::abs(p[2]) <= L;
}

bool interior(const Offset& p, int L) {
  return std::abs(p[0]) < L && std::abs(p[1]) < L && std::abs(p[2]) < L;
}

int wrap_coord(int c, int L) {
  // canonical torus representative in (-L, L]
  int m = 2 * L;
  int r = ((c % m) + m) % m;  // [0, 2L)
  return r > L ? r - m : r;
}

Offset wrap(const Offset& p, int L) {
  return {wrap_coord(p[0], L), wrap_coord(p[1], L), wrap_coord(p[2], L)};
}

}  // namespace

Lattice Lattice::free_box(int L, const CouplingTable* table) {
  if (L < 1)
    throw std::invalid_argument("free box: L < 1 leaves no interior sites");
  auto J = normalize_table(table);
  Lattice lat;
  lat.bc_ = Bc::Free;
  lat.L_ = L;
  lat.name_ = "free";
  std::vector<std::tuple<Site, Site, Rat>> edges;
  for (int x = -L + 1; x < L; ++x)
    for (int y = -L + 1; y < L; ++y)
      for (int z = -L + 1; z < L; ++z) {
        Offset k{x, y, z};
        lat.verts_.push_back(at(x, y, z));
        for (const auto& [o, v] : J) {
          Offset l{x + o[0], y + o[1], z + o[2]};
          if (interior(l, L) && k < l)
            edges.emplace_back(at(x, y, z), at(l[0], l[1], l[2]), v);
        }
      }
  for (int x = -L; x <= L; ++x)
    for (int y = -L; y <= L; ++y)
      for (int z = -L; z <= L; ++z) lat.order_.push_back(at(x, y, z));
  lat.finish_edges(edges);
  return lat;
}

Lattice Lattice::plus_box(int L, const CouplingTable* table) {
  if (L < 1)
    throw std::invalid_argument("plus box: L < 1 leaves no interior sites");
  auto J = normalize_table(table);
  Lattice lat;
  lat.bc_ = Bc::Plus;
  lat.L_ = L;
  lat.name_ = "plus";
  std::vector<std::tuple<Site, Site, Rat>> edges;
  for (int x = -L + 1; x < L; ++x)
    for (int y = -L + 1; y < L; ++y)
      for (int z = -L + 1; z < L; ++z) {
        Offset k{x, y, z};
        lat.verts_.push_back(at(x, y, z));
        Rat to_ghost = 0;
        for (const auto& [o, v] : J) {
          Offset l{x + o[0], y + o[1], z + o[2]};
          if (interior(l, L)) {
            if (k < l) edges.emplace_back(at(x, y, z), at(l[0], l[1], l[2]), v);
          } else if (in_box(l, L)) {
            to_ghost += v;  // boundary site absorbed into the ghost
          }
        }
        if (to_ghost > 0)
          edges.emplace_back(at(x, y, z), ghost_site(), to_ghost);
      }
  lat.verts_.push_back(ghost_site());
  lat.finish_edges(edges);
  return lat;
}

Lattice Lattice::periodic_box(int L, const CouplingTable* table) {
  if (L < 1) throw std::invalid_argument("periodic box: L < 1");
  auto J = normalize_table(table);
  Lattice lat;
  lat.bc_ = Bc::Periodic;
  lat.L_ = L;
  lat.name_ = "periodic";
  std::vector<std::tuple<Site, Site, Rat>> edges;
  for (int x = -L + 1; x <= L; ++x)
    for (int y = -L + 1; y <= L; ++y)
      for (int z = -L + 1; z <= L; ++z) {
        Site k = at(x, y, z);
        lat.verts_.push_back(k);
        std::map<Site, Rat> row;  // wrap images can stack at small L
        for (const auto& [o, v] : J) {
          Offset l = wrap({x + o[0], y + o[1], z + o[2]}, L);
          Site s = at(l[0], l[1], l[2]);
          if (s == k) continue;
          row[s] += v;
        }
        for (const auto& [s, v] : row)
          if (k < s) edges.emplace_back(k, s, v);
      }
  lat.finish_edges(edges);
  return lat;
}

Lattice Lattice::graph(std::string name, std::vector<Site> sites,
                       std::vector<std::tuple<Site, Site, Rat>> edges) {
  Lattice lat;
  lat.bc_ = Bc::Graph;
  lat.L_ = 0;
  lat.name_ = std::move(name);
  lat.verts_ = std::move(sites);
  lat.finish_edges(edges);
  return lat;
}

Lattice Lattice::dumbbell(const Rat& J) {
  return graph("dumbbell", {at(0, 0, 0), at(1, 0, 0)},
               {{at(0, 0, 0), at(1, 0, 0), J}});
}

Lattice Lattice::path_graph(int n, const Rat& J) {
  if (n < 2) throw std::invalid_argument("path: need at least 2 sites");
  std::vector<Site> sites;
  std::vector<std::tuple<Site, Site, Rat>> edges;
  int shift = (n - 1) / 2;
  for (int i = 0; i < n; ++i) sites.push_back(at(i - shift, 0, 0));
  for (int i = 0; i + 1 < n; ++i)
    edges.emplace_back(sites[i], sites[i + 1], J);
  return graph("path" + std::to_string(n), std::move(sites), std::move(edges));
}

Lattice Lattice::cycle_graph(int n, const Rat& J) {
  if (n < 3) throw std::invalid_argument("cycle: need at least 3 sites");
  std::vector<Site> ring;  // out along y=0, back along y=1
  int top = (n + 1) / 2;
  for (int i = 0; i < top; ++i) ring.push_back(at(i, 0, 0));
  for (int i = n - top - 1; i >= 0; --i) ring.push_back(at(i, 1, 0));
  std::vector<std::tuple<Site, Site, Rat>> edges;
  for (int i = 0; i < n; ++i)
    edges.emplace_back(ring[i], ring[(i + 1) % n], J);
  return graph("cycle" + std::to_string(n), ring, std::move(edges));
}

Lattice Lattice::from_config(const std::string& text) {
  std::optional<int> L;
  std::optional<std::string> bc, graph_name;
  CouplingTable table;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "L") {
      L = std::stoi(val);
    } else if (key == "bc") {
      bc = val;
    } else if (key == "graph") {
      graph_name = val;
    } else if (key == "coupling") {
      std::istringstream cs(val);
      int dx, dy, dz;
      std::string frac;
      if (!(cs >> dx >> dy >> dz >> frac))
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": coupling wants dx dy dz p/q");
      table.push_back({{dx, dy, dz}, parse_rational(frac)});
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  if (graph_name) {
    if (bc || L)
      throw std::invalid_argument("config: graph excludes bc/L keys");
    const std::string& g = *graph_name;
    if (g == "dumbbell") return dumbbell();
    if (g.rfind("path", 0) == 0) return path_graph(std::stoi(g.substr(4)));
    if (g.rfind("cycle", 0) == 0) return cycle_graph(std::stoi(g.substr(5)));
    throw std::invalid_argument("config: unknown graph '" + g + "'");
  }
  if (!L || !bc) throw std::invalid_argument("config: L and bc are required");
  const CouplingTable* t = table.empty() ? nullptr : &table;
  if (*bc == "free") return free_box(*L, t);
  if (*bc == "plus") return plus_box(*L, t);
  if (*bc == "periodic") return periodic_box(*L, t);
  throw std::invalid_argument("config: bc must be free|plus|periodic");
}

void Lattice::finish_edges(
    const std::vector<std::tuple<Site, Site, Rat>>& edges) {
  std::sort(verts_.begin(), verts_.end());  // ghost flag sorts last
  if (std::adjacent_find(verts_.begin(), verts_.end()) != verts_.end())
    throw std::invalid_argument("duplicate site");
  for (SiteId v = 0; v < verts_.size(); ++v) {
    vert_ids_[verts_[v]] = v;
    if (verts_[v].ghost) ghost_ = v;
  }
  for (const auto& [a, b, J] : edges) {
    if (J == 0) continue;
    if (J < 0) throw std::invalid_argument("negative coupling");
    auto ia = vert_ids_.find(a), ib = vert_ids_.find(b);
    if (ia == vert_ids_.end() || ib == vert_ids_.end())
      throw std::invalid_argument("edge endpoint is not a site");
    SiteId u = ia->second, v = ib->second;
    if (u == v) throw std::invalid_argument("self edge");
    bonds_.push_back({std::min(u, v), std::max(u, v), J});
  }
  std::sort(bonds_.begin(), bonds_.end(), [](const Bond& x, const Bond& y) {
    return std::pair(x.lo, x.hi) < std::pair(y.lo, y.hi);
  });
  for (std::size_t i = 1; i < bonds_.size(); ++i)
    if (bonds_[i].lo == bonds_[i - 1].lo && bonds_[i].hi == bonds_[i - 1].hi)
      throw std::invalid_argument("duplicate bond");
  adj_.assign(verts_.size(), {});
  for (BondId b = 0; b < bonds_.size(); ++b) {
    adj_[bonds_[b].lo].push_back({b, bonds_[b].hi});
    adj_[bonds_[b].hi].push_back({b, bonds_[b].lo});
  }
  for (auto& row : adj_)
    std::sort(row.begin(), row.end(),
              [](const auto& x, const auto& y) { return x.second < y.second; });
  if (order_.empty()) order_ = verts_;
  for (std::size_t i = 0; i < order_.size(); ++i) ranks_[order_[i]] = int(i);
}

SiteId Lattice::ghost_vertex() const {
  if (ghost_ == kNone) throw std::logic_error("lattice has no ghost");
  return ghost_;
}

std::optional<SiteId> Lattice::vertex_of(const Site& s) const {
  Site key = s;
  if (bc_ == Bc::Periodic && !s.ghost) {
    auto w = wrap(s.xyz, L_);
    key = at(w[0], w[1], w[2]);
  }
  auto it = vert_ids_.find(key);
  if (it == vert_ids_.end()) return std::nullopt;
  return it->second;
}

SiteId Lattice::vertex_at(const Site& s) const {
  auto v = vertex_of(s);
  if (!v)
    throw std::invalid_argument("site " + site_str(s) +
                                " carries no spin/flux on this lattice");
  return *v;
}

std::optional<BondId> Lattice::bond_between(SiteId a, SiteId b) const {
  for (const auto& [bid, other] : adj_[a])
    if (other == b) return bid;
  return std::nullopt;
}

bool Lattice::member(const Site& s) const {
  switch (bc_) {
    case Bc::Free:
      return !s.ghost && in_box(s.xyz, L_);
    case Bc::Plus:
      return s.ghost || interior(s.xyz, L_);
    case Bc::Periodic:
      return !s.ghost;
    case Bc::Graph:
      return vert_ids_.count(s) > 0;
  }
  return false;
}

Rat Lattice::coupling(const Site& a, const Site& b) const {
  if (!member(a) || !member(b))
    throw std::invalid_argument("coupling: site not in lattice");
  auto va = vertex_of(a), vb = vertex_of(b);
  if (!va || !vb) return 0;  // removed boundary bonds under free bc
  if (*va == *vb) return 0;
  auto bid = bond_between(*va, *vb);
  return bid ? bonds_[*bid].J : Rat(0);
}

std::vector<Site> Lattice::neighbors(const Site& s) const {
  if (!member(s)) throw std::invalid_argument("neighbors: site not in lattice");
  auto v = vertex_of(s);
  std::vector<Site> out;
  if (!v) return out;
  for (const auto& [bid, other] : adj_[*v]) out.push_back(verts_[other]);
  return out;
}

int Lattice::rank(const Site& s) const {
  Site key = s;
  if (bc_ == Bc::Periodic && !s.ghost) {
    auto w = wrap(s.xyz, L_);
    key = at(w[0], w[1], w[2]);
  }
  auto it = ranks_.find(key);
  if (it == ranks_.end())
    throw std::invalid_argument("rank: site " + site_str(s) +
                                " not in lattice");
  return it->second;
}

int Lattice::region_radius(SiteId v) const {
  const Site& s = verts_[v];
  if (s.ghost) return INT_MAX;
  return std::max({std::abs(s.xyz[0]), std::abs(s.xyz[1]),
                   std::abs(s.xyz[2])});
}

}  // namespace loopflux
