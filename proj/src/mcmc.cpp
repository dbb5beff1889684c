#include <loopflux/mcmc.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace loopflux {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

// xoroshiro128++: tiny, solid, and fully under our control, so seeded runs
// are bit-identical across standard libraries
std::uint64_t rng_next(std::uint64_t s[2]) {
  const std::uint64_t s0 = s[0];
  std::uint64_t s1 = s[1];
  const std::uint64_t out = rotl(s0 + s1, 17) + s0;
  s1 ^= s0;
  s[0] = rotl(s0, 49) ^ s1 ^ (s1 << 21);
  s[1] = rotl(s1, 28);
  return out;
}

void rng_seed(std::uint64_t s[2], std::uint64_t seed) {
  s[0] = splitmix(seed + 0x9E3779B97F4A7C15ull);
  s[1] = splitmix(seed + 2 * 0x9E3779B97F4A7C15ull);
  if (s[0] == 0 && s[1] == 0) s[0] = 1;
}

double rng_uniform(std::uint64_t s[2]) {
  return double(rng_next(s) >> 11) * 0x1.0p-53;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix(seed + (stream + 1) * 0x9E3779B97F4A7C15ull);
}

// ---- spin sampler -----------------------------------------------------------

SpinSampler::SpinSampler(const Lattice& lat, double beta, std::uint64_t seed)
    : lat_(&lat), beta_(beta), th_(lat.vertex_count(), 0.0) {
  if (beta < 0)
    throw std::invalid_argument("spin sampler: beta must be >= 0");
  for (SiteId v = 0; v < lat.vertex_count(); ++v)
    if (!lat.is_ghost(v)) free_.push_back(v);
  rng_seed(rng_state_, seed);
}

double SpinSampler::uniform() { return rng_uniform(rng_state_); }

double SpinSampler::site_energy(SiteId v, double th) const {
  double e = 0;
  for (const auto& [b, u] : lat_->adjacency()[v])
    e += 2.0 * rat_to_double(lat_->bonds()[b].J) * std::cos(th - th_[u]);
  return e;
}

void SpinSampler::sweep() {
  for (SiteId v : free_) {
    const double prop = kTwoPi * uniform();
    const double delta = site_energy(v, prop) - site_energy(v, th_[v]);
    ++proposed_;
    if (delta >= 0 || uniform() < std::exp(beta_ * delta)) {
      th_[v] = prop;
      ++accepted_;
    }
  }
}

double SpinSampler::two_point(SiteId a, SiteId b) const {
  return std::cos(th_[a] - th_[b]);
}

// ---- batch-mean estimators --------------------------------------------------

Estimate run_estimator(const Lattice& lat, double beta, long sweeps, long burn,
                       long batches, std::uint64_t seed,
                       const std::function<double(const SpinSampler&)>& obs) {
  if (batches < 100)
    throw std::invalid_argument("estimator: need at least 100 batches");
  if (sweeps < batches)
    throw std::invalid_argument("estimator: need at least one sweep per batch");
  if (burn < 0) throw std::invalid_argument("estimator: negative burn-in");
  SpinSampler chain(lat, beta, seed);
  for (long s = 0; s < burn; ++s) chain.sweep();
  std::vector<double> bm(batches, 0.0);
  std::vector<long> bn(batches, 0);
  for (long s = 0; s < sweeps; ++s) {
    chain.sweep();
    const long b = s * batches / sweeps;  // equal blocks up to one sweep
    bm[b] += obs(chain);
    bn[b] += 1;
  }
  double mean = 0;
  for (long b = 0; b < batches; ++b) {
    bm[b] /= double(bn[b]);
    mean += bm[b];
  }
  mean /= double(batches);
  double var = 0;
  for (long b = 0; b < batches; ++b) var += (bm[b] - mean) * (bm[b] - mean);
  Estimate e;
  e.mean = mean;
  e.se = std::sqrt(var / (double(batches) * double(batches - 1)));
  e.sweeps = sweeps;
  e.batches = batches;
  e.seed = seed;
  return e;
}

namespace {
constexpr long kBurn = 1000;
constexpr long kBatches = 100;
}  // namespace

Estimate estimate_two_point(const Lattice& lat, double beta, const Site& x,
                            const Site& y, long sweeps, std::uint64_t seed) {
  const SiteId vx = lat.vertex_at(x), vy = lat.vertex_at(y);
  return run_estimator(lat, beta, sweeps, kBurn, kBatches, seed,
                       [vx, vy](const SpinSampler& c) {
                         return c.two_point(vx, vy);
                       });
}

Estimate estimate_Mn(const Lattice& lat, double beta, int n, long sweeps,
                     std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("estimate_Mn: n must be >= 0");
  std::vector<SiteId> box;
  for (int x = -n; x <= n; ++x)
    for (int y = -n; y <= n; ++y)
      for (int z = -n; z <= n; ++z) box.push_back(lat.vertex_at(at(x, y, z)));
  const double inv2 = 1.0 / (double(box.size()) * double(box.size()));
  return run_estimator(lat, beta, sweeps, kBurn, kBatches, seed,
                       [box, inv2](const SpinSampler& c) {
                         double cs = 0, sn = 0;
                         for (SiteId v : box) {
                           cs += std::cos(c.angles()[v]);
                           sn += std::sin(c.angles()[v]);
                         }
                         return (cs * cs + sn * sn) * inv2;
                       });
}

Estimate estimate_mag(const Lattice& lat, double beta, const Site& s,
                      long sweeps, std::uint64_t seed) {
  if (!lat.has_ghost())
    throw std::invalid_argument(
        "estimate_mag: needs a lattice with the ghost field");
  const SiteId v = lat.vertex_at(s);
  return run_estimator(lat, beta, sweeps, kBurn, kBatches, seed,
                       [v](const SpinSampler& c) {
                         return std::cos(c.angles()[v]);
                       });
}

// ---- inequality suite -------------------------------------------------------

InequalityReport inequality_suite(double beta, int L_small, int L_big,
                                  const Site& x, const Site& y, long sweeps,
                                  std::uint64_t seed) {
  if (L_small < 1 || L_big <= L_small)
    throw std::invalid_argument("inequality_suite: need 1 <= L_small < L_big");
  InequalityReport rep;
  auto push = [&rep](std::string name, double lhs, double rhs, double sigma) {
    InequalityCheck c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.sigma = sigma;
    c.pass = lhs <= rhs + 3.0 * sigma;
    rep.checks.push_back(std::move(c));
  };

  const Lattice free_small = Lattice::free_box(L_small);
  const Lattice free_big = Lattice::free_box(L_big);
  const Lattice per_big = Lattice::periodic_box(L_big);
  const Lattice plus_big = Lattice::plus_box(L_big);

  const Estimate fb = estimate_two_point(free_big, beta, x, y, sweeps,
                                         mix_seed(seed, 1));
  const Estimate pb = estimate_two_point(per_big, beta, x, y, sweeps,
                                         mix_seed(seed, 2));
  push("free <= periodic", fb.mean, pb.mean,
       std::sqrt(fb.se * fb.se + pb.se * pb.se));

  // product bound under the ghost field: <cos x><cos y> <= <cos x cos y>
  const SiteId gx = plus_big.vertex_at(x), gy = plus_big.vertex_at(y);
  const Estimate mx = estimate_mag(plus_big, beta, x, sweeps, mix_seed(seed, 3));
  const Estimate my = estimate_mag(plus_big, beta, y, sweeps, mix_seed(seed, 4));
  const Estimate pr = run_estimator(
      plus_big, beta, sweeps, kBurn, kBatches, mix_seed(seed, 5),
      [gx, gy](const SpinSampler& c) {
        return std::cos(c.angles()[gx]) * std::cos(c.angles()[gy]);
      });
  const double sig_prod =
      std::sqrt(pr.se * pr.se + (my.mean * mx.se) * (my.mean * mx.se) +
                (mx.mean * my.se) * (mx.mean * my.se));
  push("product correlation (ghost field)", mx.mean * my.mean, pr.mean,
       sig_prod);

  const Estimate fs = estimate_two_point(free_small, beta, x, y, sweeps,
                                         mix_seed(seed, 6));
  push("two-point grows with the box", fs.mean, fb.mean,
       std::sqrt(fs.se * fs.se + fb.se * fb.se));

  const Estimate half = estimate_two_point(free_big, beta / 2.0, x, y, sweeps,
                                           mix_seed(seed, 7));
  push("two-point grows with beta", half.mean, fb.mean,
       std::sqrt(half.se * half.se + fb.se * fb.se));

  rep.all_pass = true;
  for (const auto& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
  return rep;
}

// ---- worm sampler -----------------------------------------------------------

WormSampler::WormSampler(const Lattice& lat, double beta, std::uint64_t seed)
    : lat_(&lat), beta_(beta), n_(lat) {
  if (beta < 0) throw std::invalid_argument("worm: beta must be >= 0");
  if (lat.bonds().empty()) throw std::invalid_argument("worm: no bonds");
  rng_seed(rng_state_, seed);
  find_squares();
}

double WormSampler::uniform() { return rng_uniform(rng_state_); }

// all 4-cycles of the coupling graph, each kept once (smallest corner first,
// lower second corner); orientation is chosen at proposal time
void WormSampler::find_squares() {
  const auto& adj = lat_->adjacency();
  for (SiteId v = 0; v < lat_->vertex_count(); ++v) {
    for (const auto& [b1, u1] : adj[v]) {
      if (u1 <= v) continue;
      for (const auto& [b3, u3] : adj[v]) {
        if (u3 <= u1) continue;
        for (const auto& [b2, u2] : adj[u1]) {
          if (u2 == v || u2 == u1 || u2 == u3 || u2 < v) continue;
          auto back = lat_->bond_between(u2, u3);
          if (!back) continue;
          Square s;
          s.corner = {v, u1, u2, u3};
          s.bond = {b1, b2, *back, b3};
          squares_.push_back(s);
        }
      }
    }
  }
}

void WormSampler::step() {
  ++steps_;
  const bool use_square = !squares_.empty() && uniform() < 0.5;
  double ratio = 0;
  if (!use_square) {
    const std::size_t nb = lat_->bonds().size();
    std::size_t b = std::size_t(uniform() * double(nb));
    if (b >= nb) b = nb - 1;
    const bool insert = uniform() < 0.5;
    const double bj = beta_ * rat_to_double(lat_->bonds()[b].J);
    const auto& [f, w] = n_.bond_mult(BondId(b));
    if (insert) {
      ratio = bj * bj / (double(f + 1) * double(w + 1));
      if (ratio >= 1 || uniform() < ratio) {
        n_.set_bond_mult(BondId(b), f + 1, w + 1);
        ++accepted_;
      }
    } else if (f > 0 && w > 0) {
      ratio = double(f) * double(w) / (bj * bj);
      if (ratio >= 1 || uniform() < ratio) {
        n_.set_bond_mult(BondId(b), f - 1, w - 1);
        ++accepted_;
      }
    }
  } else {
    std::size_t si = std::size_t(uniform() * double(squares_.size()));
    if (si >= squares_.size()) si = squares_.size() - 1;
    const Square& sq = squares_[si];
    const bool clockwise = uniform() < 0.5;
    const bool insert = uniform() < 0.5;
    std::array<std::pair<SiteId, SiteId>, 4> step_edges;
    for (int i = 0; i < 4; ++i) {
      SiteId t = sq.corner[i], h = sq.corner[(i + 1) % 4];
      if (!clockwise) std::swap(t, h);
      step_edges[i] = {t, h};
    }
    double r = 1;
    bool feasible = true;
    for (int i = 0; i < 4; ++i) {
      const double bj = beta_ * rat_to_double(lat_->bonds()[sq.bond[i]].J);
      const std::uint32_t cur = n_.get(step_edges[i].first,
                                       step_edges[i].second);
      if (insert) {
        r *= bj / double(cur + 1);
      } else if (cur == 0) {
        feasible = false;
        break;
      } else {
        r *= double(cur) / bj;
      }
    }
    if (feasible) {
      ratio = r;
      if (ratio >= 1 || uniform() < ratio) {
        for (const auto& [t, h] : step_edges) n_.add(t, h, insert ? 1 : -1);
        ++accepted_;
      }
    }
  }
  if (!satisfies(n_, BoundarySpec::empty()))
    throw std::logic_error("worm: a step unbalanced the configuration");
}

Rat pair_move_ratio(const FluxConfig& n, BondId b, bool insert,
                    const Rat& beta) {
  const Rat bj = beta * n.lattice().bonds()[b].J;
  const auto& [f, w] = n.bond_mult(b);
  if (insert) return bj * bj / (Rat(f + 1) * Rat(w + 1));
  if (f == 0 || w == 0)
    throw std::invalid_argument("pair_move_ratio: nothing to delete");
  return Rat(f) * Rat(w) / (bj * bj);
}

Rat square_move_ratio(const FluxConfig& n,
                      const std::vector<std::pair<BondId, bool>>& cycle,
                      bool insert, const Rat& beta) {
  Rat r = 1;
  for (const auto& [b, fwd] : cycle) {
    const Rat bj = beta * n.lattice().bonds()[b].J;
    const auto& [f, w] = n.bond_mult(b);
    const std::uint32_t cur = fwd ? f : w;
    if (insert) {
      r *= bj / Rat(cur + 1);
    } else {
      if (cur == 0)
        throw std::invalid_argument("square_move_ratio: nothing to delete");
      r *= Rat(cur) / bj;
    }
  }
  return r;
}

// ---- loop census ------------------------------------------------------------

LoopProbe loop_structure_probe(WormSampler& w, long steps, long sample_every,
                               std::size_t cap, std::uint64_t seed) {
  if (steps < 1 || sample_every < 1 || cap < 1)
    throw std::invalid_argument("loop probe: bad sampling plan");
  std::uint64_t rs[2];
  rng_seed(rs, mix_seed(seed, 0x10f));
  LoopProbe probe;
  const Lattice& lat = w.lattice();

  for (long t = 1; t <= steps; ++t) {
    w.step();
    if (t % sample_every != 0) continue;
    ++probe.states;
    const FluxConfig& n = w.flux();
    // slots per site: (bond, forward?, copy), tails in outs, heads in ins
    struct Slot {
      BondId b;
      bool fwd;
      std::uint32_t copy;
      auto operator<=>(const Slot&) const = default;
    };
    std::map<SiteId, std::vector<Slot>> outs, ins;
    long long slots = 0;
    for (BondId b = 0; b < lat.bonds().size(); ++b) {
      const auto& [f, bw] = n.bond_mult(b);
      const SiteId lo = lat.bonds()[b].lo, hi = lat.bonds()[b].hi;
      for (std::uint32_t c = 0; c < f; ++c) {
        outs[lo].push_back({b, true, c});
        ins[hi].push_back({b, true, c});
        ++slots;
      }
      for (std::uint32_t c = 0; c < bw; ++c) {
        outs[hi].push_back({b, false, c});
        ins[lo].push_back({b, false, c});
        ++slots;
      }
    }
    probe.edges_total += slots;
    // uniformly random pairing at each site: shuffle the outs
    std::map<Slot, Slot> succ;  // slot -> next slot, via the pairing at head
    for (auto& [v, olist] : outs) {
      auto& ilist = ins[v];
      for (std::size_t i = olist.size(); i > 1; --i) {
        std::size_t j = std::size_t(rng_uniform(rs) * double(i));
        if (j >= i) j = i - 1;
        std::swap(olist[i - 1], olist[j]);
      }
      for (std::size_t i = 0; i < ilist.size(); ++i)
        succ.emplace(ilist[i], olist[i]);
    }
    std::set<Slot> visited;
    for (const auto& [s0, ignored] : succ) {
      if (visited.count(s0)) continue;
      std::size_t len = 0;
      Slot s = s0;
      do {
        visited.insert(s);
        ++len;
        s = succ.at(s);
      } while (!(s == s0));
      probe.histogram[len] += 1;
    }
  }

  // cumulative fraction of slots sitting in loops of length <= l; an empty
  // census covers everything by convention
  probe.fraction.assign(cap, 1.0);
  if (probe.edges_total > 0) {
    std::vector<long long> mass(cap + 1, 0);
    long long all = 0;
    for (const auto& [len, cnt] : probe.histogram) {
      all += (long long)len * cnt;
      if (len <= cap) mass[len] += (long long)len * cnt;
    }
    long long cum = 0;
    for (std::size_t l = 1; l <= cap; ++l) {
      cum += mass[l];
      probe.fraction[l - 1] = double(cum) / double(probe.edges_total);
    }
    probe.monotone =
        std::is_sorted(probe.fraction.begin(), probe.fraction.end());
    probe.terminal_one = all == probe.edges_total;
  }
  // median loop length by count
  long loops = 0;
  for (const auto& [len, cnt] : probe.histogram) loops += cnt;
  if (loops > 0) {
    long half = (loops + 1) / 2, run = 0;
    for (const auto& [len, cnt] : probe.histogram) {
      run += cnt;
      if (run >= half) {
        probe.median_length = double(len);
        break;
      }
    }
  }
  return probe;
}

}  // namespace loopflux
