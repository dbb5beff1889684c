#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "loopflux/flux.hpp"
#include "loopflux/lattice.hpp"

namespace loopflux {

// Deterministic 64-bit mix used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Metropolis sampler for the angle measure with bond factors
// exp(2 beta J_b cos(theta_a - theta_b)); the ghost angle (when present)
// stays pinned at zero. Proposals redraw a site angle uniformly on the
// whole circle. Uniform variates come straight off the engine bits, so a
// seed fixes the trajectory bit-for-bit.
class SpinSampler {
 public:
  SpinSampler(const Lattice& lat, double beta, std::uint64_t seed);

  void sweep();  // one Metropolis pass over all non-ghost sites, in id order

  const Lattice& lattice() const { return *lat_; }
  double beta() const { return beta_; }
  const std::vector<double>& angles() const { return th_; }
  double two_point(SiteId a, SiteId b) const;  // cos(theta_a - theta_b)
  long accepted() const { return accepted_; }
  long proposed() const { return proposed_; }

 private:
  double site_energy(SiteId v, double th) const;
  double uniform();  // [0,1)

  const Lattice* lat_;
  double beta_;
  std::vector<double> th_;
  std::vector<SiteId> free_;
  std::uint64_t rng_state_[2];
  long accepted_ = 0, proposed_ = 0;
};

// Batch-mean estimate: the measurement stream is cut into `batches` equal
// blocks and the standard error comes from the block means.
struct Estimate {
  double mean = 0;
  double se = 0;
  long sweeps = 0;
  long batches = 0;
  std::uint64_t seed = 0;
};

// Core batch-mean driver: burn-in, then one observable value per sweep.
// Requires sweeps >= batches, batches >= 100, burn >= 0.
Estimate run_estimator(const Lattice& lat, double beta, long sweeps, long burn,
                       long batches, std::uint64_t seed,
                       const std::function<double(const SpinSampler&)>& obs);

// cos(theta_x - theta_y)
Estimate estimate_two_point(const Lattice& lat, double beta, const Site& x,
                            const Site& y, long sweeps, std::uint64_t seed);
// box-pair average of the two-point over |z_k| <= n, via the squared sum
// of unit vectors
Estimate estimate_Mn(const Lattice& lat, double beta, int n, long sweeps,
                     std::uint64_t seed);
// cos(theta_s) against the pinned ghost direction; needs a ghost lattice
Estimate estimate_mag(const Lattice& lat, double beta, const Site& s,
                      long sweeps, std::uint64_t seed);

// One inequality check: holds when lhs <= rhs + 3 sigma.
struct InequalityCheck {
  std::string name;
  double lhs = 0, rhs = 0, sigma = 0;
  bool pass = false;
};
struct InequalityReport {
  std::vector<InequalityCheck> checks;
  bool all_pass = false;
};

// Statistical regression suite: free <= periodic two-point, product
// correlation bound under the ghost field, and two-point monotone in box
// size and in beta, each at 3 sigma.
InequalityReport inequality_suite(double beta, int L_small, int L_big,
                                  const Site& x, const Site& y, long sweeps,
                                  std::uint64_t seed);

// Balanced-flux sampler: Metropolis over insert/delete of back-and-forth
// bond pairs and of oriented unit squares. Every step re-checks that the
// configuration stays balanced and throws std::logic_error otherwise.
class WormSampler {
 public:
  WormSampler(const Lattice& lat, double beta, std::uint64_t seed);

  void step();
  const FluxConfig& flux() const { return n_; }
  const Lattice& lattice() const { return *lat_; }
  long steps() const { return steps_; }
  long accepted() const { return accepted_; }
  std::size_t square_count() const { return squares_.size(); }

 private:
  struct Square {
    std::array<BondId, 4> bond;   // edges in cycle order
    std::array<SiteId, 4> corner; // tails in cycle order
  };
  double uniform();
  void find_squares();

  const Lattice* lat_;
  double beta_;
  FluxConfig n_;
  std::vector<Square> squares_;
  std::uint64_t rng_state_[2];
  long steps_ = 0, accepted_ = 0;
};

// Exact acceptance ratios mirrored in rational arithmetic: the weight ratio
// of the target measure for inserting (or deleting) a back-and-forth pair on
// bond b, and for one oriented square given as (bond, forward?) edges.
Rat pair_move_ratio(const FluxConfig& n, BondId b, bool insert,
                    const Rat& beta);
Rat square_move_ratio(const FluxConfig& n,
                      const std::vector<std::pair<BondId, bool>>& cycle,
                      bool insert, const Rat& beta);

// Loop census under uniformly random site pairings of sampled worm states.
struct LoopProbe {
  long states = 0;
  long long edges_total = 0;               // slots over all sampled states
  std::map<std::size_t, long> histogram;   // loop length -> loop count
  std::vector<double> fraction;            // fraction(l), index 0 = length 1
  double median_length = 0;
  bool monotone = true;      // fraction nondecreasing in l
  bool terminal_one = true;  // final cumulative fraction covers every slot
};
LoopProbe loop_structure_probe(WormSampler& w, long steps, long sample_every,
                               std::size_t cap, std::uint64_t seed);

}  // namespace loopflux
