#include <loopflux/infrared.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace loopflux {

double j_hat(const std::array<double, 3>& k) {
  return (std::cos(k[0]) + std::cos(k[1]) + std::cos(k[2])) / 3.0;
}

namespace {

void check_spec(const GreenSpec& spec) {
  if (spec.grid < 32 || spec.grid % 4 != 0)
    throw std::invalid_argument(
        "green: grid must be a multiple of 4 and at least 32");
  if (spec.levels < 1 || spec.levels > 48)
    throw std::invalid_argument("green: levels out of range");
}

// One dyadic shell: the cube of half-width a minus its central half-cube.
// Nodes and weights per axis are shared; the phase tables carry the
// displacement. cos(k.d) is assembled by angle addition from per-axis tables
// so each node costs a handful of multiplies instead of a cos call.
double shell_value(const GreenSpec& spec, double a,
                   const std::array<int, 3>& d) {
  const int m = spec.grid;
  const double h = 2.0 * a / m;
  const int npc = spec.scheme == QuadScheme::Gauss2 ? 2 : 1;
  const int nn = m * npc;
  std::vector<double> node(nn), wt(nn);
  const double off = h / (2.0 * std::sqrt(3.0));
  for (int j = 0; j < m; ++j) {
    double c = -a + (j + 0.5) * h;
    if (npc == 1) {
      node[j] = c;
      wt[j] = h;
    } else {
      node[2 * j] = c - off;
      node[2 * j + 1] = c + off;
      wt[2 * j] = wt[2 * j + 1] = h / 2.0;
    }
  }
  // store 1 - cos(k) as 2 sin^2(k/2): near k = 0 the direct difference
  // rounds to zero and the integrand would blow up
  std::vector<double> vk(nn);
  std::array<std::vector<double>, 3> cr, ci;
  for (int ax = 0; ax < 3; ++ax) {
    cr[ax].resize(nn);
    ci[ax].resize(nn);
  }
  for (int i = 0; i < nn; ++i) {
    const double s = std::sin(node[i] / 2.0);
    vk[i] = 2.0 * s * s;
    for (int ax = 0; ax < 3; ++ax) {
      cr[ax][i] = std::cos(node[i] * d[ax]);
      ci[ax][i] = std::sin(node[i] * d[ax]);
    }
  }
  const int lo = (m / 4) * npc, hi = (3 * m / 4) * npc;  // central node band
  double sum = 0;
  for (int i = 0; i < nn; ++i) {
    const bool icen = i >= lo && i < hi;
    for (int j = 0; j < nn; ++j) {
      const double ar = cr[0][i] * cr[1][j] - ci[0][i] * ci[1][j];
      const double ai = cr[0][i] * ci[1][j] + ci[0][i] * cr[1][j];
      const double vij = vk[i] + vk[j];
      const double wij = wt[i] * wt[j];
      auto run = [&](int l0, int l1) {
        double s = 0;
        for (int l = l0; l < l1; ++l) {
          const double phase = ar * cr[2][l] - ai * ci[2][l];
          s += wt[l] * phase / ((vij + vk[l]) / 3.0);
        }
        return s;
      };
      double band;
      if (icen && j >= lo && j < hi)
        band = run(0, lo) + run(hi, nn);  // hole in the last axis
      else
        band = run(0, nn);
      sum += wij * band;
    }
  }
  return sum;
}

}  // namespace

double green(const GreenSpec& spec, const std::array<int, 3>& x,
             const std::array<int, 3>& y) {
  check_spec(spec);
  const std::array<int, 3> d{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
  const double pi = std::acos(-1.0);
  double sum = 0;  // smallest shells first for a stable accumulation
  for (int l = spec.levels - 1; l >= 0; --l)
    sum += shell_value(spec, pi / std::pow(2.0, l), d);
  const double twopi = 2.0 * pi;
  return sum / (twopi * twopi * twopi);
}

GreenDual green_dual(int grid, const std::array<int, 3>& dx, double tol) {
  GreenSpec ga;
  ga.grid = 4 * grid;  // the 1-point rule needs finer cells to keep up
  ga.scheme = QuadScheme::Midpoint;
  GreenSpec gb;
  gb.grid = grid;
  gb.scheme = QuadScheme::Gauss2;
  GreenDual out;
  const std::array<int, 3> origin{0, 0, 0};
  out.midpoint = green(ga, dx, origin);
  out.gauss = green(gb, dx, origin);
  out.delta = std::abs(out.midpoint - out.gauss);
  if (!(out.delta <= tol)) {
    std::ostringstream os;
    os << "green_dual: schemes disagree at (" << dx[0] << "," << dx[1] << ","
       << dx[2] << "): midpoint " << out.midpoint << " vs gauss " << out.gauss
       << " (delta " << out.delta << " > " << tol << ")";
    throw std::runtime_error(os.str());
  }
  return out;
}

namespace {

struct GreenKey {
  int grid;
  int scheme;
  int levels;
  std::array<int, 3> d;
  auto operator<=>(const GreenKey&) const = default;
};

std::map<GreenKey, double>& green_cache() {
  static std::map<GreenKey, double> cache;
  return cache;
}

double cached_green(const GreenSpec& spec, std::array<int, 3> d) {
  for (int& c : d) c = std::abs(c);
  std::sort(d.begin(), d.end());  // the integral only sees |d| up to axis swap
  GreenKey key{spec.grid, static_cast<int>(spec.scheme), spec.levels, d};
  auto& cache = green_cache();
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  double v = green(spec, d, {0, 0, 0});
  cache.emplace(key, v);
  return v;
}

}  // namespace

double avg_green(const GreenSpec& spec, int n) {
  check_spec(spec);
  if (n < 0) throw std::invalid_argument("avg_green: n must be >= 0");
  const long side = 2l * n + 1;
  double tot = 0;
  for (int dx = -2 * n; dx <= 2 * n; ++dx)
    for (int dy = -2 * n; dy <= 2 * n; ++dy)
      for (int dz = -2 * n; dz <= 2 * n; ++dz) {
        const double pairs = double(side - std::abs(dx)) *
                             double(side - std::abs(dy)) *
                             double(side - std::abs(dz));
        tot += pairs * cached_green(spec, {dx, dy, dz});
      }
  const double box = double(side) * side * side;
  return tot / (box * box);
}

BoundReport bound_report(double beta, int n, double mn_mean, double mn_stderr,
                         long batches, double avg_g) {
  if (beta <= 0)
    throw std::invalid_argument("bound_report: beta must be positive");
  if (n < 0) throw std::invalid_argument("bound_report: n must be >= 0");
  if (mn_stderr < 0)
    throw std::invalid_argument("bound_report: negative stderr");
  if (batches < 100)
    throw std::invalid_argument("bound_report: need at least 100 batches");
  BoundReport r;
  r.beta = beta;
  r.n = n;
  r.lhs = mn_mean;
  r.lhs_stderr = mn_stderr;
  r.rhs = avg_g / (2.0 * beta);
  r.margin = r.rhs - r.lhs;
  r.pass = r.lhs <= r.rhs + 3.0 * mn_stderr;
  return r;
}

}  // namespace loopflux
