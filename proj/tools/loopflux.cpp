// loopflux: verification toolkit for the directed-flux loop representation
// of the 3D XY model. Subcommands expose the exact-series oracles, the
// switching bijections, the pairing/ledger audits, the lattice Green
// function, and the Monte Carlo samplers as machine-readable reports.
//
// Exit codes: 0 = all checks pass, 1 = a check failed (counterexample in
// the report), 2 = usage/config error or a cost guard refused the job.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include <loopflux/flux.hpp>
#include <loopflux/infrared.hpp>
#include <loopflux/lattice.hpp>
#include <loopflux/mcmc.hpp>
#include <loopflux/pairing.hpp>
#include <loopflux/rational.hpp>
#include <loopflux/report.hpp>
#include <loopflux/spin_oracle.hpp>
#include <loopflux/switching.hpp>

namespace lf = loopflux;
using lf::Json;

namespace {

// ---- input parsing ---------------------------------------------------------

lf::Site parse_site(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t == "ghost") return lf::ghost_site();
  std::array<int, 3> v{0, 0, 0};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t next = t.find(',', pos);
    std::string tok =
        t.substr(pos, next == std::string::npos ? std::string::npos
                                                : next - pos);
    std::size_t used = 0;
    if (tok.empty()) throw std::invalid_argument("bad site: '" + text + "'");
    v[i] = std::stoi(tok, &used);
    if (used != tok.size())
      throw std::invalid_argument("bad site: '" + text + "'");
    if (i < 2) {
      if (next == std::string::npos)
        throw std::invalid_argument("bad site: '" + text + "'");
      pos = next + 1;
    } else if (next != std::string::npos) {
      throw std::invalid_argument("bad site: '" + text + "'");
    }
  }
  return lf::at(v[0], v[1], v[2]);
}

std::pair<lf::Site, lf::Site> parse_site_pair(const std::string& text) {
  std::size_t colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("bad site pair (want 'x,y,z:x,y,z'): '" +
                                text + "'");
  return {parse_site(text.substr(0, colon)),
          parse_site(text.substr(colon + 1))};
}

lf::Lattice load_lattice(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return lf::Lattice::from_config(ss.str());
}

double beta_value(const std::string& text) {
  return lf::rat_to_double(lf::parse_rational(text));
}

// ---- output helpers --------------------------------------------------------

int emit(const std::string& out, const std::string& text) {
  if (!lf::write_text(out, text)) {
    std::cerr << "error: cannot write " << out << "\n";
    return 2;
  }
  return 0;
}

int finish(const std::string& out, const Json& j, bool pass) {
  int rc = emit(out, lf::render(j));
  if (rc) return rc;
  return pass ? 0 : 1;
}

Json flux_edges(const lf::FluxConfig& n) {
  Json arr = Json::array();
  const lf::Lattice& lat = n.lattice();
  for (std::size_t b = 0; b < lat.bonds().size(); ++b) {
    const auto& [fwd, bwd] = n.bond_mult(static_cast<lf::BondId>(b));
    const lf::Site& lo = lat.site_of(lat.bonds()[b].lo);
    const lf::Site& hi = lat.site_of(lat.bonds()[b].hi);
    if (fwd) arr.push_back({lf::site_str(lo), lf::site_str(hi), fwd});
    if (bwd) arr.push_back({lf::site_str(hi), lf::site_str(lo), bwd});
  }
  return arr;
}

Json dpath_json(const lf::Lattice& lat, const lf::DPath& p) {
  Json arr = Json::array();
  if (p.edges.empty()) return arr;
  arr.push_back(lf::site_str(lat.site_of(p.edges.front().first)));
  for (const auto& [t, h] : p.edges) {
    (void)t;
    arr.push_back(lf::site_str(lat.site_of(h)));
  }
  return arr;
}

Json estimate_json(const lf::Estimate& e) {
  Json j;
  j["mean"] = lf::report_num(e.mean);
  j["se"] = lf::report_num(e.se);
  j["sweeps"] = e.sweeps;
  j["batches"] = e.batches;
  return j;
}

Json inequality_json(const lf::InequalityReport& rep) {
  Json arr = Json::array();
  for (const auto& c : rep.checks) {
    Json j;
    j["name"] = c.name;
    j["lhs"] = lf::report_num(c.lhs);
    j["rhs"] = lf::report_num(c.rhs);
    j["sigma"] = lf::report_num(c.sigma);
    j["pass"] = c.pass;
    arr.push_back(std::move(j));
  }
  return arr;
}

// ---- per-suite workers (shared by the subcommands and `report`) ------------

struct SeriesCase {
  std::string lattice;
  std::string beta;
  double z_rel_err = 0;
  double bessel_rel_err = 0;
  double two_point_abs_err = 0;
  bool pass = false;
};

// Exact truncated series against the angle-integral and Bessel oracles on
// one small lattice; two-point compared between x and y.
SeriesCase run_series_case(const lf::Lattice& lat, const lf::Rat& beta,
                           int max_edges, int points, const lf::Site& x,
                           const lf::Site& y, double tol_z, double tol_b,
                           double tol_f) {
  SeriesCase sc;
  sc.lattice = lat.name();
  sc.beta = lf::rat_str(beta);
  const double bd = lf::rat_to_double(beta);
  lf::QuadratureSpec spec{points, bd};
  const double zq = lf::quadrature_Z(lat, spec);
  const double zt = lf::rat_to_double(lf::truncated_Z(lat, beta, max_edges));
  const double zb = lf::bessel_Z(lat, bd);
  sc.z_rel_err = std::abs(zt - zq) / zq;
  sc.bessel_rel_err = std::abs(zb - zq) / zq;
  const lf::Rat f = lf::truncated_F(lat, beta, x, y, max_edges);
  const double ratio =
      lf::rat_to_double(lf::Rat(2) * f / lf::truncated_Z(lat, beta, max_edges));
  const double oq = lf::quadrature_two_point(lat, spec, x, y);
  sc.two_point_abs_err = std::abs(ratio - oq);
  sc.pass = sc.z_rel_err <= tol_z && sc.bessel_rel_err <= tol_b &&
            sc.two_point_abs_err <= tol_f;
  return sc;
}

Json series_case_json(const SeriesCase& sc) {
  Json j;
  j["lattice"] = sc.lattice;
  j["beta"] = sc.beta;
  j["z_rel_err"] = lf::report_num(sc.z_rel_err);
  j["bessel_rel_err"] = lf::report_num(sc.bessel_rel_err);
  j["two_point_abs_err"] = lf::report_num(sc.two_point_abs_err);
  j["pass"] = sc.pass;
  return j;
}

Json undirected_json(const lf::UndirectedReport& rep) {
  Json j;
  j["lambda"] = rep.lambda_size;
  j["gamma"] = rep.gamma_size;
  j["blocks"] = rep.blocks_used;
  Json sizes = Json::array();
  for (const auto& [l, g] : rep.block_sizes) sizes.push_back({l, g});
  j["block_sizes"] = std::move(sizes);
  j["ok"] = rep.ok;
  if (!rep.ok) j["failure"] = rep.failure;
  return j;
}

Json directed_json(const lf::DirectedReport& rep) {
  Json j;
  j["pairs_checked"] = rep.pairs_checked;
  j["switches_checked"] = rep.switches_checked;
  j["ok"] = rep.ok;
  if (!rep.ok) j["failure"] = rep.failure;
  return j;
}

Json adverse_json(const lf::AdverseWitness& w) {
  Json j;
  j["lattice"] = w.lat->name();
  j["distinct_inputs"] = !(w.g == w.f);
  j["g"] = Json{{"sinked", flux_edges(w.g.first)},
                {"even", flux_edges(w.g.second)}};
  j["f"] = Json{{"sinked", flux_edges(w.f.first)},
                {"even", flux_edges(w.f.second)}};
  j["p"] = dpath_json(*w.lat, w.p);
  j["q"] = dpath_json(*w.lat, w.q);
  j["image"] = Json{{"sinked", flux_edges(w.image.first)},
                    {"even", flux_edges(w.image.second)}};
  j["ok"] = !(w.g == w.f);
  return j;
}

// Matching counts vs the factorial formula, exhaustively over sourced
// configs; trail/loop decomposition audited on every pairing of every
// sourced config, greedy circuit peeling on every balanced config.
struct PairingCombiReport {
  std::size_t configs = 0, pairings = 0, euler_configs = 0;
  bool ok = false;
  std::string failure;
};

PairingCombiReport run_pairing_combinatorics(const lf::Lattice& lat,
                                             const lf::Site& x,
                                             const lf::Site& y, int max_edges,
                                             bool with_decompose) {
  PairingCombiReport rep;
  auto fail = [&](std::string m) {
    rep.failure = std::move(m);
    rep.ok = false;
    return rep;
  };
  lf::BoundarySpec bnd = lf::BoundarySpec::source_sink(x, y);
  for (const lf::FluxConfig& n : lf::enumerate_flux_all(lat, bnd, max_edges)) {
    ++rep.configs;
    std::vector<lf::PairedGraph> all = lf::enumerate_pairings(n, bnd);
    if (lf::Int(all.size()) != lf::psi_total(n, bnd))
      return fail("matching count differs from the factorial product");
    if (!with_decompose) {
      rep.pairings += all.size();
      continue;
    }
    for (const lf::PairedGraph& pg : all) {
      ++rep.pairings;
      lf::TrailDecomposition d = lf::decompose(pg);
      if (!d.trail) return fail("sourced graph decomposed without a trail");
      if (d.covered() != pg.total_edges())
        return fail("decomposition missed edge copies");
    }
  }
  if (with_decompose) {
    lf::BoundarySpec none = lf::BoundarySpec::empty();
    for (const lf::FluxConfig& n :
         lf::enumerate_flux_all(lat, none, max_edges)) {
      ++rep.euler_configs;
      lf::TrailDecomposition d = lf::euler_decompose(n);
      if (d.trail) return fail("balanced config produced a trail");
      if (d.covered() != n.total_edges())
        return fail("circuit peeling missed edge copies");
    }
  }
  rep.ok = rep.configs > 0;
  if (!rep.ok) rep.failure = "nothing enumerated";
  return rep;
}

// The worked braid instance: the switch reproduces the stored result, the
// interior factorial count is unchanged, and both sides admit the same
// number of pairings.
struct FigureReport {
  bool reproduced = false;
  std::string psi_g, psi_f;
  std::size_t pairings_g = 0, pairings_f = 0;
  bool ok = false;
};

FigureReport run_figure_check() {
  FigureReport rep;
  lf::FigureInstance fig = lf::figure_instance();
  lf::PairedGraph redo = lf::surgical_switch(fig.before, fig.path);
  rep.reproduced = redo == fig.after;
  rep.psi_g = fig.before.psi().str();
  rep.psi_f = fig.after.psi().str();
  rep.pairings_g =
      lf::enumerate_pairings(fig.before.flux(), fig.before.boundary()).size();
  rep.pairings_f =
      lf::enumerate_pairings(fig.after.flux(), fig.after.boundary()).size();
  rep.ok = rep.reproduced && rep.psi_g == rep.psi_f &&
           rep.pairings_g == rep.pairings_f;
  return rep;
}

Json figure_json(const FigureReport& rep) {
  Json j;
  j["reproduced"] = rep.reproduced;
  j["psi_g"] = rep.psi_g;
  j["psi_f"] = rep.psi_f;
  j["pairings_g"] = rep.pairings_g;
  j["pairings_f"] = rep.pairings_f;
  j["ok"] = rep.ok;
  return j;
}

struct InfraredRun {
  lf::GreenDual dual;
  std::vector<double> table;  // G(0, r e1), r = 0..table_r
  bool agree = false, monotone = false;
  bool pass = false;
};

InfraredRun run_infrared(int grid, int table_r, double tol) {
  InfraredRun run;
  run.dual = lf::green_dual(grid, {0, 0, 0}, 1e300);
  run.agree = run.dual.delta <= tol;
  lf::GreenSpec spec{grid, lf::QuadScheme::Gauss2, 28};
  for (int r = 0; r <= table_r; ++r)
    run.table.push_back(lf::green(spec, {0, 0, 0}, {r, 0, 0}));
  run.monotone = true;
  for (std::size_t i = 1; i < run.table.size(); ++i)
    if (!(run.table[i] < run.table[i - 1])) run.monotone = false;
  run.pass = run.agree && run.monotone;
  return run;
}

Json infrared_json(const InfraredRun& run, int grid, double tol) {
  Json j;
  j["grid"] = grid;
  j["G00"] = lf::report_num(run.dual.gauss);
  j["scheme_delta"] = lf::report_num(run.dual.delta);
  j["tol"] = lf::report_num(tol);
  j["schemes"] = Json{{"midpoint", lf::report_num(run.dual.midpoint)},
                      {"gauss", lf::report_num(run.dual.gauss)}};
  Json table = Json::array();
  for (std::size_t r = 0; r < run.table.size(); ++r)
    table.push_back(Json{{"r", r}, {"G", lf::report_num(run.table[r])}});
  j["table"] = std::move(table);
  j["monotone_decay"] = run.monotone;
  j["pass"] = run.pass;
  return j;
}

Json bound_json(const lf::BoundReport& rep, long batches) {
  Json j;
  j["beta"] = lf::report_num(rep.beta);
  j["n"] = rep.n;
  j["lhs"] = lf::report_num(rep.lhs);
  j["lhs_stderr"] = lf::report_num(rep.lhs_stderr);
  j["rhs"] = lf::report_num(rep.rhs);
  j["margin"] = lf::report_num(rep.margin);
  j["batches"] = batches;
  j["pass"] = rep.pass;
  return j;
}

Json probe_json(const lf::LoopProbe& p) {
  Json j;
  j["states"] = p.states;
  j["edges_total"] = p.edges_total;
  Json hist = Json::array();
  for (const auto& [len, cnt] : p.histogram)
    hist.push_back(Json{{"length", len}, {"count", cnt}});
  j["histogram"] = std::move(hist);
  Json frac = Json::array();
  for (double f : p.fraction) frac.push_back(lf::report_num(f));
  j["fraction"] = std::move(frac);
  j["median_length"] = lf::report_num(p.median_length);
  j["monotone"] = p.monotone;
  j["terminal_one"] = p.terminal_one;
  return j;
}

std::string probe_csv(const lf::LoopProbe& p) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t l = 1; l <= p.fraction.size(); ++l) {
    auto it = p.histogram.find(l);
    long cnt = it == p.histogram.end() ? 0 : it->second;
    rows.push_back({std::to_string(l), std::to_string(cnt),
                    lf::csv_num(p.fraction[l - 1])});
  }
  return lf::csv_render({"length", "count", "fraction"}, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "loopflux: exact-series oracles, switching bijections, pairing "
      "ledgers, lattice Green functions and Monte Carlo samplers for the "
      "directed-flux loop representation of the 3D XY model"};
  app.require_subcommand(1);

  std::string out = "-";
  int workers = 1;
  auto add_common = [&](CLI::App* sc) {
    sc->add_option("--out", out, "report destination ('-' = stdout)");
    sc->add_option("--workers", workers,
                   "parallelism cap; results never depend on it")
        ->check(CLI::Range(1, 4096));
  };

  // oracle
  std::string o_config;
  std::string o_beta = "3/10";
  int o_points = 32;
  std::vector<std::string> o_pairs;
  CLI::App* sc_oracle = app.add_subcommand(
      "oracle", "angle-integral partition value and two-point functions");
  sc_oracle->add_option("--config", o_config, "lattice config file")
      ->required();
  sc_oracle->add_option("--beta", o_beta, "inverse temperature (rational ok)");
  sc_oracle->add_option("--points", o_points, "grid points per angle")
      ->check(CLI::Range(8, 4096));
  sc_oracle->add_option("--pair", o_pairs,
                        "two-point pair 'x,y,z:x,y,z' (repeatable)");
  add_common(sc_oracle);

  // series
  std::string s_config;
  std::string s_beta = "3/10";
  int s_max_edges = 10, s_points = 32;
  std::vector<std::string> s_two_point;
  double s_tol_z = 1e-8, s_tol_f = 1e-8;
  CLI::App* sc_series = app.add_subcommand(
      "series", "truncated flux series against the angle-integral oracle");
  sc_series->add_option("--config", s_config, "lattice config file")
      ->required();
  sc_series->add_option("--beta", s_beta, "inverse temperature (rational)");
  sc_series->add_option("--max-edges", s_max_edges, "series truncation")
      ->check(CLI::Range(0, 16));
  sc_series->add_option("--points", s_points, "oracle grid points per angle")
      ->check(CLI::Range(8, 4096));
  sc_series->add_option("--two-point", s_two_point, "sites x y")->expected(2);
  sc_series->add_option("--tol-z", s_tol_z, "relative Z tolerance");
  sc_series->add_option("--tol-f", s_tol_f, "two-point tolerance");
  add_common(sc_series);

  // switch-verify
  std::string w_mode = "undirected", w_config, w_x = "0,0,0", w_y = "1,0,0";
  int w_max_edges = 4;
  CLI::App* sc_switch = app.add_subcommand(
      "switch-verify", "exhaustive path-exchange bijection audits");
  sc_switch->add_option("--mode", w_mode, "undirected | directed | adverse")
      ->check(CLI::IsMember({"undirected", "directed", "adverse"}));
  sc_switch->add_option("--max-edges", w_max_edges, "exhaustive edge budget")
      ->check(CLI::Range(1, 16));
  sc_switch->add_option("--config", w_config,
                        "lattice config file (default: ghosted 4-ring)");
  sc_switch->add_option("--x", w_x, "source site");
  sc_switch->add_option("--y", w_y, "sink site");
  add_common(sc_switch);

  // pairing-verify
  std::string p_config, p_x = "0,0,0", p_y = "1,0,0", p_beta = "1/2";
  int p_region = 2, p_max_edges = 4;
  std::vector<std::string> p_checks;
  CLI::App* sc_pairing = app.add_subcommand(
      "pairing-verify", "edge-pairing, ledger and surgical-switch audits");
  sc_pairing->add_option("--region", p_region, "pairing region radius")
      ->check(CLI::Range(1, 8));
  sc_pairing->add_option("--max-edges", p_max_edges, "exhaustive edge budget")
      ->check(CLI::Range(1, 16));
  sc_pairing
      ->add_option("--checks", p_checks,
                   "subset of psi,decompose,switch,surgical,ledger,upsilon")
      ->delimiter(',');
  sc_pairing->add_option("--beta", p_beta, "inverse temperature (rational)");
  sc_pairing->add_option("--config", p_config,
                         "lattice config file (default: ghost-arm graph)");
  sc_pairing->add_option("--x", p_x, "source site");
  sc_pairing->add_option("--y", p_y, "sink site");
  add_common(sc_pairing);

  // infrared
  int i_grid = 32, i_table_r = 6;
  double i_tol = 1e-4;
  std::string i_format = "json";
  CLI::App* sc_infrared = app.add_subcommand(
      "infrared", "lattice Green function by dual-scheme quadrature");
  sc_infrared->add_option("--grid", i_grid, "cells per axis (multiple of 4)");
  sc_infrared->add_option("--table-r", i_table_r, "tabulate G(0, r e1)")
      ->check(CLI::Range(0, 16));
  sc_infrared->add_option("--tol", i_tol, "scheme agreement tolerance");
  sc_infrared->add_option("--format", i_format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  add_common(sc_infrared);

  // infrared-bound
  std::string b_beta, b_mc;
  int b_n = 1, b_grid = 32;
  CLI::App* sc_bound = app.add_subcommand(
      "infrared-bound",
      "compare a sampled box average against the Green-scale bound");
  sc_bound->add_option("--beta", b_beta, "inverse temperature")->required();
  sc_bound->add_option("--n", b_n, "box radius")->check(CLI::Range(0, 8));
  sc_bound->add_option("--mc", b_mc, "mc report file (estimator mn)")
      ->required();
  sc_bound->add_option("--grid", b_grid, "Green quadrature grid");
  add_common(sc_bound);

  // mc
  std::string m_config, m_beta, m_estimator, m_x = "0,0,0", m_y = "1,0,0";
  std::string m_site = "0,0,0";
  long m_sweeps = 2000;
  std::uint64_t m_seed = 0;
  int m_n = 1, m_l_small = 2, m_l_big = 3;
  CLI::App* sc_mc =
      app.add_subcommand("mc", "Metropolis spin sampling with batch means");
  sc_mc->add_option("--config", m_config,
                    "lattice config file (unused by 'inequalities')");
  sc_mc->add_option("--beta", m_beta, "inverse temperature")->required();
  sc_mc->add_option("--sweeps", m_sweeps, "measurement sweeps")
      ->check(CLI::Range(100L, 100000000L));
  sc_mc->add_option("--seed", m_seed, "RNG seed")->required();
  sc_mc
      ->add_option("--estimator", m_estimator,
                   "twopoint | mn | mag | inequalities")
      ->required()
      ->check(CLI::IsMember({"twopoint", "mn", "mag", "inequalities"}));
  sc_mc->add_option("--x", m_x, "two-point site x");
  sc_mc->add_option("--y", m_y, "two-point site y");
  sc_mc->add_option("--n", m_n, "box radius for 'mn'")->check(CLI::Range(0, 8));
  sc_mc->add_option("--site", m_site, "site for 'mag'");
  sc_mc->add_option("--L-small", m_l_small, "small box for 'inequalities'");
  sc_mc->add_option("--L-big", m_l_big, "large box for 'inequalities'");
  add_common(sc_mc);

  // probe
  std::string r_config, r_beta = "1/2", r_format = "json";
  long r_steps = 20000, r_sample_every = 200;
  std::size_t r_cap = 12;
  std::uint64_t r_seed = 0;
  CLI::App* sc_probe = app.add_subcommand(
      "probe", "balanced-flux sampler with a random-pairing loop census");
  sc_probe->add_option("--config", r_config,
                       "lattice config file (default: free box, L=2)");
  sc_probe->add_option("--beta", r_beta, "inverse temperature");
  sc_probe->add_option("--steps", r_steps, "sampler steps")
      ->check(CLI::Range(1L, 100000000L));
  sc_probe->add_option("--sample-every", r_sample_every, "census period")
      ->check(CLI::Range(1L, 100000000L));
  sc_probe->add_option("--cap", r_cap, "longest tracked loop length")
      ->check(CLI::Range(std::size_t(1), std::size_t(4096)));
  sc_probe->add_option("--seed", r_seed, "RNG seed")->required();
  sc_probe->add_option("--format", r_format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  add_common(sc_probe);

  // report
  bool g_all = false;
  std::uint64_t g_seed = 0;
  CLI::App* sc_report = app.add_subcommand(
      "report", "run every suite at small scale and aggregate the results");
  sc_report->add_flag("--all", g_all, "run every suite (the default)");
  sc_report->add_option("--seed", g_seed, "RNG seed for the sampled suites")
      ->required();
  add_common(sc_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    // ---- oracle -----------------------------------------------------------
    if (sc_oracle->parsed()) {
      lf::Lattice lat = load_lattice(o_config);
      std::vector<std::pair<lf::Site, lf::Site>> pairs;
      for (const std::string& p : o_pairs) pairs.push_back(parse_site_pair(p));
      lf::QuadratureSpec spec{o_points, beta_value(o_beta)};
      lf::OracleResult res = lf::run_oracle(lat, spec, pairs);
      Json j = lf::report_root("oracle");
      j["lattice"] = lat.name();
      j["beta"] = lf::report_num(spec.beta);
      j["points"] = o_points;
      j["Z"] = lf::report_num(res.Z);
      if (res.magnetization)
        j["magnetization"] = lf::report_num(*res.magnetization);
      Json tp = Json::array();
      for (const auto& [pr, v] : res.two_point)
        tp.push_back(Json{{"x", lf::site_str(pr.first)},
                          {"y", lf::site_str(pr.second)},
                          {"value", lf::report_num(v)}});
      j["two_point"] = std::move(tp);
      return finish(out, j, true);
    }

    // ---- series -----------------------------------------------------------
    if (sc_series->parsed()) {
      lf::Lattice lat = load_lattice(s_config);
      lf::Rat beta = lf::parse_rational(s_beta);
      const double bd = lf::rat_to_double(beta);
      lf::QuadratureSpec spec{s_points, bd};
      const lf::Rat zt = lf::truncated_Z(lat, beta, s_max_edges);
      const double zq = lf::quadrature_Z(lat, spec);
      const double z_rel_err = std::abs(lf::rat_to_double(zt) - zq) / zq;
      Json j = lf::report_root("series");
      j["lattice"] = lat.name();
      j["beta"] = lf::rat_str(beta);
      j["max_edges"] = s_max_edges;
      j["points"] = s_points;
      j["Z_trunc"] = lf::report_num(lf::rat_to_double(zt));
      j["oracle_Z"] = lf::report_num(zq);
      j["z_rel_err"] = lf::report_num(z_rel_err);
      j["z_tol"] = lf::report_num(s_tol_z);
      bool pass = z_rel_err <= s_tol_z;
      if (!s_two_point.empty()) {
        lf::Site x = parse_site(s_two_point[0]);
        lf::Site y = parse_site(s_two_point[1]);
        const lf::Rat f = lf::truncated_F(lat, beta, x, y, s_max_edges);
        const double ratio = lf::rat_to_double(lf::Rat(2) * f / zt);
        const double oq = lf::quadrature_two_point(lat, spec, x, y);
        const double abs_err = std::abs(ratio - oq);
        Json t;
        t["x"] = lf::site_str(x);
        t["y"] = lf::site_str(y);
        t["F_xy"] = lf::report_num(lf::rat_to_double(f));
        t["ratio"] = lf::report_num(ratio);
        t["oracle"] = lf::report_num(oq);
        t["abs_err"] = lf::report_num(abs_err);
        t["tol"] = lf::report_num(s_tol_f);
        j["two_point"] = std::move(t);
        pass = pass && abs_err <= s_tol_f;
      }
      j["pass"] = pass;
      return finish(out, j, pass);
    }

    // ---- switch-verify ----------------------------------------------------
    if (sc_switch->parsed()) {
      Json j = lf::report_root("switch-verify");
      j["mode"] = w_mode;
      if (w_mode == "adverse") {
        lf::AdverseWitness w = lf::adverse_example();
        Json a = adverse_json(w);
        bool ok = a["ok"].get<bool>();
        for (auto& [k, v] : a.items()) j[k] = v;
        return finish(out, j, ok);
      }
      lf::Lattice lat =
          w_config.empty() ? lf::ring_ghost_lattice() : load_lattice(w_config);
      lf::Site x = parse_site(w_x), y = parse_site(w_y);
      j["lattice"] = lat.name();
      j["x"] = lf::site_str(x);
      j["y"] = lf::site_str(y);
      j["max_edges"] = w_max_edges;
      if (w_mode == "undirected") {
        lf::UndirectedReport rep =
            lf::verify_undirected_bijection(lat, x, y, w_max_edges);
        Json u = undirected_json(rep);
        for (auto& [k, v] : u.items()) j[k] = v;
        return finish(out, j, rep.ok);
      }
      lf::DirectedReport rep = lf::verify_directed_switch(lat, x, y,
                                                          w_max_edges);
      Json d = directed_json(rep);
      for (auto& [k, v] : d.items()) j[k] = v;
      return finish(out, j, rep.ok);
    }

    // ---- pairing-verify ---------------------------------------------------
    if (sc_pairing->parsed()) {
      static const std::vector<std::string> kAll = {
          "psi", "decompose", "switch", "surgical", "ledger", "upsilon"};
      std::vector<std::string> checks = p_checks.empty() ? kAll : p_checks;
      for (const std::string& c : checks)
        if (std::find(kAll.begin(), kAll.end(), c) == kAll.end())
          throw std::invalid_argument("unknown check: " + c);
      auto wants = [&](const std::string& c) {
        return std::find(checks.begin(), checks.end(), c) != checks.end();
      };
      lf::Lattice lat =
          p_config.empty() ? lf::ghost_arm_lattice() : load_lattice(p_config);
      lf::Site x = parse_site(p_x), y = parse_site(p_y);
      lf::Rat beta = lf::parse_rational(p_beta);
      Json j = lf::report_root("pairing-verify");
      j["lattice"] = lat.name();
      j["x"] = lf::site_str(x);
      j["y"] = lf::site_str(y);
      j["beta"] = lf::rat_str(beta);
      j["region"] = p_region;
      j["max_edges"] = p_max_edges;
      Json cj;
      bool all = true;
      if (wants("psi") || wants("decompose")) {
        PairingCombiReport rep = run_pairing_combinatorics(
            lat, x, y, p_max_edges, wants("decompose"));
        auto entry = [&](bool with_euler) {
          Json c;
          c["configs"] = rep.configs;
          c["pairings"] = rep.pairings;
          if (with_euler) c["euler_configs"] = rep.euler_configs;
          c["ok"] = rep.ok;
          if (!rep.ok) c["failure"] = rep.failure;
          return c;
        };
        if (wants("psi")) cj["psi"] = entry(false);
        if (wants("decompose")) cj["decompose"] = entry(true);
        all = all && rep.ok;
      }
      if (wants("switch")) {
        lf::PairedSwitchReport rep =
            lf::verify_paired_switch(lat, beta, x, y, p_max_edges);
        Json c;
        c["graphs_total"] = rep.graphs_total;
        c["switchable"] = rep.switchable;
        c["ok"] = rep.ok;
        if (!rep.ok) c["failure"] = rep.failure;
        cj["switch"] = std::move(c);
        all = all && rep.ok;
      }
      if (wants("surgical")) {
        lf::SurgicalReport rep = lf::verify_surgical_weight_equality(
            lat, beta, x, y, p_region, p_max_edges);
        Json c;
        c["pairs"] = rep.pairs;
        c["paths"] = rep.paths;
        c["ok"] = rep.ok;
        if (!rep.ok) c["failure"] = rep.failure;
        cj["surgical"] = std::move(c);
        all = all && rep.ok;
      }
      if (wants("ledger")) {
        lf::LedgerReport rep = lf::verify_ledger(lat, beta, x, y, p_region,
                                                 p_region + 1, p_max_edges);
        Json c;
        c["classes"] = rep.classes;
        c["members"] = rep.members;
        c["refined_classes"] = rep.refined_classes;
        c["ok"] = rep.ok;
        if (!rep.ok) c["failure"] = rep.failure;
        cj["ledger"] = std::move(c);
        all = all && rep.ok;
      }
      if (wants("upsilon")) {
        FigureReport rep = run_figure_check();
        cj["upsilon"] = figure_json(rep);
        all = all && rep.ok;
      }
      j["checks"] = std::move(cj);
      j["all_pass"] = all;
      return finish(out, j, all);
    }

    // ---- infrared ---------------------------------------------------------
    if (sc_infrared->parsed()) {
      InfraredRun run = run_infrared(i_grid, i_table_r, i_tol);
      if (i_format == "csv") {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t r = 0; r < run.table.size(); ++r)
          rows.push_back({std::to_string(r), lf::csv_num(run.table[r])});
        int rc = emit(out, lf::csv_render({"r", "G"}, rows));
        if (rc) return rc;
        return run.pass ? 0 : 1;
      }
      Json j = lf::report_root("infrared");
      Json body = infrared_json(run, i_grid, i_tol);
      for (auto& [k, v] : body.items()) j[k] = v;
      return finish(out, j, run.pass);
    }

    // ---- infrared-bound ---------------------------------------------------
    if (sc_bound->parsed()) {
      const double beta = beta_value(b_beta);
      std::ifstream f(b_mc);
      if (!f) throw std::runtime_error("cannot read mc report: " + b_mc);
      Json mc = Json::parse(f);
      if (mc.value("kind", std::string()) != "mc" ||
          mc.value("estimator", std::string()) != "mn")
        throw std::runtime_error(
            "mc report must come from 'mc --estimator mn'");
      if (mc.contains("n") && mc["n"].get<int>() != b_n)
        throw std::runtime_error("mc report used a different box radius");
      if (mc.contains("beta") &&
          std::abs(mc["beta"].get<double>() - beta) > 1e-12)
        throw std::runtime_error("mc report used a different beta");
      const Json& est = mc.at("estimate");
      const double mean = est.at("mean").get<double>();
      const double se = est.at("se").get<double>();
      const long batches = est.at("batches").get<long>();
      lf::GreenSpec spec{b_grid, lf::QuadScheme::Gauss2, 28};
      const double avg_g = lf::avg_green(spec, b_n);
      lf::BoundReport rep =
          lf::bound_report(beta, b_n, mean, se, batches, avg_g);
      Json j = lf::report_root("infrared-bound");
      j["grid"] = b_grid;
      Json body = bound_json(rep, batches);
      for (auto& [k, v] : body.items()) j[k] = v;
      return finish(out, j, rep.pass);
    }

    // ---- mc ---------------------------------------------------------------
    if (sc_mc->parsed()) {
      const double beta = beta_value(m_beta);
      Json j = lf::report_root("mc");
      j["estimator"] = m_estimator;
      if (m_estimator == "inequalities") {
        lf::InequalityReport rep =
            lf::inequality_suite(beta, m_l_small, m_l_big, lf::at(0, 0, 0),
                                 lf::at(1, 0, 0), m_sweeps, m_seed);
        j["beta"] = lf::report_num(beta);
        j["L_small"] = m_l_small;
        j["L_big"] = m_l_big;
        j["sweeps"] = m_sweeps;
        j["seed"] = m_seed;
        j["checks"] = inequality_json(rep);
        j["all_pass"] = rep.all_pass;
        return finish(out, j, rep.all_pass);
      }
      if (m_config.empty())
        throw std::runtime_error("--config is required for this estimator");
      lf::Lattice lat = load_lattice(m_config);
      j["lattice"] = lat.name();
      j["beta"] = lf::report_num(beta);
      j["sweeps"] = m_sweeps;
      j["seed"] = m_seed;
      lf::Estimate est;
      if (m_estimator == "twopoint") {
        lf::Site x = parse_site(m_x), y = parse_site(m_y);
        j["x"] = lf::site_str(x);
        j["y"] = lf::site_str(y);
        est = lf::estimate_two_point(lat, beta, x, y, m_sweeps, m_seed);
      } else if (m_estimator == "mn") {
        j["n"] = m_n;
        est = lf::estimate_Mn(lat, beta, m_n, m_sweeps, m_seed);
      } else {
        lf::Site s = parse_site(m_site);
        j["site"] = lf::site_str(s);
        est = lf::estimate_mag(lat, beta, s, m_sweeps, m_seed);
      }
      j["estimate"] = estimate_json(est);
      return finish(out, j, true);
    }

    // ---- probe ------------------------------------------------------------
    if (sc_probe->parsed()) {
      lf::Lattice lat =
          r_config.empty() ? lf::Lattice::free_box(2) : load_lattice(r_config);
      const double beta = beta_value(r_beta);
      lf::WormSampler w(lat, beta, r_seed);
      lf::LoopProbe probe = lf::loop_structure_probe(
          w, r_steps, r_sample_every, r_cap, lf::mix_seed(r_seed, 1));
      const bool pass = probe.monotone && probe.terminal_one;
      if (r_format == "csv") {
        int rc = emit(out, probe_csv(probe));
        if (rc) return rc;
        return pass ? 0 : 1;
      }
      Json j = lf::report_root("probe");
      j["lattice"] = lat.name();
      j["beta"] = lf::report_num(beta);
      j["steps"] = r_steps;
      j["sample_every"] = r_sample_every;
      j["cap"] = r_cap;
      j["seed"] = r_seed;
      Json body = probe_json(probe);
      for (auto& [k, v] : body.items()) j[k] = v;
      j["pass"] = pass;
      return finish(out, j, pass);
    }

    // ---- report -----------------------------------------------------------
    if (sc_report->parsed()) {
      (void)g_all;  // every suite always runs; the flag documents intent
      Json j = lf::report_root("report");
      j["seed"] = g_seed;
      Json suites;
      bool all = true;

      {  // exact series vs oracles on the three tiny topologies
        Json cases = Json::array();
        bool ok = true;
        const lf::Rat beta(3, 10);
        const lf::Site a = lf::at(0, 0, 0), b = lf::at(1, 0, 0);
        const lf::Site p0 = lf::at(-1, 0, 0);
        const std::vector<std::pair<lf::Lattice, std::pair<lf::Site, lf::Site>>>
            tris = {{lf::Lattice::dumbbell(), {a, b}},
                    {lf::Lattice::path_graph(3), {p0, b}},
                    {lf::Lattice::cycle_graph(4), {a, b}}};
        for (const auto& [lat, xy] : tris) {
          SeriesCase sc = run_series_case(lat, beta, 12, 32, xy.first,
                                          xy.second, 1e-8, 1e-10, 1e-8);
          ok = ok && sc.pass;
          cases.push_back(series_case_json(sc));
        }
        suites["series"] = Json{{"cases", std::move(cases)}, {"pass", ok}};
        all = all && ok;
      }

      {  // switching bijections on the ghosted ring
        lf::Lattice ring = lf::ring_ghost_lattice();
        const lf::Site x = lf::at(0, 0, 0), y = lf::at(1, 0, 0);
        lf::UndirectedReport und =
            lf::verify_undirected_bijection(ring, x, y, 4);
        lf::DirectedReport dir = lf::verify_directed_switch(ring, x, y, 4);
        lf::AdverseWitness wit = lf::adverse_example();
        bool ok = und.ok && dir.ok && !(wit.g == wit.f);
        suites["switching"] = Json{{"undirected", undirected_json(und)},
                                   {"directed", directed_json(dir)},
                                   {"adverse_distinct", !(wit.g == wit.f)},
                                   {"pass", ok}};
        all = all && ok;
      }

      {  // pairing counts, decomposition, switching, ledgers
        lf::Lattice arm = lf::ghost_arm_lattice();
        const lf::Site x = lf::at(0, 0, 0), y = lf::at(1, 0, 0);
        const lf::Rat beta(3, 10);
        PairingCombiReport combi =
            run_pairing_combinatorics(arm, x, y, 4, true);
        lf::PairedSwitchReport sw = lf::verify_paired_switch(arm, beta, x, y,
                                                             4);
        lf::LedgerReport led = lf::verify_ledger(arm, beta, x, y, 2, 3, 4);
        lf::SurgicalReport sur =
            lf::verify_surgical_weight_equality(arm, beta, x, y, 2, 4);
        FigureReport fig = run_figure_check();
        bool ok = combi.ok && sw.ok && led.ok && sur.ok && fig.ok;
        Json pj;
        pj["combinatorics"] =
            Json{{"configs", combi.configs},
                 {"pairings", combi.pairings},
                 {"euler_configs", combi.euler_configs},
                 {"ok", combi.ok}};
        pj["switch"] = Json{{"graphs_total", sw.graphs_total},
                            {"switchable", sw.switchable},
                            {"ok", sw.ok}};
        pj["ledger"] = Json{{"classes", led.classes},
                            {"members", led.members},
                            {"refined_classes", led.refined_classes},
                            {"ok", led.ok}};
        pj["surgical"] =
            Json{{"pairs", sur.pairs}, {"paths", sur.paths}, {"ok", sur.ok}};
        pj["upsilon"] = figure_json(fig);
        pj["pass"] = ok;
        suites["pairing"] = std::move(pj);
        all = all && ok;
      }

      {  // Green function dual-scheme agreement and decay
        InfraredRun run = run_infrared(32, 6, 1e-4);
        suites["infrared"] = infrared_json(run, 32, 1e-4);
        all = all && run.pass;
      }

      {  // sampled box average against the Green-scale bound
        const double beta = 0.6;
        lf::Lattice lat = lf::Lattice::periodic_box(4);
        lf::Estimate est =
            lf::estimate_Mn(lat, beta, 1, 1500, lf::mix_seed(g_seed, 21));
        lf::GreenSpec spec{32, lf::QuadScheme::Gauss2, 28};
        lf::BoundReport rep = lf::bound_report(beta, 1, est.mean, est.se,
                                               est.batches, lf::avg_green(spec, 1));
        suites["bound"] = bound_json(rep, est.batches);
        all = all && rep.pass;
      }

      {  // correlation inequalities at one high-temperature point
        lf::InequalityReport rep =
            lf::inequality_suite(0.4, 2, 3, lf::at(0, 0, 0), lf::at(1, 0, 0),
                                 1200, lf::mix_seed(g_seed, 22));
        suites["inequalities"] =
            Json{{"checks", inequality_json(rep)}, {"pass", rep.all_pass}};
        all = all && rep.all_pass;
      }

      {  // worm balance and the loop census shape
        lf::Lattice lat = lf::Lattice::free_box(2);
        lf::WormSampler w(lat, 0.5, lf::mix_seed(g_seed, 23));
        lf::LoopProbe probe =
            lf::loop_structure_probe(w, 20000, 200, 12, lf::mix_seed(g_seed, 24));
        bool ok = probe.monotone && probe.terminal_one;
        Json pj = probe_json(probe);
        pj["pass"] = ok;
        suites["probe"] = std::move(pj);
        all = all && ok;
      }

      j["suites"] = std::move(suites);
      j["all_pass"] = all;
      return finish(out, j, all);
    }
  } catch (const lf::cost_guard_error& e) {
    std::cerr << "cost guard: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
