// One PASS/FAIL line per acceptance criterion.
//
//   acceptance [criterion ...] [--strict] [--report FILE]
//
// With --report the lines are also written to FILE (ctest prints it after the run).
// Criteria 6 and 8 are known to fail (see README, "Known failures"); they are
// still run and reported as FAIL.  The exit status is nonzero when any other
// criterion fails, or when any criterion fails under --strict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rhftf/diagnostics.hpp"
#include "rhftf/rhf.hpp"
#include "rhftf/sommerfeld.hpp"
#include "rhftf/tf.hpp"

using namespace rhftf;
using std::numbers::pi;

namespace {

// Independent RK4 shooting oracle (tests/oracles/tf_slope_oracle.cpp).
constexpr double slope_oracle = -1.588071022611375;

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, auto... xs) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

Outcome c1() {
  const RadialGrid g(1.0, 10.0, 300);
  const auto& k = sommerfeld_constants();
  RadialField phi(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    phi[i] = k.c_S / std::pow(g.r(i), 4);
  const auto res = radial_tf_residual(phi, 0.0);
  double worst = 0.0;
  std::size_t checked = 0;
  for (double x : res)
    if (!std::isnan(x)) {
      worst = std::max(worst, x);
      ++checked;
    }
  const double ident = std::abs(k.c_S - 9 * std::pow(k.c_TF, 3) / (pi * pi)) / k.c_S;
  return {worst < 1e-10 && ident < 1e-12,
          fmt("max relative residual %.2e over %zu nodes in [1,10] (< 1e-10); |c_S - 9 c_TF^3/pi^2|/c_S = %.1e (< 1e-12)",
              worst, checked, ident)};
}

Outcome c2() {
  const auto u = solve_universal_tf(2e-3, 1.0, 1e-6, 100);
  std::vector<double> lz, le;
  for (double Z : {1.0, 2.0, 4.0}) {
    const auto s = tf_atom_solve(Z, Z, RadialGrid::for_charge(Z));
    lz.push_back(std::log(Z));
    le.push_back(std::log(-s.energy));
  }
  const double mz = (lz[0] + lz[1] + lz[2]) / 3, me = (le[0] + le[1] + le[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int k = 0; k < 3; ++k) {
    sxy += (lz[k] - mz) * (le[k] - me);
    sxx += (lz[k] - mz) * (lz[k] - mz);
  }
  const double p = sxy / sxx;
  const double ds = std::abs(u.initial_slope - slope_oracle);
  return {ds < 1e-4 && std::abs(p - 7.0 / 3) < 1e-3,
          fmt("y'(0) = %.10f, |diff| to oracle %.1e (< 1e-4); energy exponent %.6f, |p - 7/3| = %.1e (< 1e-3)",
              u.initial_slope, ds, p, std::abs(p - 7.0 / 3))};
}

Outcome c3() {
  const auto s = tf_atom_solve(1.0, 1.0, RadialGrid::for_charge(1.0));
  VerifyOptions opt;
  opt.absolute = 1e-8;
  std::size_t lo = 0, up = 0, n = 0;
  double worst = INFINITY;
  for (double r : {0.01, 0.1, 1.0}) {
    const auto b = verify_sommerfeld(s, r, radial_samples(r, s.phi.grid.r_max(), 1000), opt);
    lo += b.lower.violations;
    up += b.upper.violations;
    n += b.sample_count;
    worst = std::min({worst, b.lower.worst_slack, b.upper.worst_slack});
  }
  return {lo == 0 && up == 0 && n == 3000,
          fmt("%zu samples, lower violations %zu, upper violations %zu (slack 1e-8 abs); worst slack %.2e", n, lo, up,
              worst)};
}

Outcome c4() {
  const NuclearConfiguration cfg({{-2, 0, 0}, {2, 0, 0}}, {1.0, 1.0});
  const auto grid = CartesianGrid3D::cube({0, 0, 0}, 8.0, 129);
  const auto s = tf_molecule_solve(cfg, grid);
  VerifyOptions opt;
  opt.absolute = 0.0;
  opt.relative = 1e-3;
  const double r = 0.2;
  const auto b = verify_sommerfeld(s, r, exterior_samples(cfg, grid, r, 10000, 2000, 12345), opt);
  return {b.total_violations() == 0,
          fmt("129^3, %zu samples: violations lower %zu upper %zu refined %zu (slack 1e-3 rel); worst relative "
              "slack refined %.2e, A1 = %.4g, A2 = %.4g",
              b.sample_count, b.lower.violations, b.upper.violations, b.refined.violations,
              b.refined.worst_relative_slack, b.params.A1.at(0), b.params.A2.at(0))};
}

Outcome c5() {
  const auto g = RadialGrid::for_charge(1.0, 1000.0, 4000);
  const auto s = tf_atom_solve(1.0, 1.0, g);
  bool ok = true;
  std::string d;
  for (double r : {0.3, 0.6}) {
    const auto e = tf_exterior_solve(exterior_problem_from_tf(s, r));
    RadialField chi(g), diff(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      chi[i] = g.r(i) > r ? s.rho[i] : 0.0;
      diff[i] = std::abs(e.rho[i] - chi[i]);
    }
    const double l1 = total_charge(diff) / total_charge(chi);
    ok = ok && e.mu == 0.0 && l1 < 1e-4;
    d += fmt("r=%.1f: mu_r = %g, rel L1 %.2e; ", r, e.mu, l1);
  }
  return {ok, d + "(mu_r = 0, L1 < 1e-4)"};
}

Outcome c6() {
  SCFConfig c;
  c.grid = RadialGrid(1e-6, 60.0, 2000);
  c.l_max = 1;
  c.states_per_l = 3;
  const auto st = scf_solve(1.0, 1e-3, c);
  const auto v = mean_field_potential(RadialField(c.grid), 1.0);
  double worst = 0.0;
  for (int l = 0; l <= 1; ++l) {
    const auto pairs = eigensolve_radial(v, l, 3 - l);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const int n = l + 1 + int(k);
      worst = std::max(worst, std::abs(pairs[k].energy + 1.0 / (2.0 * n * n)));
    }
  }
  const double dmu = std::abs(st.fermi_mu + 0.5);
  return {st.converged && dmu < 1e-4 && worst < 1e-5,
          fmt("fermi_mu = %.7f, |mu + 0.5| = %.2e (< 1e-4; first order predicts 5N/8 = %.2e); "
              "eigenvalues n<=3, l<=1: max error %.1e (< 1e-5)",
              st.fermi_mu, dmu, 5e-3 / 8, worst)};
}

Outcome c7() {
  bool ok = true;
  std::string d = "N_max:";
  for (int Z = 1; Z <= 8; ++Z) {
    SCFConfig c;
    c.grid = RadialGrid(1e-6 / Z, 60.0, 2000);
    const auto s = ionization_scan(Z, 0.05, c);
    bool mono = true;
    for (std::size_t k = 1; k < s.points.size(); ++k)
      mono = mono && s.points[k].energy <= s.points[k - 1].energy;
    const auto b = ionization_budget_check(s.N_max, Z, 1);
    ok = ok && b.hard_pass && b.excess <= 2.0 && mono;
    d += fmt(" %d:%.2f%s", Z, s.N_max, mono ? "" : "(E not monotone)");
  }
  return {ok, d + " (N_max <= 2Z+1, N_max - Z <= 2, E non-increasing)"};
}

Outcome c8() {
  double lo = INFINITY, hi = 0.0;
  std::string d;
  for (double Z : {10.0, 20.0, 40.0}) {
    SCFConfig c;
    c.grid = RadialGrid(1e-6 / Z, 60.0, 2000);
    c.l_max = 3;
    c.states_per_l = 5;
    const auto st = scf_solve(Z, Z, c);
    if (!st.converged)
      return {false, fmt("SCF did not converge for Z = %g", Z)};
    const auto tf = tf_atom_solve(Z, Z, c.grid);
    const auto rep = compare_screened(st.rho, tf.rho, Z, log_spaced(std::cbrt(1.0 / Z), 1.0, 16), tf.tail_charge);
    double zl = INFINITY, zh = 0.0;
    for (const auto& row : rep.rows) {
      zl = std::min(zl, row.r4_diff);
      zh = std::max(zh, row.r4_diff);
    }
    lo = std::min(lo, zl);
    hi = std::max(hi, zh);
    d += fmt("Z=%g r^4 sup-diff in [%.3g, %.3g]; ", Z, zl, zh);
  }
  const double ratio = hi / lo;
  return {ratio < 10.0, d + fmt("max/min = %.3g (< 10)", ratio)};
}

Outcome c9() {
  const auto ball = uniform_ball(1.0);
  const auto v = coulomb_potential_radial(ball);
  double pot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double s = ball.grid.r(i);
    pot = std::max(pot, std::abs(v[i] - (3.0 - s * s) / 2.0));
  }
  const double de = std::abs(coulomb_energy(ball) - 0.6);

  const RadialGrid g(1e-6, 60.0, 4000);
  std::mt19937_64 rng(12345);
  std::size_t cs_bad = 0;
  for (int k = 0; k < 100; ++k) {
    const auto f = random_radial_density(g, rng, true), h = random_radial_density(g, rng, true);
    const double dfg = coulomb_pairing(f, h);
    if (dfg * dfg > coulomb_energy(f) * coulomb_energy(h) * (1 + 1e-12))
      ++cs_bad;
  }
  std::size_t finite = 0;
  double worst = 0.0;
  const auto xs = log_spaced(1e-4, 30.0, 32);
  for (int k = 0; k < 20; ++k) {
    const double q = coulomb_estimate_check(random_radial_density(g, rng, true), xs);
    if (std::isfinite(q) && q > 0) {
      ++finite;
      worst = std::max(worst, q);
    }
  }
  return {pot < 1e-8 && de < 1e-8 && cs_bad == 0 && finite == 20,
          fmt("ball potential err %.1e, |D - 0.6| %.1e (< 1e-8); Cauchy-Schwarz failures %zu/100; "
              "finite estimate ratios %zu/20 (max %.3g)",
              pot, de, cs_bad, finite, worst)};
}

Outcome c10() {
  bool ok = true;
  std::string d;
  for (const char* exe : {RHFTF_UNIT_TESTS, RHFTF_CLI_TESTS}) {
    const std::string cmd = std::string(exe) + " --no-intro --minimal > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    const bool pass = WIFEXITED(st) && WEXITSTATUS(st) == 0;
    ok = ok && pass;
    const std::string name = std::string(exe).substr(std::string(exe).find_last_of('/') + 1);
    d += name + (pass ? " passed; " : " FAILED; ");
  }
  return {ok, d + "(doctest suites, fixed seeds)"};
}

struct Criterion {
  int id;
  double limit_s;
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {{1, 1, c1},    {2, 10, c2},   {3, 10, c3},  {4, 600, c4}, {5, 30, c5},
                                      {6, 5, c6},    {7, 600, c7},  {8, 900, c8}, {9, 30, c9}, {10, 300, c10}};
  const std::set<int> known_failures = {6, 8};
  std::set<int> wanted;
  bool strict = false;
  std::string report_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--strict")
      strict = true;
    else if (a == "--report" && i + 1 < argc)
      report_path = argv[++i];
    else
      wanted.insert(std::atoi(a.c_str()));
  }

  if (!report_path.empty())
    std::ofstream(report_path).flush(); // no stale report if the run dies
  std::string lines;
  auto say = [&](const std::string& line) {
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    lines += line;
  };
  int unexpected = 0, failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id))
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.ok && t < c.limit_s;
    say(fmt("criterion %2d %s  ", c.id, pass ? "PASS" : "FAIL") + o.detail +
        fmt("; runtime %.2f s (< %g s)%s\n", t, c.limit_s, !pass && known_failures.count(c.id) ? " [known failure]" : ""));
    if (!pass) {
      ++failed;
      if (!known_failures.count(c.id))
        ++unexpected;
    }
  }
  say(fmt("%d failed (%d unexpected)\n", failed, unexpected));
  if (!report_path.empty())
    std::ofstream(report_path) << lines;
  return (strict ? failed : unexpected) ? 1 : 0;
}
