#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rhftf/errors.hpp"
#include "rhftf/rhf.hpp"

using namespace rhftf;
using std::numbers::pi;

namespace {

// Z = 2, N = 2 spinless model: same equations on a 4x finer grid (8000 nodes).
constexpr double Z2_energy_oracle = -1.50787888;

SCFConfig config_for(double Z, int l_max = 1, int states = 3) {
  SCFConfig c;
  c.grid = RadialGrid(1e-6 / std::max(Z, 1.0), 60, 2000);
  c.l_max = l_max;
  c.states_per_l = states;
  return c;
}

RadialField coulomb(const RadialGrid& g, double Z) {
  RadialField v(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    v[i] = -Z / g.r(i);
  return v;
}

void check_aufbau(const RHFAtomState& st, int q) {
  double lowest_partial = INFINITY, total = 0;
  for (const auto& s : st.shells) {
    const double cap = q * (2 * s.l + 1);
    REQUIRE(s.occupation >= -1e-12);
    REQUIRE(s.occupation <= cap + 1e-12);
    if (s.occupation > 1e-12 && s.occupation < cap - 1e-12)
      lowest_partial = std::min(lowest_partial, s.energy);
    total += s.occupation;
  }
  CHECK(total == doctest::Approx(st.N).epsilon(1e-10));
  for (const auto& s : st.shells) {
    if (s.energy < lowest_partial - 1e-9 && s.energy < st.fermi_mu - 1e-9)
      REQUIRE(s.occupation == doctest::Approx(q * (2 * s.l + 1)));
    if (s.energy > st.fermi_mu + 1e-12)
      REQUIRE(s.occupation <= 1e-12);
  }
}

} // namespace

TEST_CASE("hydrogenic spectrum") {
  for (double Z : {1.0, 3.0}) {
    const RadialGrid g(1e-6 / Z, 80 / Z, 3000);
    const auto v = coulomb(g, Z);
    for (int l = 0; l <= 1; ++l) {
      const auto pairs = eigensolve_radial(v, l, 3 - l);
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const int n = l + 1 + int(k);
        // On the scaled grid the error scales like Z^2: 1e-5 absolute for hydrogen's 1s.
        if (Z == 1.0)
          CHECK(std::abs(pairs[k].energy + 1.0 / (2.0 * n * n)) < 1e-5);
        CHECK(pairs[k].energy == doctest::Approx(-Z * Z / (2.0 * n * n)).epsilon(2e-5));
        CHECK(orbital_residual(v, l, pairs[k]) < 1e-6);
        std::vector<double> u2(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
          u2[i] = pairs[k].u[i] * pairs[k].u[i];
        CHECK(g.integrate(u2) == doctest::Approx(1).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("mean field potential examples") {
  const RadialGrid g(1e-6, 60, 3000);
  const auto v0 = mean_field_potential(RadialField(g), 2.0);
  for (std::size_t i = 0; i < g.size(); i += 113)
    REQUIRE(v0[i] == doctest::Approx(-2.0 / g.r(i)));
  RadialField h(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    h[i] = std::exp(-2 * g.r(i)) / pi;
  const auto v = mean_field_potential(h, 2.0);
  for (std::size_t i = 0; i < g.size(); i += 113) {
    const double r = g.r(i);
    REQUIRE(v[i] == doctest::Approx(-2 / r + 1 / r - std::exp(-2 * r) * (1 + 1 / r)).epsilon(1e-8));
  }
  CHECK(v.at_radius(50) * 50 == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("hydrogenic limit of the SCF") {
  const double N = 1e-3;
  const auto st = scf_solve(1.0, N, config_for(1.0));
  REQUIRE(st.converged);
  // First order in N: the orbital feels N times its own Hartree field, <1s|J|1s> = 5/8.
  CHECK(st.fermi_mu == doctest::Approx(-0.5 + 5.0 / 8 * N).epsilon(1e-6 / 0.5));
  CHECK(st.fermi_mu > -0.5);
}

TEST_CASE("SCF invariants") {
  struct Case {
    double Z, N;
    int q;
  };
  for (const auto [Z, N, q] : {Case{1.0, 1.0, 1}, Case{2.0, 2.0, 1}, Case{3.0, 2.5, 1}, Case{4.0, 4.0, 2}, Case{5.0, 3.3, 1}}) {
    CAPTURE(Z);
    CAPTURE(N);
    auto cfg = config_for(Z, 2, 3);
    cfg.spin_degeneracy = q;
    const auto st = scf_solve(Z, N, cfg);
    REQUIRE(st.converged);
    CHECK(scf_orbital_residual(st, cfg) < 1e-6);
    CHECK(st.kinetic > 0);
    CHECK(st.energy < 0);
    CHECK(std::abs(st.energy - st.energy_direct) < 1e-6 * std::abs(st.energy_direct));
    CHECK(total_charge(st.rho) == doctest::Approx(N).epsilon(1e-8));
    check_aufbau(st, q);
  }
}

TEST_CASE("SCF reference values") {
  const auto h = scf_solve(1.0, 1.0, config_for(1.0));
  CHECK(h.energy > -0.5);
  const auto he = scf_solve(2.0, 2.0, config_for(2.0));
  REQUIRE(he.converged);
  CHECK(he.energy == doctest::Approx(Z2_energy_oracle).epsilon(1e-6 / 1.5));
  const auto empty = scf_solve(2.0, 0.0, config_for(2.0));
  CHECK(empty.energy == 0.0);
  CHECK(std::isinf(empty.fermi_mu));
}

TEST_CASE("SCF warm start reaches the same state") {
  const auto cfg = config_for(3.0, 1, 3);
  const auto a = scf_solve(3.0, 3.0, cfg);
  const auto b = scf_solve(3.0, 3.0, cfg, &a.rho);
  CHECK(b.iterations < a.iterations);
  CHECK(b.energy == doctest::Approx(a.energy).epsilon(1e-9));
}

TEST_CASE("SCF configuration guards") {
  auto cfg = config_for(1.0);
  cfg.mixing = 0;
  CHECK_THROWS_AS(scf_solve(1, 1, cfg), DomainError);
  cfg = config_for(1.0);
  cfg.spin_degeneracy = 3;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  CHECK_THROWS_AS(scf_solve(1, -1, config_for(1.0)), DomainError);
  // Not enough computed levels to hold N.
  CHECK_THROWS_AS(scf_solve(10, 10, config_for(10.0, 0, 2)), DomainError);
}

TEST_CASE("ionization scans") {
  SUBCASE("no nucleus") {
    const auto s = ionization_scan(0.0, 0.1, config_for(0.0));
    CHECK(s.N_max == 0.0);
  }
  SUBCASE("hydrogen") {
    const auto s = ionization_scan(1.0, 0.05, config_for(1.0));
    CHECK(s.N_max <= 3.0);
    CHECK(s.N_max >= 1.0);
    for (std::size_t k = 1; k < s.points.size(); ++k)
      REQUIRE(s.points[k].energy <= s.points[k - 1].energy);
    for (std::size_t k = 1; k + 1 < s.points.size(); ++k)
      REQUIRE(s.points[k + 1].energy - 2 * s.points[k].energy + s.points[k - 1].energy >= -1e-6);
    for (const auto& p : s.points)
      REQUIRE(p.converged);
  }
  SUBCASE("threaded scans match serial ones") {
    ScanOptions one, two;
    two.threads = 2;
    const auto a = ionization_scans({1.0, 2.0}, 0.25, config_for(2.0), one);
    const auto b = ionization_scans({1.0, 2.0}, 0.25, config_for(2.0), two);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].N_max == b[k].N_max);
      REQUIRE(a[k].points.size() == b[k].points.size());
      for (std::size_t i = 0; i < a[k].points.size(); ++i)
        CHECK(a[k].points[i].energy == b[k].points[i].energy);
    }
  }
  CHECK_THROWS_AS(ionization_scan(1.0, 0.0, config_for(1.0)), DomainError);
  CHECK_THROWS_AS(ionization_scan(1.0, 0.6, config_for(1.0)), DomainError);
}
