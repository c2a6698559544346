#include <doctest.h>

#include <cmath>
#include <random>

#include "rhftf/errors.hpp"
#include "rhftf/geometry.hpp"

using namespace rhftf;

namespace {

NuclearConfiguration pair4() { return NuclearConfiguration({{0, 0, 0}, {4, 0, 0}}, {1.0, 1.0}); }

NuclearConfiguration random_config(std::mt19937_64& rng, int K) {
  std::uniform_real_distribution<double> pos(-3, 3), q(0.5, 5);
  std::vector<Vec3> p;
  std::vector<double> z;
  for (int k = 0; k < K; ++k) {
    p.push_back({pos(rng), pos(rng), pos(rng)});
    z.push_back(q(rng));
  }
  return NuclearConfiguration(p, z);
}

} // namespace

TEST_CASE("nuclear configuration derived quantities") {
  const auto c = pair4();
  CHECK(c.total_charge() == 2.0);
  CHECK(c.r_min() == 4.0);
  CHECK(c.r0() == 1.0);
  CHECK(c.voronoi_radius(0) == 2.0);
  CHECK(NuclearConfiguration::atom(3).r_min() == INFINITY);
  CHECK(std::isinf(NuclearConfiguration::atom(3).voronoi_radius(0)));
  const NuclearConfiguration close({{0, 0, 0}, {1, 0, 0}}, {1, 1});
  CHECK(close.r0() == doctest::Approx(0.25));
  CHECK(pair4().nuclear_repulsion() == doctest::Approx(0.25));
}

TEST_CASE("nuclear configuration rejects bad input") {
  CHECK_THROWS_AS(NuclearConfiguration({}, {}), DomainError);
  CHECK_THROWS_AS(NuclearConfiguration({{0, 0, 0}}, {1, 2}), DomainError);
  CHECK_THROWS_AS(NuclearConfiguration({{0, 0, 0}}, {-1}), DomainError);
  CHECK_THROWS_AS(NuclearConfiguration({{0, 0, 0}}, {NAN}), DomainError);
  CHECK_THROWS_AS(NuclearConfiguration({{1, 2, 3}, {1, 2, 3}}, {1, 1}), DomainError);
  CHECK_THROWS_AS(NuclearConfiguration::atom(1).nuclear_potential({0, 0, 0}), SingularPointError);
}

TEST_CASE("voronoi cell examples") {
  CHECK(voronoi_cell_index({5, -2, 7}, NuclearConfiguration::atom(1)) == 0);
  CHECK(voronoi_cell_index({1, 0, 0}, pair4()) == 0);
  CHECK(voronoi_cell_index({3, 0, 0}, pair4()) == 1);
  CHECK(voronoi_cell_index({2, 0, 0}, pair4()) == 0); // tie -> lowest index
}

TEST_CASE("voronoi cell agrees with brute force") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-6, 6);
  for (int rep = 0; rep < 20; ++rep) {
    const auto c = random_config(rng, 1 + rep % 5);
    for (int s = 0; s < 500; ++s) {
      const Vec3 x{u(rng), u(rng), u(rng)};
      std::size_t best = 0;
      for (std::size_t j = 1; j < c.size(); ++j)
        if (distance(x, c.position(j)) < distance(x, c.position(best)))
          best = j;
      REQUIRE(voronoi_cell_index(x, c) == best);
    }
  }
}

TEST_CASE("exterior region examples") {
  const auto a = NuclearConfiguration::atom(1);
  CHECK(in_exterior_region({2, 0, 0}, 1, a));
  CHECK_FALSE(in_exterior_region({0.5, 0, 0}, 1, a));
  CHECK_FALSE(in_exterior_region({3.5, 0, 0}, 1, pair4()));
  CHECK_THROWS_AS(in_exterior_region({2, 0, 0}, 0, a), DomainError);
}

TEST_CASE("weighted coulomb phi examples") {
  CHECK(weighted_coulomb_phi({2, 0, 0}, NuclearConfiguration::atom(5)) == doctest::Approx(0.5));
  const NuclearConfiguration eq({{-1, 0, 0}, {1, 0, 0}}, {2, 2});
  CHECK(weighted_coulomb_phi({0, 0, 0}, eq) == doctest::Approx(1.0));
  const NuclearConfiguration uneq({{0, 0, 0}, {3, 0, 0}}, {3, 1});
  CHECK(weighted_coulomb_phi({1, 0, 0}, uneq) == doctest::Approx(0.875));
  CHECK_THROWS_AS(weighted_coulomb_phi({3, 0, 0}, uneq), SingularPointError);
}

TEST_CASE("smooth cutoff examples") {
  const auto a = NuclearConfiguration::atom(1);
  const CutoffSpec s{1.5, 0.4};
  CHECK(smooth_exterior_cutoff({1.5, 0, 0}, s, a) == 0.0);
  CHECK(smooth_exterior_cutoff({0, 1.5 * 1.4, 0}, s, a) == doctest::Approx(1.0));
  CHECK(smooth_exterior_cutoff({0, 0, 1.5 * 1.2}, s, a) == doctest::Approx(0.5));
  CHECK(smoothstep(-1) == 0.0);
  CHECK(smoothstep(2) == 1.0);
  CHECK_THROWS_AS((CutoffSpec{1.0, 0.0}.validate()), DomainError);
  CHECK_THROWS_AS((CutoffSpec{1.0, 0.6}.validate()), DomainError);
  CHECK_THROWS_AS((CutoffSpec{-1.0, 0.3}.validate()), DomainError);
}

TEST_CASE("cutoff is sandwiched between the exterior indicators") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5, 5), rr(0.05, 2.0), ll(0.01, 0.5);
  const auto c = pair4();
  for (int rep = 0; rep < 10000; ++rep) {
    const CutoffSpec s{rr(rng), ll(rng)};
    const Vec3 x{u(rng), u(rng), u(rng)};
    const double eta = smooth_exterior_cutoff(x, s, c);
    const double outer = in_exterior_region(x, s.r, c) ? 1.0 : 0.0;
    const double inner = in_exterior_region(x, (1 + s.lambda) * s.r, c) ? 1.0 : 0.0;
    REQUIRE(outer >= eta);
    REQUIRE(eta >= inner);
  }
}

TEST_CASE("cutoff gradient bound") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-4, 8), rr(0.2, 1.5), ll(0.05, 0.5);
  const auto c = pair4();
  for (int rep = 0; rep < 2000; ++rep) {
    const CutoffSpec s{rr(rng), ll(rng)};
    const Vec3 x{u(rng), u(rng) / 2, u(rng) / 2};
    const double h = 1e-6 * s.r;
    auto f = [&](Vec3 y) { return smooth_exterior_cutoff(y, s, c); };
    const Vec3 g{(f(x + Vec3{h, 0, 0}) - f(x - Vec3{h, 0, 0})) / (2 * h),
                 (f(x + Vec3{0, h, 0}) - f(x - Vec3{0, h, 0})) / (2 * h),
                 (f(x + Vec3{0, 0, h}) - f(x - Vec3{0, 0, h})) / (2 * h)};
    REQUIRE(norm(g) <= 2.0 / (s.lambda * s.r) * (1 + 1e-3));
  }
}

TEST_CASE("weighted coulomb phi is harmonic off the nuclei") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5, 5);
  const NuclearConfiguration c({{0, 0, 0}, {2, 1, 0}, {-1, 0, 2}}, {1, 3, 2});
  for (double h : {1e-2, 5e-3}) {
    int checked = 0;
    while (checked < 200) {
      const Vec3 x{u(rng), u(rng), u(rng)};
      const double d = c.nearest_distance(x);
      if (d < 0.5)
        continue;
      auto f = [&](Vec3 y) { return weighted_coulomb_phi(y, c); };
      double lap = -6 * f(x);
      for (Vec3 e : {Vec3{h, 0, 0}, Vec3{0, h, 0}, Vec3{0, 0, h}})
        lap += f(x + e) + f(x - e);
      lap /= h * h;
      // Truncation error of the 7-point stencil: h^2/12 * sum d^4 f ~ h^2 * 24 / d^5.
      REQUIRE(std::abs(lap) <= 50.0 * h * h / std::pow(d, 5) + 1e-12 / (h * h));
      ++checked;
    }
  }
}
