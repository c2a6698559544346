#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "rhftf/errors.hpp"
#include "rhftf/sommerfeld.hpp"

using namespace rhftf;

namespace {

const auto& K = sommerfeld_constants();

double exact(Vec3 x) { return K.c_S / std::pow(norm(x), 4); }

} // namespace

TEST_CASE("exponent identities") {
  CHECK(std::abs(K.xi * K.eta - 6) < 1e-12);
  CHECK(std::abs(K.eta - K.xi - 7) < 1e-12);
  CHECK(std::abs(K.xi * K.xi + 7 * K.xi - 6) < 1e-12);
  CHECK(std::abs(K.eta * K.eta - 7 * K.eta - 6) < 1e-12);
  CHECK(K.xi == doctest::Approx(0.772).epsilon(1e-3));
}

TEST_CASE("envelope examples") {
  const double r = 0.7;
  CHECK(lower_envelope(2.0, r, 0.0) == doctest::Approx(K.c_S / 16));
  CHECK(lower_envelope(r, r, 0.5) == doctest::Approx(K.c_S / std::pow(r, 4) / 2.25));
  CHECK(lower_envelope(1e6, 1.0, 1.0) / (K.c_S / 1e24) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(upper_envelope(2.0, r, 0.0) == doctest::Approx(K.c_S / 16));
  CHECK(upper_envelope(r, r, 3.0) == doctest::Approx(4 * K.c_S / std::pow(r, 4)));
  CHECK(upper_envelope(2 * r, r, 1.0) == doctest::Approx(K.c_S / std::pow(2 * r, 4) * 1.5856).epsilon(1e-4));
  CHECK(refined_envelope(2.0, r, 0, 0, 5.0) == doctest::Approx(K.c_S / 16));
  CHECK(refined_envelope(3.0, r, 1, 0, 3.0) == doctest::Approx(2 * K.c_S / 81));
  CHECK(refined_envelope(r, r, 0, 1, INFINITY) == doctest::Approx(2 * K.c_S / std::pow(r, 4)));
  CHECK_THROWS_AS(lower_envelope(0.5, r, 0), DomainError);
  CHECK_THROWS_AS(lower_envelope(2, r, -1), DomainError);
  CHECK_THROWS_AS(upper_envelope(2, 0, 0), DomainError);
  CHECK_THROWS_AS(refined_envelope(2, r, 0, 0, 0), DomainError);
}

TEST_CASE("envelope properties on random draws") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> rr(0.01, 2), ff(1, 50), aa(-0.9, 5), vv(0.5, 20);
  // Parameters that can come from one potential satisfy (1 + a)^{-2} <= 1 + A
  // (equality of both envelopes' sphere values); a <= A alone is not enough
  // for negative a. log((1 + A q)(1 + a q)^2) is concave in q = (r/d)^xi, so
  // the sphere inequality carries over to every distance.
  for (int k = 0; k < 5000; ++k) {
    const double r = rr(rng), d = r * ff(rng), a = aa(rng), v = vv(rng);
    const double A = 1 / ((1 + a) * (1 + a)) - 1 + std::abs(aa(rng));
    REQUIRE(lower_envelope(d, r, a) <= upper_envelope(d, r, A) * (1 + 1e-14));
    REQUIRE(refined_envelope(d, r, 0, A, v) == upper_envelope(d, r, A));
  }
}

TEST_CASE("nu examples and monotonicity") {
  CHECK(nu(0, 1, 0.3) == 0.0);
  const double mu = 0.01;
  const double cross = std::pow(K.c_S / mu, 0.25);
  CHECK(nu(mu, 0.5 * cross, 0) == doctest::Approx(std::pow(mu, 0.75) * std::pow(K.c_S, 0.25)).epsilon(1e-10));
  CHECK(nu(mu, 2 * cross, 0) == doctest::Approx(mu * 2 * cross));
  CHECK_THROWS_AS(nu(-1, 1, 0), DomainError);
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> m(0, 1), a(-0.5, 3), r(0.05, 3);
  for (int k = 0; k < 500; ++k) {
    const double m1 = m(rng), m2 = m1 + m(rng), a1 = a(rng), a2 = a1 + m(rng), rv = r(rng);
    REQUIRE(nu(m2, rv, a1) >= nu(m1, rv, a1) * (1 - 1e-12));
    REQUIRE(nu(m1, rv, a2) <= nu(m1, rv, a1) * (1 + 1e-12));
  }
}

TEST_CASE("refined coefficients") {
  const double q = 0.1;
  const double want = (0.5 - 4 / (K.eta - 4) * std::pow(q, K.eta)) /
                      (1 + (4 + K.xi) / (K.eta - 4) * std::pow(q, K.xi + K.eta));
  CHECK(refined_A2(0.5, q, 1.0) == doctest::Approx(want).epsilon(1e-15));
  CHECK(refined_A2(0.5, q, 1.0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(refined_A2(-0.5, 1.0, INFINITY) == 0.0);
  CHECK(refined_A2(0.25, 1.0, INFINITY) == 0.25);
  CHECK(refined_A1(0.0, 1.0, INFINITY) == doctest::Approx(4 / (K.eta - 4)));
}

TEST_CASE("parameter extraction examples") {
  const auto atom = NuclearConfiguration::atom(1);
  auto p = extract_envelope_params(exact, 0.0, 0.5, atom);
  CHECK(p.a == doctest::Approx(0).scale(1));
  CHECK(p.A == doctest::Approx(0).scale(1));
  CHECK(p.sphere_samples == 26);
  p = extract_envelope_params([](Vec3 x) { return 2 * exact(x); }, 0.0, 0.5, atom);
  CHECK(p.A == doctest::Approx(1));
  CHECK(p.a == doctest::Approx(1 / std::sqrt(2.0) - 1));
  CHECK_THROWS_AS(extract_envelope_params([](Vec3) { return -1.0; }, 0.0, 0.5, atom), DomainError);
  CHECK_THROWS_AS(extract_envelope_params(exact, 0.0, -0.5, atom), DomainError);
}

TEST_CASE("exact Sommerfeld potential satisfies all bounds tightly") {
  const auto atom = NuclearConfiguration::atom(1);
  const double r = 0.3;
  const auto p = extract_envelope_params(exact, 0.0, r, atom);
  const auto rep = verify_sommerfeld(exact, p, atom, radial_samples(r, 100, 500));
  CHECK(rep.total_violations() == 0);
  CHECK(rep.lower.worst_relative_slack > -1e-12);
  CHECK(rep.upper.worst_relative_slack > -1e-12);
  CHECK(rep.lower.worst_relative_slack < 1e-12);
}

TEST_CASE("sphere samples") {
  const NuclearConfiguration c({{0, 0, 0}, {1, 0, 0}}, {1, 1});
  const auto pts = sphere_samples(c, 0.6);
  CHECK(pts.size() < 52);
  for (const auto& x : pts)
    REQUIRE(c.nearest_distance(x) == doctest::Approx(0.6));
  CHECK(sphere_samples(NuclearConfiguration::atom(2), 1).size() == 26);
}

TEST_CASE("extracted parameters hold on their own extraction sphere") {
  const auto g = RadialGrid::for_charge(1.0);
  const auto s = tf_atom_solve(1.0, 1.0, g);
  for (double r : {0.01, 0.1, 1.0}) {
    const auto p = extract_envelope_params(s, r);
    const auto pts = sphere_samples(NuclearConfiguration::atom(1), r);
    VerifyOptions o;
    o.absolute = 1e-10;
    const auto rep = verify_sommerfeld(s, r, pts, o);
    CHECK(rep.lower.violations == 0);
    CHECK(rep.lower.worst_slack >= -1e-10);
    CHECK(p.a > -1);
  }
}

TEST_CASE("report plumbing") {
  const auto g = RadialGrid::for_charge(1.0);
  const auto s = tf_atom_solve(1.0, 1.0, g);
  const auto rep = verify_sommerfeld(s, 0.1, radial_samples(0.1, g.r_max(), 50));
  const auto j = nlohmann::json::parse(to_json(rep));
  CHECK(j["sample_count"] == 50);
  CHECK(j["params"]["A1"].size() == 1);
  CHECK(j.contains("refined"));
  CHECK(to_json(rep) == to_json(rep));
  CHECK_THROWS_AS(verify_sommerfeld(s, 0.1, {Vec3{0.05, 0, 0}}), DomainError);
  const auto samples = exterior_samples(NuclearConfiguration({{-2, 0, 0}, {2, 0, 0}}, {1, 1}),
                                        CartesianGrid3D::cube({0, 0, 0}, 8, 33), 0.2, 100, 20, 9);
  CHECK(samples.size() == 140);
  CHECK(samples == exterior_samples(NuclearConfiguration({{-2, 0, 0}, {2, 0, 0}}, {1, 1}),
                                    CartesianGrid3D::cube({0, 0, 0}, 8, 33), 0.2, 100, 20, 9));
}
