#include "rhftf/sommerfeld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "rhftf/errors.hpp"

namespace rhftf {

const SommerfeldConstants& sommerfeld_constants() {
  static const SommerfeldConstants k = [] {
    const double s73 = std::sqrt(73.0);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return SommerfeldConstants{(s73 - 7.0) / 2.0, (s73 + 7.0) / 2.0, 81.0 * pi2 / 8.0, tf_constant()};
  }();
  return k;
}

namespace {

void check_radii(double dist, double r, const char* who) {
  if (!(r > 0.0))
    throw DomainError(std::string(who) + ": r must be positive");
  // A relative margin absorbs round-off for points placed on the sphere itself.
  if (!(dist >= r * (1.0 - 1e-12)))
    throw DomainError(std::string(who) + ": distance below r");
}

} // namespace

double lower_envelope(double dist, double r, double a) {
  check_radii(dist, r, "lower_envelope");
  if (!(a > -1.0))
    throw DomainError("lower_envelope: a must exceed -1");
  const auto& k = sommerfeld_constants();
  const double f = 1.0 + a * std::pow(r / dist, k.xi);
  return k.c_S / std::pow(dist, 4) / (f * f);
}

double upper_envelope(double dist, double r, double A) {
  check_radii(dist, r, "upper_envelope");
  const auto& k = sommerfeld_constants();
  return k.c_S / std::pow(dist, 4) * (1.0 + A * std::pow(r / dist, k.xi));
}

double refined_envelope(double dist, double r, double A1, double A2, double vr) {
  check_radii(dist, r, "refined_envelope");
  if (!(vr > 0.0))
    throw DomainError("refined_envelope: voronoi radius must be positive");
  const auto& k = sommerfeld_constants();
  const double outer = std::isinf(vr) ? 0.0 : A1 * std::pow(dist / vr, k.eta);
  return k.c_S / std::pow(dist, 4) * (1.0 + outer + A2 * std::pow(r / dist, k.xi));
}

double nu(double mu, double r, double a) {
  if (!(mu >= 0.0))
    throw DomainError("nu: mu must be >= 0");
  if (mu == 0.0)
    return 0.0;
  // mu t increases and omega^-(t) t decreases, so the infimum of the maximum
  // sits at their crossing, or at t = r when the crossing lies inside.
  auto gap = [&](double t) { return mu * t - lower_envelope(t, r, a) * t; };
  if (gap(r) >= 0.0)
    return mu * r;
  double lo = std::log(r), hi = lo + 1.0;
  while (gap(std::exp(hi)) < 0.0)
    hi += 2.0 * (hi - lo);
  for (int k = 0; k < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++k) {
    const double mid = 0.5 * (lo + hi);
    (gap(std::exp(mid)) < 0.0 ? lo : hi) = mid;
  }
  return mu * std::exp(hi);
}

std::vector<Vec3> sphere_samples(const NuclearConfiguration& config, double r) {
  if (!(r > 0.0))
    throw DomainError("sphere_samples: r must be positive");
  std::vector<Vec3> out;
  for (std::size_t j = 0; j < config.size(); ++j)
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          if (dx == 0 && dy == 0 && dz == 0)
            continue;
          Vec3 d{double(dx), double(dy), double(dz)};
          const Vec3 x = config.position(j) + (r / norm(d)) * d;
          bool outside = true;
          for (std::size_t i = 0; i < config.size(); ++i)
            if (i != j && distance(x, config.position(i)) <= r)
              outside = false;
          if (outside)
            out.push_back(x);
        }
  return out;
}

double refined_A2(double sup_term, double r, double vr) {
  const auto& k = sommerfeld_constants();
  const double q = std::isinf(vr) ? 0.0 : r / vr;
  const double num = sup_term - 4.0 / (k.eta - 4.0) * std::pow(q, k.eta);
  const double den = 1.0 + (4.0 + k.xi) / (k.eta - 4.0) * std::pow(q, k.xi + k.eta);
  return std::max(0.0, num / den);
}

double refined_A1(double A2, double r, double vr) {
  const auto& k = sommerfeld_constants();
  const double q = std::isinf(vr) ? 0.0 : r / vr;
  return (4.0 + A2 * (4.0 + k.xi) * std::pow(q, k.xi)) / (k.eta - 4.0);
}

SommerfeldEnvelopeParams extract_envelope_params(const PotentialFn& phi, double mu, double r,
                                                 const NuclearConfiguration& config) {
  if (!(r > 0.0))
    throw DomainError("extract_envelope_params: r must be positive");
  if (!(mu >= 0.0))
    throw DomainError("extract_envelope_params: mu must be >= 0");
  const auto& k = sommerfeld_constants();
  const auto pts = sphere_samples(config, r);
  if (pts.empty())
    throw DomainError("extract_envelope_params: the boundary of A_r is empty at this radius");
  double sup_a = -std::numeric_limits<double>::infinity();
  double sup_A = -std::numeric_limits<double>::infinity();
  const double r4 = std::pow(r, 4);
  for (const auto& x : pts) {
    const double p = phi(x);
    if (!(p > mu))
      throw DomainError("extract_envelope_params: phi <= mu on the boundary of A_r");
    sup_a = std::max(sup_a, std::sqrt(k.c_S / (r4 * p)) - 1.0);
    sup_A = std::max(sup_A, r4 * (p - mu) / k.c_S - 1.0);
  }
  SommerfeldEnvelopeParams out;
  out.r = r;
  out.mu = mu;
  out.a = sup_a;
  out.A = sup_A;
  out.nu = nu(mu, r, sup_a);
  out.sphere_samples = pts.size();
  for (std::size_t j = 0; j < config.size(); ++j) {
    const double vr = config.voronoi_radius(j);
    const double a2 = refined_A2(sup_A, r, vr);
    out.A2.push_back(a2);
    out.A1.push_back(refined_A1(a2, r, vr));
  }
  return out;
}

namespace {

PotentialFn radial_potential(const TFSolutionAtom& s) {
  return [&s](Vec3 x) {
    const double d = norm(x);
    if (d > s.phi.grid.r_max() || d < s.phi.grid.r_min())
      throw DomainError("radial potential evaluated outside its grid");
    return s.phi.at_radius(d);
  };
}

PotentialFn molecular_potential(const TFSolutionMolecule& s) {
  return [&s](Vec3 x) { return s.potential_at(x); };
}

void record(InequalityReport& rep, double slack, double phi, Vec3 x, const VerifyOptions& opt) {
  const double rel = slack / std::max(std::abs(phi), 1e-300);
  if (slack < rep.worst_slack) {
    rep.worst_slack = slack;
    rep.worst_point = x;
  }
  rep.worst_relative_slack = std::min(rep.worst_relative_slack, rel);
  if (slack < -(opt.absolute + opt.relative * std::abs(phi))) {
    ++rep.violations;
    if (rep.violating.size() < opt.keep_violations)
      rep.violating.push_back(x);
  }
}

void init(InequalityReport& rep) {
  rep.worst_slack = std::numeric_limits<double>::infinity();
  rep.worst_relative_slack = std::numeric_limits<double>::infinity();
}

} // namespace

SommerfeldEnvelopeParams extract_envelope_params(const TFSolutionAtom& s, double r) {
  return extract_envelope_params(radial_potential(s), s.mu, r, NuclearConfiguration::atom(s.Z));
}

SommerfeldEnvelopeParams extract_envelope_params(const TFSolutionMolecule& s, double r) {
  return extract_envelope_params(molecular_potential(s), s.mu, r, s.config);
}

BoundReport verify_sommerfeld(const PotentialFn& phi, const SommerfeldEnvelopeParams& prm,
                              const NuclearConfiguration& config, const std::vector<Vec3>& samples,
                              const VerifyOptions& opt) {
  if (prm.A1.size() != config.size() || prm.A2.size() != config.size())
    throw DomainError("verify_sommerfeld: parameters do not match the configuration");
  BoundReport rep;
  rep.params = prm;
  rep.sample_count = samples.size();
  rep.absolute_slack = opt.absolute;
  rep.relative_slack = opt.relative;
  init(rep.lower);
  init(rep.upper);
  init(rep.refined);
  const double r = prm.r;
  for (const auto& x : samples) {
    if (!(config.nearest_distance(x) >= r * (1.0 - 1e-12)))
      throw DomainError("verify_sommerfeld: sample outside A_r");
    const double p = phi(x);
    double lower = 0.0, upper = prm.mu;
    for (std::size_t j = 0; j < config.size(); ++j) {
      const double d = distance(x, config.position(j));
      lower = std::max({lower, lower_envelope(d, r, prm.a), prm.nu / d});
      upper += upper_envelope(d, r, prm.A);
    }
    const std::size_t j = voronoi_cell_index(x, config);
    const double dj = distance(x, config.position(j));
    const double refined = refined_envelope(dj, r, prm.A1[j], prm.A2[j], config.voronoi_radius(j)) + prm.mu;
    record(rep.lower, p - lower, p, x, opt);
    record(rep.upper, upper - p, p, x, opt);
    record(rep.refined, refined - p, p, x, opt);
  }
  return rep;
}

BoundReport verify_sommerfeld(const TFSolutionAtom& s, double r, const std::vector<Vec3>& samples,
                              const VerifyOptions& opt) {
  return verify_sommerfeld(radial_potential(s), extract_envelope_params(s, r), NuclearConfiguration::atom(s.Z),
                           samples, opt);
}

BoundReport verify_sommerfeld(const TFSolutionMolecule& s, double r, const std::vector<Vec3>& samples,
                              const VerifyOptions& opt) {
  return verify_sommerfeld(molecular_potential(s), extract_envelope_params(s, r), s.config, samples, opt);
}

std::vector<Vec3> radial_samples(double r, double r_max, std::size_t count) {
  if (!(r > 0.0 && r_max >= r) || count == 0)
    throw DomainError("radial_samples: need 0 < r <= r_max and count >= 1");
  std::vector<Vec3> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : double(i) / double(count - 1);
    out[i] = {r * std::pow(r_max / r, t), 0.0, 0.0};
  }
  return out;
}

std::vector<Vec3> exterior_samples(const NuclearConfiguration& config, const CartesianGrid3D& grid, double r,
                                   std::size_t uniform, std::size_t shell, std::uint64_t seed) {
  if (!(r > 0.0))
    throw DomainError("exterior_samples: r must be positive");
  std::mt19937_64 rng(seed);
  const Vec3 lo = grid.lower() + Vec3{2 * grid.spacing(), 2 * grid.spacing(), 2 * grid.spacing()};
  const Vec3 hi = grid.upper() - Vec3{2 * grid.spacing(), 2 * grid.spacing(), 2 * grid.spacing()};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> out;
  std::size_t tries = 0;
  while (out.size() < uniform) {
    if (++tries > 1000 * uniform + 1000)
      throw DomainError("exterior_samples: A_r barely meets the grid");
    const Vec3 x{lo.x + (hi.x - lo.x) * u(rng), lo.y + (hi.y - lo.y) * u(rng), lo.z + (hi.z - lo.z) * u(rng)};
    if (config.nearest_distance(x) > r)
      out.push_back(x);
  }
  std::normal_distribution<double> g;
  const double outer = std::max(1.0, 2.0 * r);
  for (std::size_t j = 0; j < config.size(); ++j)
    for (std::size_t k = 0; k < shell; ++k) {
      Vec3 d{g(rng), g(rng), g(rng)};
      const double t = r * std::pow(outer / r, (double(k) + 0.5) / double(shell));
      const Vec3 x = config.position(j) + (t / norm(d)) * d;
      if (config.nearest_distance(x) >= r && grid.contains(x))
        out.push_back(x);
    }
  return out;
}

namespace {

nlohmann::json point_json(Vec3 x) { return nlohmann::json::array({x.x, x.y, x.z}); }

nlohmann::json inequality_json(const InequalityReport& q) {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : q.violating)
    v.push_back(point_json(x));
  return {{"worst_slack", q.worst_slack},
          {"worst_relative_slack", q.worst_relative_slack},
          {"worst_point", point_json(q.worst_point)},
          {"violations", q.violations},
          {"violating_points", v}};
}

} // namespace

std::string to_json(const BoundReport& rep, int indent) {
  const auto& k = sommerfeld_constants();
  nlohmann::json j;
  j["constants"] = {{"xi", k.xi}, {"eta", k.eta}, {"c_S", k.c_S}, {"c_TF", k.c_TF}};
  j["params"] = {{"r", rep.params.r},   {"mu", rep.params.mu}, {"a", rep.params.a},
                 {"A", rep.params.A},   {"nu", rep.params.nu}, {"A1", rep.params.A1},
                 {"A2", rep.params.A2}, {"sphere_samples", rep.params.sphere_samples}};
  j["sample_count"] = rep.sample_count;
  j["absolute_slack"] = rep.absolute_slack;
  j["relative_slack"] = rep.relative_slack;
  j["lower"] = inequality_json(rep.lower);
  j["upper"] = inequality_json(rep.upper);
  j["refined"] = inequality_json(rep.refined);
  j["total_violations"] = rep.total_violations();
  return j.dump(indent);
}

} // namespace rhftf
