#include "rhftf/geometry.hpp"

#include <algorithm>
#include <sstream>

#include "rhftf/errors.hpp"

namespace rhftf {

NuclearConfiguration::NuclearConfiguration(std::vector<Vec3> positions, std::vector<double> charges)
    : positions_(std::move(positions)), charges_(std::move(charges)) {
  if (positions_.empty())
    throw DomainError("nuclear configuration needs at least one nucleus");
  if (positions_.size() != charges_.size())
    throw DomainError("nuclear configuration: positions and charges differ in length");
  for (std::size_t j = 0; j < charges_.size(); ++j) {
    if (!std::isfinite(charges_[j]) || charges_[j] <= 0.0) {
      std::ostringstream msg;
      msg << "nucleus " << j << ": charge must be positive, got " << charges_[j];
      throw DomainError(msg.str());
    }
    const auto& p = positions_[j];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw DomainError("nucleus " + std::to_string(j) + ": non-finite position");
    total_charge_ += charges_[j];
  }

  const std::size_t k = positions_.size();
  voronoi_radius_.assign(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = distance(positions_[i], positions_[j]);
      if (d <= 0.0) {
        std::ostringstream msg;
        msg << "nuclei " << i << " and " << j << " coincide (R_min = 0)";
        throw DomainError(msg.str());
      }
      r_min_ = std::min(r_min_, d);
      voronoi_radius_[i] = std::min(voronoi_radius_[i], 0.5 * d);
      voronoi_radius_[j] = std::min(voronoi_radius_[j], 0.5 * d);
    }
  }
  r0_ = std::min(1.0, r_min_ / 4.0);
}

NuclearConfiguration NuclearConfiguration::atom(double z) {
  return NuclearConfiguration({Vec3{}}, {z});
}

double NuclearConfiguration::nearest_distance(Vec3 x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : positions_)
    d = std::min(d, distance(x, p));
  return d;
}

double NuclearConfiguration::nuclear_potential(Vec3 x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < positions_.size(); ++j) {
    const double d = distance(x, positions_[j]);
    if (d == 0.0)
      throw SingularPointError("nuclear potential evaluated on nucleus " + std::to_string(j));
    v += charges_[j] / d;
  }
  return v;
}

double NuclearConfiguration::nuclear_repulsion() const {
  double e = 0.0;
  for (std::size_t i = 0; i < positions_.size(); ++i)
    for (std::size_t j = i + 1; j < positions_.size(); ++j)
      e += charges_[i] * charges_[j] / distance(positions_[i], positions_[j]);
  return e;
}

void CutoffSpec::validate() const {
  if (!(r > 0.0) || !std::isfinite(r))
    throw DomainError("cutoff radius must be positive");
  if (!(lambda > 0.0 && lambda <= 0.5))
    throw DomainError("cutoff smoothing fraction must lie in (0, 1/2]");
}

std::size_t voronoi_cell_index(Vec3 x, const NuclearConfiguration& config) {
  std::size_t best = 0;
  double best_d = distance(x, config.position(0));
  for (std::size_t j = 1; j < config.size(); ++j) {
    const double d = distance(x, config.position(j));
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

bool in_exterior_region(Vec3 x, double r, const NuclearConfiguration& config) {
  if (!(r > 0.0))
    throw DomainError("exterior region radius must be positive");
  return std::all_of(config.positions().begin(), config.positions().end(),
                     [&](const Vec3& p) { return distance(x, p) > r; });
}

double weighted_coulomb_phi(Vec3 x, const NuclearConfiguration& config) {
  return config.nuclear_potential(x) / config.total_charge();
}

double smoothstep(double t) {
  if (t <= 0.0)
    return 0.0;
  if (t >= 1.0)
    return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

double smooth_exterior_cutoff(Vec3 x, const CutoffSpec& spec, const NuclearConfiguration& config) {
  spec.validate();
  const double d = config.nearest_distance(x);
  return smoothstep((d - spec.r) / (spec.lambda * spec.r));
}

} // namespace rhftf
