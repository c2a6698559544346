#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace rhftf {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(Vec3 a, Vec3 b) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

/// Fixed point nuclei with positive charges (Bohr, atomic units).
///
/// Derived quantities are computed once at construction:
///  - Z = sum of charges,
///  - R_min = smallest pairwise distance (+inf for a single nucleus),
///  - R_0 = min(1, R_min / 4),
///  - voronoi radius of nucleus j = half the distance to its nearest
///    neighbour (+inf for a single nucleus). Not to be confused with the
///    nucleus position.
class NuclearConfiguration {
public:
  /// Throws DomainError on empty input, size mismatch, non-positive or
  /// non-finite charges, and coincident positions.
  NuclearConfiguration(std::vector<Vec3> positions, std::vector<double> charges);

  /// Single nucleus of charge z at the origin.
  static NuclearConfiguration atom(double z);

  std::size_t size() const { return positions_.size(); }
  const std::vector<Vec3>& positions() const { return positions_; }
  const std::vector<double>& charges() const { return charges_; }
  Vec3 position(std::size_t j) const { return positions_.at(j); }
  double charge(std::size_t j) const { return charges_.at(j); }

  double total_charge() const { return total_charge_; }
  double r_min() const { return r_min_; }
  double r0() const { return r0_; }
  double voronoi_radius(std::size_t j) const { return voronoi_radius_.at(j); }

  /// min_j |x - R_j|
  double nearest_distance(Vec3 x) const;

  /// V_Z(x) = sum_j z_j / |x - R_j|. Throws SingularPointError on a nucleus.
  double nuclear_potential(Vec3 x) const;

  /// sum_{i<j} z_i z_j / |R_i - R_j|
  double nuclear_repulsion() const;

  friend bool operator==(const NuclearConfiguration&, const NuclearConfiguration&) = default;

private:
  std::vector<Vec3> positions_;
  std::vector<double> charges_;
  double total_charge_ = 0.0;
  double r_min_ = std::numeric_limits<double>::infinity();
  double r0_ = 1.0;
  std::vector<double> voronoi_radius_;
};

/// Radius and smoothing fraction of the exterior cut-off eta_r.
struct CutoffSpec {
  double r = 1.0;
  double lambda = 0.5;

  /// Throws DomainError unless r > 0 and 0 < lambda <= 1/2.
  void validate() const;
};

/// Index (0-based) of the nucleus nearest to x; ties go to the lowest index.
std::size_t voronoi_cell_index(Vec3 x, const NuclearConfiguration& config);

/// Indicator of A_r = { x : |x - R_j| > r for all j }. Requires r > 0.
bool in_exterior_region(Vec3 x, double r, const NuclearConfiguration& config);

/// sum_j (z_j / Z) |x - R_j|^{-1}. Throws SingularPointError on a nucleus.
double weighted_coulomb_phi(Vec3 x, const NuclearConfiguration& config);

/// s(t) = 3t^2 - 2t^3 clamped to [0, 1].
double smoothstep(double t);

/// eta_r(x) = s((d(x) - r) / (lambda r)) with d(x) the distance to the
/// nearest nucleus. Zero inside the balls of radius r, one outside the
/// balls of radius (1 + lambda) r, |grad eta_r| <= 1.5 / (lambda r).
double smooth_exterior_cutoff(Vec3 x, const CutoffSpec& spec, const NuclearConfiguration& config);

} // namespace rhftf
