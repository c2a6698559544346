#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rhftf/geometry.hpp"
#include "rhftf/tf.hpp"

namespace rhftf {

struct SommerfeldConstants {
  double xi;   ///< (sqrt 73 - 7) / 2, root of t^2 + 7t - 6
  double eta;  ///< (sqrt 73 + 7) / 2, root of t^2 - 7t - 6
  double c_S;  ///< 81 pi^2 / 8 = 9 c_TF^3 / pi^2
  double c_TF;
};

const SommerfeldConstants& sommerfeld_constants();

/// c_S d^{-4} (1 + a (r/d)^xi)^{-2}; requires d >= r > 0 and a > -1.
double lower_envelope(double dist, double r, double a);
/// c_S d^{-4} (1 + A (r/d)^xi); requires d >= r > 0.
double upper_envelope(double dist, double r, double A);
/// c_S d^{-4} (1 + A1 (d/R_j)^eta + A2 (r/d)^xi); R_j may be +inf.
double refined_envelope(double dist, double r, double A1, double A2, double voronoi_radius);

/// inf over t >= r of max(mu t, lower_envelope(t, r, a) t).
double nu(double mu, double r, double a);

/// Scalar potential evaluated at arbitrary points of A_r.
using PotentialFn = std::function<double(Vec3)>;

struct SommerfeldEnvelopeParams {
  double r = 0.0;
  double mu = 0.0;
  double a = 0.0;
  double A = 0.0;
  double nu = 0.0;
  std::vector<double> A1; ///< per nucleus
  std::vector<double> A2; ///< per nucleus
  std::size_t sphere_samples = 0;
};

/// Points on the boundary of A_r: 26 stencil directions around each nucleus,
/// dropping those that fall inside another nucleus' ball.
std::vector<Vec3> sphere_samples(const NuclearConfiguration& config, double r);

/// A_2^j from the sphere supremum S = sup (s^4 (phi - mu) / c_S - 1), with
/// the outer positive part; A_1^j follows from it.
double refined_A2(double sup_term, double r, double voronoi_radius);
double refined_A1(double A2, double r, double voronoi_radius);

/// The liminf over s -> r+ is taken at s = r. Throws DomainError when
/// phi <= mu somewhere on the sampled sphere, or r <= 0.
SommerfeldEnvelopeParams extract_envelope_params(const PotentialFn& phi, double mu, double r,
                                                 const NuclearConfiguration& config);
/// Radial atom (nucleus at the origin).
SommerfeldEnvelopeParams extract_envelope_params(const TFSolutionAtom& solution, double r);
SommerfeldEnvelopeParams extract_envelope_params(const TFSolutionMolecule& solution, double r);

struct InequalityReport {
  double worst_slack = 0.0;          ///< min over samples of (bound side) - (phi side)
  double worst_relative_slack = 0.0; ///< min of slack / |phi|
  Vec3 worst_point{};
  std::size_t violations = 0;
  std::vector<Vec3> violating;       ///< first few violating points
};

struct BoundReport {
  SommerfeldEnvelopeParams params;
  std::size_t sample_count = 0;
  double absolute_slack = 0.0;
  double relative_slack = 0.0;
  InequalityReport lower;   ///< max(max_j omega^-, max_j nu / |x - R_j|) <= phi
  InequalityReport upper;   ///< phi <= sum_j omega^+ + mu
  InequalityReport refined; ///< phi <= omega^j_{A1,A2} + mu on the Voronoi cell of j

  std::size_t total_violations() const { return lower.violations + upper.violations + refined.violations; }
};

struct VerifyOptions {
  /// A sample violates an inequality when its slack is below
  /// -(absolute + relative * |phi|).
  double absolute = 1e-8;
  double relative = 0.0;
  std::size_t keep_violations = 16;
};

/// Samples must lie in A_r (others are rejected with DomainError).
BoundReport verify_sommerfeld(const PotentialFn& phi, const SommerfeldEnvelopeParams& params,
                              const NuclearConfiguration& config, const std::vector<Vec3>& samples,
                              const VerifyOptions& options = {});
BoundReport verify_sommerfeld(const TFSolutionAtom& solution, double r, const std::vector<Vec3>& samples,
                              const VerifyOptions& options = {});
BoundReport verify_sommerfeld(const TFSolutionMolecule& solution, double r, const std::vector<Vec3>& samples,
                              const VerifyOptions& options = {});

/// `count` points on the +x axis, log-spaced from r to r_max (radial atoms).
std::vector<Vec3> radial_samples(double r, double r_max, std::size_t count);

/// Seeded sample of A_r inside a Cartesian grid: `uniform` points drawn
/// uniformly from the node hull shrunk by 2h, then `shell` points per nucleus
/// in random directions at radii log-spaced over [r, max(1, 2r)].
std::vector<Vec3> exterior_samples(const NuclearConfiguration& config, const CartesianGrid3D& grid, double r,
                                   std::size_t uniform, std::size_t shell, std::uint64_t seed);

/// Stable-key JSON text of a report.
std::string to_json(const BoundReport& report, int indent = 2);

} // namespace rhftf
