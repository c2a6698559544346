#pragma once

#include <cstddef>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "rhftf/geometry.hpp"
#include "rhftf/grid3d.hpp"
#include "rhftf/radial.hpp"
#include "rhftf/sommerfeld.hpp"
#include "rhftf/tf.hpp"

namespace rhftf {

// Screened potential  Phi_r(x) = V_Z(x) - int_{A_r^c} rho(y) / |x - y| dy.

/// Radial density around a single nucleus of charge Z, |x| = s.
/// For s >= r this is (Z - Q(r)) / s.
double screened_potential(const RadialField& rho, double Z, double r, double s);

/// 3D density: the ball part of rho is convolved by a free-space Poisson solve.
struct ScreenedField3D {
  NuclearConfiguration config;
  double r = 0.0;
  ScalarField3D inner_potential; ///< (1 - chi_r^+) rho * |x|^{-1}
  double at(Vec3 x) const;       ///< V_Z(x) - interpolated inner potential
};
ScreenedField3D screened_potential(const ScalarField3D& rho, const NuclearConfiguration& config, double r);

enum class Model { RHF, TF };
const char* model_name(Model m);

struct ScreenedPotentialSample {
  double r = 0.0;
  Model model = Model::TF;
  std::vector<Vec3> points;   ///< sphere_samples(config, r)
  std::vector<double> values;
  double sup = 0.0;
  double inf = 0.0;
};
ScreenedPotentialSample sample_screened(const PotentialFn& phi_r, const NuclearConfiguration& config, double r,
                                        Model model);

/// max |Phi^TF_r(x) - phi^TF(x) - (chi_r^+ rho^TF) * |x|^{-1}| over samples
/// (|x| >= r). Both sides include the charge beyond the grid.
double tf_screened_identity_check(const TFSolutionAtom& solution, double r, const std::vector<double>& sample_radii);

/// int_{A_r} rho.
double exterior_charge(const RadialField& rho, double r);
double exterior_charge(const TFSolutionAtom& solution, double r); ///< adds the tail beyond r_max
double exterior_charge(const ScalarField3D& rho, const NuclearConfiguration& config, double r);

/// Exterior data  V_r = chi_r^+ Phi^TF_r,  budget = int_{A_r} rho^TF.  V_r is
/// built as phi^TF + (chi_r^+ rho^TF) * |x|^{-1} with the grid's own radial
/// convolution, so the masked TF density is the discrete exterior minimiser
/// (the closed form (Z - Q(r)) / s differs by the O(h) quadrature error of the jump at r).
RadialExteriorProblem exterior_problem_from_tf(const TFSolutionAtom& solution, double r);

struct ComparisonRow {
  double r = 0.0;
  double sup_diff = 0.0;        ///< sup over the sampled boundary of |Phi^RHF_r - Phi^TF_r|
  double r4_diff = 0.0;         ///< r^4 sup_diff
  double ext_charge_rhf = 0.0;
  double ext_charge_tf = 0.0;
  double r3_ext_rhf = 0.0;      ///< r^3 int_{A_r} rho^RHF
  double harmonic_ratio = 0.0;  ///< max over probes in A_r of |diff| / sup_diff (<= 1 for a harmonic difference)
  std::size_t samples = 0;
};

struct ComparisonReport {
  double Z = 0.0;
  std::vector<ComparisonRow> rows;
};

/// Both densities radial around one nucleus of charge Z, on the same grid.
/// `tail_tf` is the TF charge beyond the grid (added to the exterior charge).
ComparisonReport compare_screened(const RadialField& rho_rhf, const RadialField& rho_tf, double Z,
                                  const std::vector<double>& r_list, double tail_tf = 0.0);

/// CSV: r,sup_diff,r4_diff,ext_charge_rhf,ext_charge_tf,r3_ext_rhf
void write_csv(std::ostream& out, const ComparisonReport& report);

/// `count` log-spaced radii from lo to hi inclusive.
std::vector<double> log_spaced(double lo, double hi, std::size_t count);

/// max over |x| in x_list of |int_{|y|<|x|} f / |x - y|| / (||f||_{5/3}^{5/6} (|x| D[f])^{1/12}).
/// Throws DomainError if D[f] = 0 while the left side is not.
double coulomb_estimate_check(const RadialField& f, const std::vector<double>& x_list);

/// Uniform ball of radius R and charge q on a grid ending at R, so the
/// density is smooth on the grid and the exterior follows from Newton.
RadialField uniform_ball(double R, double q = 1.0, std::size_t count = 4000);

/// f(r) = sum_k c_k exp(-(r / w_k)^2), 1 to 4 terms, w_k in [0.2, 3],
/// c_k in [0.1, 1] (in [-1, 1] when `signed_weights`).
RadialField random_radial_density(const RadialGrid& grid, std::mt19937_64& rng, bool signed_weights = false);

struct BudgetCheck {
  bool hard_pass = false;  ///< N_max <= 2 Z + K
  double excess = 0.0;     ///< N_max - Z
  double bound = 0.0;      ///< 2 Z + K
};
BudgetCheck ionization_budget_check(double N_max, double Z, std::size_t K);

/// Least-squares fit of log sup_diff = c + alpha log Z + beta log r over a
/// table of (Z, r, sup_diff) with sup_diff > 0. Reported, not asserted.
struct ExponentFit {
  double alpha = 0.0;
  double beta = 0.0;
  double log_constant = 0.0;
  double reference_alpha = 49.0 / 36.0 - 1.0 / 198.0;
  double reference_beta = 1.0 / 12.0;
  std::size_t points = 0;
};
struct ExponentSample {
  double Z, r, sup_diff;
};
ExponentFit fit_initial_estimate_exponents(const std::vector<ExponentSample>& table);

} // namespace rhftf
