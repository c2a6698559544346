#pragma once

#include <cstddef>
#include <vector>

#include "rhftf/geometry.hpp"
#include "rhftf/grid3d.hpp"
#include "rhftf/radial.hpp"

namespace rhftf {

/// c_TF = (3 pi^2)^{2/3} / 2, the constant in c_TF rho^{2/3} = [phi - mu]_+.
double tf_constant();

/// Length scale of the neutral atom: phi(r) = Z y(r / b) / r with
/// b = c_TF (4 pi)^{-2/3} Z^{-1/3}.
double tf_length_scale(double Z);

/// rho = ([phi - mu]_+ / c_TF)^{3/2}
double tf_density_from_potential(double phi_minus_mu);

/// Solution of y'' = y^{3/2} x^{-1/2}, y(0) = 1, y(inf) = 0, on a uniform
/// grid in ln x.
struct UniversalTF {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> dy_dx;
  double initial_slope = 0.0; ///< y'(0)
  std::size_t anchor_index = 0; ///< x[anchor_index] == x_anchor
  int newton_iterations = 0;
};

/// Solves the universal neutral-atom equation on nodes x_k = x_anchor exp((k - k_anchor) h)
/// covering at least [x_lo, x_hi]; the grid is extended to x <= 1e-12 and
/// x >= 1e4 internally so the boundary data y(0)=1 and y ~ 144/x^3 apply.
UniversalTF solve_universal_tf(double log_step, double x_anchor, double x_lo, double x_hi);

struct TFSolutionAtom {
  double Z = 0.0;
  double N = 0.0;
  RadialField phi;
  RadialField rho;
  double mu = 0.0;
  double energy = 0.0;            ///< functional evaluated on the grid
  double energy_from_slope = 0.0; ///< (3/7) y'(0) Z^{7/3} / b (neutral only)
  double initial_slope = 0.0;     ///< y'(0) (neutral only)
  double tail_charge = 0.0;       ///< charge beyond r_max (neutral only)
  double tail_potential = 0.0;    ///< int_{r_max}^inf 4 pi s rho(s) ds (neutral only)
  int iterations = 0;
};

struct TFAtomOptions {
  double charge_tolerance = 1e-10; ///< relative, ionic bisection on mu
  int max_bisections = 200;
};

/// Radial TF atom with N <= Z electrons. The neutral case goes through the
/// universal equation; the ionic case solves the radial nonlinear Poisson
/// problem at fixed mu and bisects mu > 0 until the charge equals N.
TFSolutionAtom tf_atom_solve(double Z, double N, const RadialGrid& grid, const TFAtomOptions& options = {});

/// (3/5) c_TF int rho^{5/3} - int V_Z rho + D[rho].
double tf_energy(const RadialField& rho, double Z);
double tf_energy(const ScalarField3D& rho, const NuclearConfiguration& config);

/// V_Z - rho * |x|^{-1}
RadialField tf_potential(const RadialField& rho, double Z);
ScalarField3D tf_potential(const ScalarField3D& rho, const NuclearConfiguration& config);

/// max over nodes of |c_TF rho^{2/3} - [phi_rec - mu]_+| / max(|phi_rec|, 1e-12) with
/// phi_rec = V_Z - rho * |x|^{-1} - tail_potential recomputed from rho.
double tf_equation_residual(const TFSolutionAtom& solution);

/// Pointwise relative residual of the radial TF equation
///   Delta phi = 4 pi ([phi - mu]_+ / c_TF)^{3/2}
/// for a given phi, with Delta phi from seven-point differences of r phi in
/// ln r: |lhs - rhs| / max(|lhs|, |rhs|). The three nodes at each end have no
/// centred stencil and are NaN.
std::vector<double> radial_tf_residual(const RadialField& phi, double mu);

struct TFSolutionMolecule {
  NuclearConfiguration config;
  ScalarField3D phi;       ///< V_Z + u at nodes
  ScalarField3D u;         ///< -rho * |x|^{-1}, bounded remainder
  ScalarField3D rho;
  double mu = 0.0;
  double energy = 0.0;     ///< electronic TF energy
  int iterations = 0;
  /// psi_j(s) = z_j / s - phi_atom(s) of the neutral radial atom at nucleus j.
  std::vector<RadialField> reference;
  /// u + sum_j psi_j(|x - R_j|) at nodes (smooth across the nuclei).
  ScalarField3D smooth;

  /// phi at an arbitrary point: V_Z and the radial references analytic, the
  /// smooth remainder interpolated.
  double potential_at(Vec3 x) const;
};

struct TFMoleculeOptions {
  enum class Method { Newton, DampedFixedPoint };
  Method method = Method::Newton;
  double mixing = 0.3;            ///< damped fixed point only
  double tolerance_scale = 1e-6;  ///< stop when sup |du| < tolerance_scale * Z^{4/3}
  int max_iterations = 200;
  int subcell_points = 4;         ///< per axis, for nodes near a nucleus
  double min_margin = 5.0;        ///< nucleus-to-boundary distance (Bohr)
};

TFSolutionMolecule tf_molecule_solve(const NuclearConfiguration& config, const CartesianGrid3D& grid,
                                     const TFMoleculeOptions& options = {});

/// max |c_TF rho^{2/3} - [phi - mu]_+| / max(|phi|, 1e-12) over nodes farther than 3h from every nucleus,
/// with phi = V_Z + u recomputed from rho by a Poisson solve.
double tf_equation_residual(const TFSolutionMolecule& solution);

// ---------------------------------------------------------------------------
// Exterior problem: minimise (3/5) c_TF int rho^{5/3} - int V_r rho + D[rho]
// over rho >= 0 supported in A_r with int rho <= budget.

struct RadialExteriorProblem {
  double r = 0.0;
  RadialField potential; ///< V_r; must vanish for s <= r
  double budget = 0.0;
};

struct ExteriorProblem3D {
  double r = 0.0;
  NuclearConfiguration config;
  ScalarField3D potential; ///< V_r; must vanish off A_r
  double budget = 0.0;
};

struct RadialExteriorSolution {
  RadialField rho;
  RadialField phi; ///< V_r - rho * |x|^{-1}
  double mu = 0.0;
  double charge = 0.0;
  double energy = 0.0;
};

struct ExteriorSolution3D {
  ScalarField3D rho;
  ScalarField3D phi;
  double mu = 0.0;
  double charge = 0.0;
  double energy = 0.0;
};

struct ExteriorOptions {
  double budget_tolerance = 1e-8; ///< relative tolerance on int rho = budget
  int max_bisections = 200;
};

RadialExteriorSolution tf_exterior_solve(const RadialExteriorProblem& problem, const ExteriorOptions& options = {});
ExteriorSolution3D tf_exterior_solve(const ExteriorProblem3D& problem, const ExteriorOptions& options = {});

} // namespace rhftf
