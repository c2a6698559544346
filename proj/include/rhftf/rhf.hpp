#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rhftf/radial.hpp"

namespace rhftf {

/// One (n, l) level of the spherical, spinless RHF atom.
struct Shell {
  int n = 0; ///< principal quantum number n = l + 1 + (radial index)
  int l = 0;
  double energy = 0.0;
  double occupation = 0.0;  ///< in [0, q(2l + 1)], q = SCFConfig::spin_degeneracy
  std::vector<double> u;    ///< radial orbital on the grid, int u^2 dr = 1
};

struct RHFAtomState {
  double Z = 0.0;
  double N = 0.0;
  std::vector<Shell> shells; ///< every computed level, occupied or not, by ascending energy
  RadialField rho;
  double fermi_mu = 0.0;      ///< highest occupied eigenvalue (-inf for N = 0)
  double energy = 0.0;        ///< sum occ eps - D[rho]
  double energy_direct = 0.0; ///< T - int Z rho / r + D[rho]
  double kinetic = 0.0;
  bool converged = false;
  bool unbound = false;       ///< the Fermi level sits above zero
  int iterations = 0;
  std::vector<double> trail;  ///< L1 density change per iteration

  explicit RHFAtomState(RadialGrid g) : rho(std::move(g)) {}
};

struct SCFConfig {
  RadialGrid grid = RadialGrid(1e-6, 60.0, 2000);
  int l_max = 2;
  int states_per_l = 3;
  double mixing = 0.3;
  double tolerance = 1e-9;  ///< L1 change of the density between iterations
  int max_iterations = 2000;
  /// Anderson acceleration depth (0: plain linear mixing). Fixed points are
  /// those of linear mixing.
  int anderson_depth = 5;
  /// Electrons per spatial orbital. 1 is the spinless model (0 <= gamma <= 1
  /// on L^2(R^3)); 2 is the spin-summed model whose semiclassical limit is TF
  /// with c_TF = (3 pi^2)^{2/3} / 2.
  int spin_degeneracy = 1;

  /// Throws DomainError on out-of-range fields.
  void validate() const;
};

/// V_eff = -Z/r + rho * |x|^{-1}.
RadialField mean_field_potential(const RadialField& rho, double Z);

struct RadialEigenpair {
  double energy = 0.0;
  std::vector<double> u; ///< int u^2 dr = 1, positive near the origin
};

/// k lowest eigenpairs of -u''/2 + [l(l+1)/(2r^2) + V_eff] u = eps u with
/// u = 0 beyond both grid ends (fourth-order differences in ln r).
/// `guesses` (optional) seed the eigenvalue brackets.
std::vector<RadialEigenpair> eigensolve_radial(const RadialField& v_eff, int l, std::size_t k,
                                               std::span<const double> guesses = {});

/// || H u - eps u ||_2 of an orbital in the discretisation used by eigensolve_radial.
double orbital_residual(const RadialField& v_eff, int l, const RadialEigenpair& pair);

/// Occupation-constrained SCF for the spherical, spinless RHF atom.
/// `initial` (optional) supplies a starting density on the same grid.
RHFAtomState scf_solve(double Z, double N, const SCFConfig& config, const RadialField* initial = nullptr);

/// Residual of the returned state: max over occupied shells of ||H_rho u - eps u||_2.
double scf_orbital_residual(const RHFAtomState& state, const SCFConfig& config);

struct ScanPoint {
  double N = 0.0;
  double box_energy = 0.0;   ///< energy of the converged confined state
  double energy = 0.0;       ///< min(box_energy, energy at N - dN): electrons may leave to infinity
  double fermi_mu = 0.0;
  bool converged = false;
  bool bound = false;        ///< fermi_mu <= 1e-6 and strict decrease of box_energy
  int iterations = 0;
};

struct ScanOptions {
  int stop_after_unbound = 3; ///< consecutive non-binding points before stopping
  int threads = 1;            ///< for multi-Z scans
};

struct IonizationScan {
  double Z = 0.0;
  double dN = 0.0;
  double N_max = 0.0;
  std::vector<ScanPoint> points;
};

/// Sweeps N = dN, 2 dN, ... up to 2Z + 1 (+ dN), warm-starting every point
/// from the previous density.
IonizationScan ionization_scan(double Z, double dN, const SCFConfig& config, const ScanOptions& options = {});

/// Independent scans for several charges, run on `options.threads` workers;
/// results are returned in input order.
std::vector<IonizationScan> ionization_scans(const std::vector<double>& charges, double dN, const SCFConfig& config,
                                             const ScanOptions& options = {});

} // namespace rhftf
