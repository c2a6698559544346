#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "rhftf/errors.hpp"
#include "rhftf/tf.hpp"

namespace rhftf {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

// External potential seen by each node. Nodes close to a nucleus carry a
// block of sub-cell samples so the density there is a cell average rather
// than a point value of a r^{-3/2} singularity.
struct NodePotential {
  std::vector<double> v;
  std::vector<double> mask;
  std::vector<int> block;    // -1 or index of the node's sample block
  std::vector<double> sub;   // blocks of `per` samples
  std::size_t per = 0;
};

inline double pow15(double s) { return s * std::sqrt(s); }

struct Pointwise {
  double rho = 0.0;
  double drho = 0.0;     // d rho / d u
  double kinetic = 0.0;  // (3/5) c rho^{5/3}
  double external = 0.0; // V rho
};

Pointwise evaluate(const NodePotential& p, std::size_t n, double u, double mu) {
  Pointwise out;
  if (p.mask[n] == 0.0)
    return out;
  const double c = tf_constant();
  auto add = [&](double v, double weight) {
    const double s = (v + u - mu) / c;
    if (s <= 0.0)
      return;
    const double rho = pow15(s);
    out.rho += weight * rho;
    out.drho += weight * 1.5 * std::sqrt(s) / c;
    out.kinetic += weight * 0.6 * c * rho * s;
    out.external += weight * v * rho;
  };
  if (p.block[n] < 0) {
    add(p.v[n], 1.0);
  } else {
    const double* s = p.sub.data() + static_cast<std::size_t>(p.block[n]) * p.per;
    const double w = 1.0 / static_cast<double>(p.per);
    for (std::size_t k = 0; k < p.per; ++k)
      add(s[k], w);
  }
  out.rho *= p.mask[n];
  out.drho *= p.mask[n];
  out.kinetic *= p.mask[n];
  out.external *= p.mask[n];
  return out;
}

bool on_outer_layer(const CartesianGrid3D& g, std::size_t n) {
  const std::size_t k = n % g.nz(), j = (n / g.nz()) % g.ny(), i = n / (g.nz() * g.ny());
  return g.on_boundary(i, j, k);
}

// The outer node layer carries Dirichlet data only; no density lives there.
void mask_boundary(const CartesianGrid3D& g, NodePotential& p) {
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t k = 0; k < g.nz(); ++k)
        if (g.on_boundary(i, j, k))
          p.mask[g.index(i, j, k)] = 0.0;
}

NodePotential nuclear_samples(const NuclearConfiguration& config, const CartesianGrid3D& g, int m) {
  NodePotential p;
  const std::size_t total = g.size();
  p.v.resize(total);
  p.mask.assign(total, 1.0);
  p.block.assign(total, -1);
  p.per = static_cast<std::size_t>(m) * m * m;
  const double h = g.spacing();
  for (std::size_t n = 0; n < total; ++n) {
    const Vec3 x = g.point(n);
    const double d = config.nearest_distance(x);
    if (d == 0.0)
      throw SingularPointError("tf_molecule_solve: a grid node coincides with a nucleus");
    p.v[n] = config.nuclear_potential(x);
    if (m <= 1 || d >= 2.0 * h)
      continue;
    p.block[n] = static_cast<int>(p.sub.size() / p.per);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) {
          const Vec3 off{h * ((a + 0.5) / m - 0.5), h * ((b + 0.5) / m - 0.5), h * ((c + 0.5) / m - 0.5)};
          Vec3 y = x + off;
          if (config.nearest_distance(y) < 1e-12 * h)
            y = y + Vec3{1e-6 * h, 0.0, 0.0};
          p.sub.push_back(config.nuclear_potential(y));
        }
  }
  mask_boundary(g, p);
  return p;
}

std::vector<double> densities(const NodePotential& p, std::span<const double> u, double mu) {
  std::vector<double> rho(u.size());
  for (std::size_t n = 0; n < u.size(); ++n)
    rho[n] = evaluate(p, n, u[n], mu).rho;
  return rho;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

double sup_abs(std::span<const double> a) {
  double s = 0.0;
  for (double v : a)
    s = std::max(s, std::abs(v));
  return s;
}

void zero_boundary(const CartesianGrid3D& g, std::span<double> v) {
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t k = 0; k < g.nz(); ++k)
        if (g.on_boundary(i, j, k))
          v[g.index(i, j, k)] = 0.0;
}

// u on the outer layer := -(monopole + dipole potential of rho). Returns the sup change.
double refresh_boundary(const CartesianGrid3D& g, std::span<const double> rho, std::span<double> u) {
  ScalarField3D r(g, std::vector<double>(rho.begin(), rho.end()));
  const auto b = multipole_boundary_values(r);
  double change = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t k = 0; k < g.nz(); ++k) {
        if (!g.on_boundary(i, j, k))
          continue;
        const std::size_t c = g.index(i, j, k);
        change = std::max(change, std::abs(u[c] + b[c]));
        u[c] = -b[c];
      }
  return change;
}

// F = Delta_h u - 4 pi rho(u) at interior nodes, zero on the boundary.
void residual(const DirichletPoisson& poisson, const NodePotential& p, double mu, std::span<const double> u,
              std::span<double> f) {
  poisson.apply_laplacian(u, f);
  const auto& g = poisson.grid();
  for (std::size_t i = 1; i + 1 < g.nx(); ++i)
    for (std::size_t j = 1; j + 1 < g.ny(); ++j)
      for (std::size_t k = 1; k + 1 < g.nz(); ++k) {
        const std::size_t c = g.index(i, j, k);
        f[c] -= four_pi * evaluate(p, c, u[c], mu).rho;
      }
}

// Preconditioned CG for (-Delta_h + 4 pi diag(d)) x = b with zero boundary data;
// the preconditioner is the exact inverse of -Delta_h.
void pcg(const DirichletPoisson& poisson, std::span<const double> d, std::span<const double> b, std::span<double> x,
         double rtol) {
  const auto& g = poisson.grid();
  const std::size_t n = g.size();
  std::vector<double> r(b.begin(), b.end()), z(n, 0.0), q(n), ap(n), neg(n);
  zero_boundary(g, r);
  std::fill(x.begin(), x.end(), 0.0);
  auto precondition = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t c = 0; c < n; ++c)
      neg[c] = -in[c];
    std::fill(out.begin(), out.end(), 0.0);
    poisson.solve(neg, out);
  };
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    poisson.apply_laplacian(in, out);
    for (std::size_t c = 0; c < n; ++c)
      out[c] = -out[c] + four_pi * d[c] * in[c];
    zero_boundary(g, out);
  };
  const double bnorm = std::sqrt(dot(r, r));
  if (bnorm == 0.0)
    return;
  precondition(r, z);
  std::vector<double> p(z);
  double rz = dot(r, z);
  for (int it = 0; it < 1000; ++it) {
    apply(p, ap);
    const double alpha = rz / dot(p, ap);
    for (std::size_t c = 0; c < n; ++c) {
      x[c] += alpha * p[c];
      r[c] -= alpha * ap[c];
    }
    if (std::sqrt(dot(r, r)) <= rtol * bnorm)
      return;
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t c = 0; c < n; ++c)
      p[c] = z[c] + beta * p[c];
  }
  throw ConvergenceError("TF Newton step: preconditioned CG did not converge");
}

struct SolveControl {
  TFMoleculeOptions::Method method = TFMoleculeOptions::Method::Newton;
  double mixing = 0.3;
  double tolerance = 1e-6;
  int max_iterations = 200;
};

// Solves Delta_h u = 4 pi rho(u) with multipole boundary data; `u` is the initial guess.
int solve_box(const DirichletPoisson& poisson, const NodePotential& p, double mu, std::vector<double>& u,
              const SolveControl& ctl) {
  const auto& g = poisson.grid();
  const std::size_t n = g.size();
  std::vector<double> f(n), delta(n), trial(n), ftrial(n), d(n), rho;

  if (ctl.method == TFMoleculeOptions::Method::DampedFixedPoint) {
    std::vector<double> target(n), rhs(n);
    for (int it = 1; it <= ctl.max_iterations; ++it) {
      rho = densities(p, u, mu);
      std::fill(target.begin(), target.end(), 0.0);
      refresh_boundary(g, rho, target);
      for (std::size_t c = 0; c < n; ++c)
        rhs[c] = four_pi * rho[c];
      poisson.solve(rhs, target);
      double change = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double next = (1.0 - ctl.mixing) * u[c] + ctl.mixing * target[c];
        change = std::max(change, std::abs(next - u[c]));
        u[c] = next;
      }
      if (!std::isfinite(change))
        throw ConvergenceError("TF fixed-point iteration diverged");
      if (change < ctl.tolerance)
        return it;
    }
    throw ConvergenceError("TF fixed-point iteration did not converge within the iteration budget");
  }

  // The boundary layer always carries the multipole data of rho(u), so F is a
  // function of the interior values alone. Its Jacobian is
  //   J = -(A - G W^T),  A = -Delta_h + 4 pi diag(rho'),
  // where column k of G is Delta_h of the k-th boundary pattern and row k of
  // W^T is the derivative of the k-th moment of rho (charge, dipole, second
  // moments). The rank-10 correction is handled by Sherman-Morrison-Woodbury
  // around the CG solve for A.
  constexpr int K = 10;
  const Vec3 center = 0.5 * (g.lower() + g.upper());
  const double dv = g.cell_volume();
  // Moment functions m_k(x) and boundary patterns phi_k(x): the boundary layer
  // holds -sum_k M_k phi_k with M_k = int m_k rho.
  auto moments = [](Vec3 x) {
    return std::array<double, K>{1.0, x.x, x.y, x.z, x.x * x.x, x.y * x.y, x.z * x.z, x.x * x.y, x.x * x.z, x.y * x.z};
  };
  auto patterns = [](Vec3 x) {
    const double r2 = dot(x, x), r = std::sqrt(r2), r3 = r2 * r, r5 = r3 * r2;
    return std::array<double, K>{1.0 / r,
                                 x.x / r3,
                                 x.y / r3,
                                 x.z / r3,
                                 (3.0 * x.x * x.x - r2) / (2.0 * r5),
                                 (3.0 * x.y * x.y - r2) / (2.0 * r5),
                                 (3.0 * x.z * x.z - r2) / (2.0 * r5),
                                 3.0 * x.x * x.y / r5,
                                 3.0 * x.x * x.z / r5,
                                 3.0 * x.y * x.z / r5};
  };
  std::vector<std::vector<double>> pattern_lap(K, std::vector<double>(n, 0.0));
  {
    std::vector<std::vector<double>> pattern(K, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < g.nx(); ++i)
      for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t l = 0; l < g.nz(); ++l) {
          if (!g.on_boundary(i, j, l))
            continue;
          const auto ph = patterns(g.point(i, j, l) - center);
          for (int k = 0; k < K; ++k)
            pattern[k][g.index(i, j, l)] = -ph[k];
        }
    for (int k = 0; k < K; ++k)
      poisson.apply_laplacian(pattern[k], pattern_lap[k]);
  }
  auto consistent_residual = [&](std::vector<double>& v, std::vector<double>& out) {
    refresh_boundary(g, densities(p, v, mu), v);
    residual(poisson, p, mu, v, out);
  };

  std::vector<double> y(n);
  std::vector<std::vector<double>> z(K, std::vector<double>(n));
  std::vector<std::array<double, K>> w(n);
  consistent_residual(u, f);
  double fnorm = std::sqrt(dot(f, f));
  for (int it = 1; it <= ctl.max_iterations; ++it) {
    for (std::size_t c = 0; c < n; ++c) {
      d[c] = evaluate(p, c, u[c], mu).drho;
      const auto m = moments(g.point(c) - center);
      for (int k = 0; k < K; ++k)
        w[c][k] = dv * d[c] * m[k];
    }
    pcg(poisson, d, f, y, 1e-9);
    for (int k = 0; k < K; ++k)
      pcg(poisson, d, pattern_lap[k], z[k], 1e-9);
    // S = I - W^T Z,  delta = y + Z S^{-1} W^T y
    std::array<std::array<double, K + 1>, K> s{};
    for (int a = 0; a < K; ++a) {
      for (int b = 0; b < K; ++b) {
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c)
          acc += w[c][a] * z[b][c];
        s[a][b] = (a == b ? 1.0 : 0.0) - acc;
      }
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c)
        acc += w[c][a] * y[c];
      s[a][K] = acc;
    }
    for (int col = 0; col < K; ++col) {
      int piv = col;
      for (int r = col + 1; r < K; ++r)
        if (std::abs(s[r][col]) > std::abs(s[piv][col]))
          piv = r;
      std::swap(s[col], s[piv]);
      if (s[col][col] == 0.0)
        throw ConvergenceError("TF Newton step: singular boundary coupling");
      for (int r = 0; r < K; ++r) {
        if (r == col)
          continue;
        const double m = s[r][col] / s[col][col];
        for (int k = col; k <= K; ++k)
          s[r][k] -= m * s[col][k];
      }
    }
    for (std::size_t c = 0; c < n; ++c) {
      double acc = y[c];
      for (int k = 0; k < K; ++k)
        acc += z[k][c] * s[k][K] / s[k][k];
      delta[c] = acc;
    }
    zero_boundary(g, delta);

    double lambda = 1.0, tnorm = fnorm;
    for (int ls = 0; ls < 30; ++ls) {
      for (std::size_t c = 0; c < n; ++c)
        trial[c] = u[c] + lambda * delta[c];
      consistent_residual(trial, ftrial);
      tnorm = std::sqrt(dot(ftrial, ftrial));
      if (tnorm <= (1.0 - 1e-4 * lambda) * fnorm || fnorm == 0.0)
        break;
      lambda *= 0.5;
    }
    const double step = lambda * sup_abs(delta);

    u.swap(trial);
    f.swap(ftrial);
    fnorm = tnorm;
    if (!std::isfinite(step))
      throw ConvergenceError("TF Newton iteration produced non-finite values");
    if (step < ctl.tolerance)
      return it;
  }
  throw ConvergenceError("TF Newton iteration did not converge within the iteration budget");
}

struct BoxEnergy {
  double kinetic = 0.0;
  double external = 0.0;
  double hartree = 0.0;
  double total() const { return kinetic - external + hartree; }
};

BoxEnergy box_energy(const CartesianGrid3D& g, const NodePotential& p, double mu, std::span<const double> u) {
  BoxEnergy e;
  const double dv = g.cell_volume();
  for (std::size_t c = 0; c < g.size(); ++c) {
    const auto q = evaluate(p, c, u[c], mu);
    e.kinetic += q.kinetic * dv;
    e.external += q.external * dv;
    e.hartree -= 0.5 * q.rho * u[c] * dv;
  }
  return e;
}

void check_margin(const NuclearConfiguration& config, const CartesianGrid3D& g, double margin) {
  const Vec3 lo = g.lower(), hi = g.upper();
  for (std::size_t j = 0; j < config.size(); ++j) {
    const Vec3 x = config.position(j);
    const double m = std::min({x.x - lo.x, x.y - lo.y, x.z - lo.z, hi.x - x.x, hi.y - x.y, hi.z - x.z});
    if (m < margin)
      throw DomainError("nucleus " + std::to_string(j) + " is closer than " + std::to_string(margin) +
                        " Bohr to the box boundary");
  }
}

// u_0 = -sum_j (rho_j * |x|^{-1})(x - R_j) from neutral radial TF atoms.
// Bounded parts z/s - phi_atom(s) of neutral radial atoms, one per nucleus.
std::vector<RadialField> reference_screening(const NuclearConfiguration& config, const CartesianGrid3D& g) {
  const double reach = 2.0 * norm(g.upper() - g.lower()) + 10.0;
  std::map<double, RadialField> atoms;
  std::vector<RadialField> out;
  for (double z : config.charges()) {
    if (!atoms.contains(z)) {
      const auto a = tf_atom_solve(z, z, RadialGrid(1e-6 / z, reach, 2000));
      RadialField psi(a.phi.grid);
      for (std::size_t i = 0; i < psi.size(); ++i)
        psi[i] = z / psi.grid.r(i) - a.phi[i];
      atoms.emplace(z, std::move(psi));
    }
    out.push_back(atoms.at(z));
  }
  return out;
}

// Superposition of the reference atoms: sum_j -psi_j(|x - R_j|).
double reference_u(const NuclearConfiguration& config, const std::vector<RadialField>& psi, Vec3 x) {
  double u = 0.0;
  for (std::size_t j = 0; j < config.size(); ++j) {
    const double r = distance(x, config.position(j));
    u -= r <= psi[j].grid.r_min() ? psi[j][0] : psi[j].at_radius(r);
  }
  return u;
}

} // namespace

double TFSolutionMolecule::potential_at(Vec3 x) const {
  // The r^{1/2} cusp of u at each nucleus is carried by the radial reference;
  // only the smooth remainder is interpolated.
  return config.nuclear_potential(x) + reference_u(config, reference, x) + smooth.interpolate(x);
}


TFSolutionMolecule tf_molecule_solve(const NuclearConfiguration& config, const CartesianGrid3D& grid,
                                     const TFMoleculeOptions& options) {
  check_margin(config, grid, options.min_margin);
  if (!(options.mixing > 0.0 && options.mixing <= 1.0))
    throw DomainError("tf_molecule_solve: mixing must lie in (0, 1]");
  const auto p = nuclear_samples(config, grid, options.subcell_points);
  DirichletPoisson poisson(grid);
  auto reference = reference_screening(config, grid);
  std::vector<double> u(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c)
    u[c] = reference_u(config, reference, grid.point(c));
  SolveControl ctl{options.method, options.mixing,
                   options.tolerance_scale * std::pow(config.total_charge(), 4.0 / 3.0), options.max_iterations};
  const int iterations = solve_box(poisson, p, 0.0, u, ctl);

  TFSolutionMolecule s{config, ScalarField3D(grid), ScalarField3D(grid, u),
                       ScalarField3D(grid, densities(p, u, 0.0)), 0.0, 0.0, 0,
                       std::move(reference), ScalarField3D(grid)};
  for (std::size_t c = 0; c < grid.size(); ++c) {
    s.phi[c] = p.v[c] + u[c];
    s.smooth[c] = u[c] - reference_u(config, s.reference, grid.point(c));
  }
  s.mu = 0.0;
  s.energy = box_energy(grid, p, 0.0, u).total();
  s.iterations = iterations;
  return s;
}

double tf_equation_residual(const TFSolutionMolecule& s) {
  PoissonOptions po;
  po.boundary_density_tolerance = 1.0; // the box solution is truncated by construction
  const auto psi = poisson_free_space_3d(s.rho, po);
  const auto& g = s.rho.grid;
  const double c = tf_constant();
  double worst = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Vec3 x = g.point(n);
    if (s.config.nearest_distance(x) <= 3.0 * g.spacing() || on_outer_layer(g, n))
      continue;
    const double phi = s.config.nuclear_potential(x) - psi[n];
    const double lhs = c * std::pow(std::max(s.rho[n], 0.0), 2.0 / 3.0);
    worst = std::max(worst, std::abs(lhs - std::max(phi - s.mu, 0.0)) / std::max(std::abs(phi), 1e-12));
  }
  return worst;
}

double tf_energy(const ScalarField3D& rho, const NuclearConfiguration& config) {
  const auto& g = rho.grid;
  const double c = tf_constant();
  double kinetic = 0.0, external = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double r = std::max(rho[n], 0.0);
    if (r == 0.0)
      continue;
    kinetic += 0.6 * c * std::pow(r, 5.0 / 3.0);
    external += config.nuclear_potential(g.point(n)) * r;
  }
  const double dv = g.cell_volume();
  PoissonOptions po;
  po.boundary_density_tolerance = 1.0;
  const auto psi = poisson_free_space_3d(rho, po);
  double hartree = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n)
    hartree += 0.5 * rho[n] * psi[n];
  return (kinetic - external + hartree) * dv;
}

ScalarField3D tf_potential(const ScalarField3D& rho, const NuclearConfiguration& config) {
  PoissonOptions po;
  po.boundary_density_tolerance = 1.0;
  auto phi = poisson_free_space_3d(rho, po);
  for (std::size_t n = 0; n < phi.size(); ++n)
    phi[n] = config.nuclear_potential(rho.grid.point(n)) - phi[n];
  return phi;
}

ExteriorSolution3D tf_exterior_solve(const ExteriorProblem3D& problem, const ExteriorOptions& options) {
  const auto& g = problem.potential.grid;
  if (!(problem.r > 0.0))
    throw DomainError("exterior TF problem: r must be positive");
  if (!(problem.budget >= 0.0))
    throw DomainError("exterior TF problem: budget must be non-negative");
  NodePotential p;
  p.v.assign(g.size(), 0.0);
  p.mask.assign(g.size(), 0.0);
  p.block.assign(g.size(), -1);
  double sup_v = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double v = problem.potential[n];
    if (!std::isfinite(v))
      throw DomainError("exterior TF problem: non-finite potential");
    if (!in_exterior_region(g.point(n), problem.r, problem.config)) {
      if (v != 0.0)
        throw DomainError("exterior TF problem: V_r must vanish off A_r");
      continue;
    }
    p.mask[n] = 1.0;
    p.v[n] = v;
    sup_v = std::max(sup_v, v);
  }
  mask_boundary(g, p);

  DirichletPoisson poisson(g);
  std::vector<double> u(g.size(), 0.0);
  SolveControl ctl;
  ctl.tolerance = 1e-10 * std::max(1.0, sup_v);
  ExteriorSolution3D out{ScalarField3D(g), ScalarField3D(g)};
  auto charge = [&](double mu) {
    solve_box(poisson, p, mu, u, ctl);
    return integrate(ScalarField3D(g, densities(p, u, mu)));
  };
  auto finish = [&](double mu) {
    out.mu = mu;
    out.rho.values = densities(p, u, mu);
    out.charge = integrate(out.rho);
    for (std::size_t n = 0; n < g.size(); ++n)
      out.phi[n] = p.v[n] + u[n];
    out.energy = box_energy(g, p, mu, u).total();
    return out;
  };
  if (problem.budget == 0.0 || sup_v == 0.0)
    return finish(problem.budget == 0.0 ? sup_v : 0.0);
  if (charge(0.0) <= problem.budget * (1.0 + options.budget_tolerance))
    return finish(0.0);
  double lo = 0.0, hi = sup_v, mu = 0.5 * sup_v;
  for (int it = 0;; ++it) {
    if (it >= options.max_bisections)
      throw ConvergenceError("exterior TF: chemical potential bisection did not converge");
    mu = 0.5 * (lo + hi);
    const double q = charge(mu);
    if (std::abs(q - problem.budget) <= options.budget_tolerance * problem.budget || hi - lo <= 1e-15 * hi)
      break;
    (q > problem.budget ? lo : hi) = mu;
  }
  return finish(mu);
}

} // namespace rhftf
