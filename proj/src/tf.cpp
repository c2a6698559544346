#include "rhftf/tf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rhftf/banded.hpp"
#include "rhftf/errors.hpp"

namespace rhftf {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double four_pi = 4.0 * pi;

// Below r_min the integrands behave like C r^p; integrate that piece in closed form.
double origin_piece(const RadialGrid& grid, std::span<const double> f) {
  const double f0 = f[0], f1 = f[1];
  const double r0 = grid.r(0);
  if (f0 == 0.0)
    return 0.0;
  double p = 0.0;
  if (f0 > 0.0 && f1 > 0.0)
    p = std::log(f1 / f0) / grid.step();
  else if (f0 < 0.0 && f1 < 0.0)
    p = std::log(f1 / f0) / grid.step();
  p = std::max(p, -0.9);
  return f0 * r0 / (p + 1.0);
}

double integrate_from_origin(const RadialGrid& grid, std::span<const double> f) {
  return grid.integrate(f) + origin_piece(grid, f);
}

// 4th-order first and second derivative stencils in t on a uniform grid,
// falling back to 2nd order next to the ends. Coefficients for nodes i-2..i+2.
struct Stencil {
  double d1[5];
  double d2[5];
};

Stencil interior_stencil(std::size_t i, std::size_t n, double h) {
  Stencil s{};
  if (i >= 2 && i + 2 < n) {
    const double a = 1.0 / (12.0 * h), b = 1.0 / (12.0 * h * h);
    const double d1[5] = {a, -8.0 * a, 0.0, 8.0 * a, -a};
    const double d2[5] = {-b, 16.0 * b, -30.0 * b, 16.0 * b, -b};
    std::copy(d1, d1 + 5, s.d1);
    std::copy(d2, d2 + 5, s.d2);
  } else {
    s.d1[1] = -0.5 / h;
    s.d1[3] = 0.5 / h;
    s.d2[1] = 1.0 / (h * h);
    s.d2[2] = -2.0 / (h * h);
    s.d2[3] = 1.0 / (h * h);
  }
  return s;
}

double apply_operator(const Stencil& s, std::span<const double> y, std::size_t i) {
  double acc = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double c = s.d2[k] - s.d1[k];
    if (c != 0.0)
      acc += c * y[i + k - 2];
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Radial nonlinear Poisson problem for w = r psi, psi = rho * |x|^{-1}:
//   w_tt - w_t = -4 pi r^3 rho,  rho = mask ([rV - w - mu r]_+ / (c r))^{3/2},
// with w_t = w at the inner end and w_t = 0 at the outer end.

struct RadialTFProblem {
  const RadialGrid* grid;
  std::vector<double> rv;
  std::vector<double> mask;

  double density(std::size_t i, double w, double mu) const {
    const double r = grid->r(i);
    const double s = rv[i] - w - mu * r;
    if (mask[i] == 0.0 || s <= 0.0)
      return 0.0;
    return mask[i] * std::pow(s / (tf_constant() * r), 1.5);
  }

  double density_derivative(std::size_t i, double w, double mu) const {
    const double r = grid->r(i);
    const double s = rv[i] - w - mu * r;
    if (mask[i] == 0.0 || s <= 0.0)
      return 0.0;
    const double c = tf_constant();
    return -mask[i] * 1.5 * std::sqrt(s / (c * r)) / (c * r);
  }
};

void radial_residual(const RadialTFProblem& p, double mu, std::span<const double> w, std::span<double> f) {
  const std::size_t n = w.size();
  const double h = p.grid->step();
  f[0] = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h) - w[0];
  f[n - 1] = (3.0 * w[n - 1] - 4.0 * w[n - 2] + w[n - 3]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double r = p.grid->r(i);
    f[i] = apply_operator(interior_stencil(i, n, h), w, i) + four_pi * r * r * r * p.density(i, w[i], mu);
  }
}

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

// Newton with backtracking on ||F||_2. `w` is the initial guess and the result.
int solve_radial_problem(const RadialTFProblem& p, double mu, std::vector<double>& w) {
  const std::size_t n = w.size();
  if (n < 5)
    throw DomainError("radial TF solve needs at least 5 nodes");
  const double h = p.grid->step();
  std::vector<double> f(n), trial(n), ftrial(n), delta(n);
  radial_residual(p, mu, w, f);
  double fnorm = l2(f);
  for (int it = 1; it <= 200; ++it) {
    linalg::BandedLU jac(n, 2, 2);
    jac.at(0, 0) = -1.5 / h - 1.0;
    jac.at(0, 1) = 2.0 / h;
    jac.at(0, 2) = -0.5 / h;
    jac.at(n - 1, n - 1) = 1.5 / h;
    jac.at(n - 1, n - 2) = -2.0 / h;
    jac.at(n - 1, n - 3) = 0.5 / h;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const auto s = interior_stencil(i, n, h);
      for (int k = 0; k < 5; ++k) {
        const double c = s.d2[k] - s.d1[k];
        if (c != 0.0)
          jac.at(i, i + k - 2) += c;
      }
      const double r = p.grid->r(i);
      jac.at(i, i) += four_pi * r * r * r * p.density_derivative(i, w[i], mu);
    }
    jac.factor();
    for (std::size_t i = 0; i < n; ++i)
      delta[i] = -f[i];
    jac.solve(delta);

    double lambda = 1.0;
    double tnorm = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < n; ++i)
        trial[i] = w[i] + lambda * delta[i];
      radial_residual(p, mu, trial, ftrial);
      tnorm = l2(ftrial);
      if (tnorm <= (1.0 - 1e-4 * lambda) * fnorm || fnorm == 0.0)
        break;
      lambda *= 0.5;
    }
    double step = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      step = std::max(step, std::abs(lambda * delta[i]));
      scale = std::max(scale, std::abs(w[i]));
    }
    w.swap(trial);
    f.swap(ftrial);
    fnorm = tnorm;
    if (step <= 1e-13 * scale)
      return it;
  }
  throw ConvergenceError("radial TF Newton iteration did not converge");
}

RadialField density_field(const RadialTFProblem& p, double mu, std::span<const double> w) {
  RadialField rho(*p.grid);
  for (std::size_t i = 0; i < rho.size(); ++i)
    rho[i] = p.density(i, w[i], mu);
  return rho;
}

// Bisection on mu in [lo, hi] for charge(mu) = target (charge decreasing in mu).
template <class Charge>
double bisect_mu(Charge&& charge, double lo, double hi, double target, double rtol, int max_steps) {
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < max_steps; ++it) {
    mid = 0.5 * (lo + hi);
    const double q = charge(mid);
    if (std::abs(q - target) <= rtol * target)
      return mid;
    if (q > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-16 * std::max(1.0, hi))
      return mid;
  }
  throw ConvergenceError("chemical potential bisection did not reach the charge target");
}

double kinetic_energy(const RadialField& rho) {
  std::vector<double> g(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double r = rho.grid.r(i);
    g[i] = four_pi * r * r * std::pow(std::max(rho[i], 0.0), 5.0 / 3.0);
  }
  return 0.6 * tf_constant() * integrate_from_origin(rho.grid, g);
}

} // namespace

double tf_constant() {
  static const double c = 0.5 * std::pow(3.0 * pi * pi, 2.0 / 3.0);
  return c;
}

double tf_length_scale(double Z) {
  if (!(Z > 0.0))
    throw DomainError("TF length scale needs Z > 0");
  return tf_constant() * std::pow(four_pi, -2.0 / 3.0) * std::cbrt(1.0 / Z);
}

double tf_density_from_potential(double phi_minus_mu) {
  if (!(phi_minus_mu > 0.0))
    return 0.0;
  return std::pow(phi_minus_mu / tf_constant(), 1.5);
}

UniversalTF solve_universal_tf(double log_step, double x_anchor, double x_lo, double x_hi) {
  if (!(log_step > 0.0) || !(x_anchor > 0.0) || !(x_lo > 0.0) || !(x_hi > x_lo))
    throw DomainError("universal TF grid: need h > 0 and 0 < x_lo < x_hi");
  const double h = log_step;
  const double ta = std::log(x_anchor);
  const double x_in = std::min(1e-12, x_lo);
  const double x_out = std::max(1e4, 100.0 * x_hi);
  const auto below = static_cast<std::size_t>(std::ceil((ta - std::log(x_in)) / h));
  const auto above = static_cast<std::size_t>(std::ceil((std::log(x_out) - ta) / h));
  const std::size_t m = below + above + 1;

  UniversalTF out;
  out.anchor_index = below;
  out.x.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    out.x[k] = std::exp(ta + h * (static_cast<double>(k) - static_cast<double>(below)));
  out.x[below] = x_anchor;
  const double X = out.x.back();

  // Initial guess with the right limits at both ends.
  auto& y = out.y;
  y.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    y[k] = std::pow(1.0 + std::pow(out.x[k] / 4.0, 0.772), -3.0 / 0.772);
  y.front() = 1.0;
  y.back() = 144.0 / (X * X * X);

  std::vector<double> x15(m);
  for (std::size_t k = 0; k < m; ++k)
    x15[k] = std::pow(out.x[k], 1.5);

  auto residual = [&](std::span<const double> v, std::span<double> f) {
    f[0] = 0.0;
    f[m - 1] = 0.0;
    for (std::size_t k = 1; k + 1 < m; ++k)
      f[k] = apply_operator(interior_stencil(k, m, h), v, k) - x15[k] * std::pow(std::max(v[k], 0.0), 1.5);
  };

  std::vector<double> f(m), trial(m), ftrial(m), delta(m);
  residual(y, f);
  double fnorm = l2(f);
  bool converged = false;
  for (int it = 1; it <= 200 && !converged; ++it) {
    linalg::BandedLU jac(m, 2, 2);
    jac.at(0, 0) = 1.0;
    jac.at(m - 1, m - 1) = 1.0;
    for (std::size_t k = 1; k + 1 < m; ++k) {
      const auto s = interior_stencil(k, m, h);
      for (int j = 0; j < 5; ++j) {
        const double c = s.d2[j] - s.d1[j];
        if (c != 0.0)
          jac.at(k, k + j - 2) += c;
      }
      jac.at(k, k) -= 1.5 * x15[k] * std::sqrt(std::max(y[k], 0.0));
    }
    jac.factor();
    for (std::size_t k = 0; k < m; ++k)
      delta[k] = -f[k];
    jac.solve(delta);

    double lambda = 1.0, tnorm = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t k = 0; k < m; ++k)
        trial[k] = y[k] + lambda * delta[k];
      residual(trial, ftrial);
      tnorm = l2(ftrial);
      if (tnorm <= (1.0 - 1e-4 * lambda) * fnorm || fnorm == 0.0)
        break;
      lambda *= 0.5;
    }
    double rel = 0.0, abs_step = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double d = std::abs(lambda * delta[k]);
      abs_step = std::max(abs_step, d);
      rel = std::max(rel, d / std::max(std::abs(trial[k]), 1e-300));
    }
    y.swap(trial);
    f.swap(ftrial);
    fnorm = tnorm;
    out.newton_iterations = it;
    converged = rel < 1e-11 || abs_step < 1e-16;
  }
  if (!converged)
    throw ConvergenceError("universal TF equation: Newton iteration did not converge");
  for (auto& v : y)
    v = std::max(v, 0.0);

  out.dy_dx.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    double yt;
    if (k >= 2 && k + 2 < m)
      yt = (y[k - 2] - 8.0 * y[k - 1] + 8.0 * y[k + 1] - y[k + 2]) / (12.0 * h);
    else if (k == 0)
      yt = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
    else if (k + 1 == m)
      yt = (3.0 * y[m - 1] - 4.0 * y[m - 2] + y[m - 3]) / (2.0 * h);
    else
      yt = (y[k + 1] - y[k - 1]) / (2.0 * h);
    out.dy_dx[k] = yt / out.x[k];
  }

  // y'(X) - y'(0) = int_0^X y^{3/2} x^{-1/2} dx; the piece below x_0 is 2 sqrt(x_0) since y ~ 1 there.
  std::vector<double> g(m);
  for (std::size_t k = 0; k < m; ++k)
    g[k] = std::sqrt(out.x[k]) * std::pow(y[k], 1.5);
  const double source = integrate_uniform(g, h) + 2.0 * std::sqrt(out.x.front());
  out.initial_slope = -432.0 / (X * X * X * X) - source;
  return out;
}

double tf_energy(const RadialField& rho, double Z) {
  std::vector<double> g(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i)
    g[i] = four_pi * rho.grid.r(i) * Z * std::max(rho[i], 0.0);
  return kinetic_energy(rho) - integrate_from_origin(rho.grid, g) + coulomb_energy(rho);
}

RadialField tf_potential(const RadialField& rho, double Z) {
  auto v = coulomb_potential_radial(rho);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = Z / rho.grid.r(i) - v[i];
  return v;
}

namespace {

TFSolutionAtom neutral_atom(double Z, const RadialGrid& grid) {
  const double b = tf_length_scale(Z);
  const auto uni = solve_universal_tf(grid.step(), grid.r_min() / b, grid.r_min() / b, grid.r_max() / b);
  const std::size_t n = grid.size();
  const std::size_t k0 = uni.anchor_index;
  if (k0 + n > uni.x.size())
    throw ConvergenceError("universal TF grid does not cover the radial grid");

  TFSolutionAtom s{Z, Z, RadialField(grid), RadialField(grid)};
  for (std::size_t i = 0; i < n; ++i) {
    s.phi[i] = Z * uni.y[k0 + i] / grid.r(i);
    s.rho[i] = tf_density_from_potential(s.phi[i]);
  }
  // Charge and shell potential beyond r_max, from the extended universal grid.
  const std::size_t last = k0 + n - 1;
  std::vector<double> q, v;
  for (std::size_t k = last; k < uni.x.size(); ++k) {
    const double r = b * uni.x[k];
    const double rho = tf_density_from_potential(Z * uni.y[k] / r);
    q.push_back(four_pi * r * r * r * rho);
    v.push_back(four_pi * r * r * rho);
  }
  const double h = grid.step();
  const double r_end = b * uni.x.back();
  const double rho_end = tf_density_from_potential(Z * uni.y.back() / r_end);
  s.tail_charge = integrate_uniform(q, h) + four_pi * rho_end * r_end * r_end * r_end / 3.0;
  s.tail_potential = integrate_uniform(v, h) + four_pi * rho_end * r_end * r_end / 4.0;

  s.mu = 0.0;
  s.initial_slope = uni.initial_slope;
  s.energy_from_slope = (3.0 / 7.0) * uni.initial_slope * Z * Z / b;
  s.energy = tf_energy(s.rho, Z);
  s.iterations = uni.newton_iterations;
  return s;
}

} // namespace

TFSolutionAtom tf_atom_solve(double Z, double N, const RadialGrid& grid, const TFAtomOptions& options) {
  if (!(Z > 0.0))
    throw DomainError("tf_atom_solve: Z must be positive");
  if (!(N > 0.0))
    throw DomainError("tf_atom_solve: N must be positive");
  if (N > Z * (1.0 + 1e-14))
    throw DomainError("tf_atom_solve: N > Z has no TF minimiser");
  auto neutral = neutral_atom(Z, grid);
  if (N >= Z)
    return neutral;

  const std::size_t n = grid.size();
  RadialTFProblem p{&grid, std::vector<double>(n, Z), std::vector<double>(n, 1.0)};
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = Z - grid.r(i) * neutral.phi[i];

  int newton_total = 0;
  auto charge = [&](double mu) {
    newton_total += solve_radial_problem(p, mu, w);
    return total_charge(density_field(p, mu, w));
  };
  const double q0 = charge(0.0);
  if (q0 < N)
    throw ConvergenceError("tf_atom_solve: grid holds only " + std::to_string(q0) +
                           " electrons at mu = 0; enlarge r_max");
  double hi = 0.1 * std::pow(Z, 4.0 / 3.0);
  for (int k = 0; charge(hi) >= N; ++k) {
    if (k > 60)
      throw ConvergenceError("tf_atom_solve: could not bracket the chemical potential");
    hi *= 2.0;
  }
  const double mu = bisect_mu(charge, 0.0, hi, N, options.charge_tolerance, options.max_bisections);
  solve_radial_problem(p, mu, w);

  TFSolutionAtom s{Z, N, RadialField(grid), density_field(p, mu, w)};
  for (std::size_t i = 0; i < n; ++i)
    s.phi[i] = (Z - w[i]) / grid.r(i);
  s.mu = mu;
  s.energy = tf_energy(s.rho, Z);
  s.iterations = newton_total;
  return s;
}

double tf_equation_residual(const TFSolutionAtom& s) {
  const auto v = coulomb_potential_radial(s.rho);
  const double c = tf_constant();
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double phi = s.Z / s.rho.grid.r(i) - v[i] - s.tail_potential;
    const double lhs = c * std::pow(std::max(s.rho[i], 0.0), 2.0 / 3.0);
    const double rhs = std::max(phi - s.mu, 0.0);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(phi), 1e-12));
  }
  return worst;
}

std::vector<double> radial_tf_residual(const RadialField& phi, double mu) {
  const auto& g = phi.grid;
  const std::size_t n = g.size();
  if (n < 7)
    throw DomainError("radial_tf_residual: needs at least 7 nodes");
  std::vector<double> w(n), out(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i)
    w[i] = g.r(i) * phi[i];
  const double h = g.step();
  // Sixth-order centred differences: the check wants ~1e-12, which the
  // solver's fourth-order stencil only reaches where round-off dominates.
  static constexpr double d1[7] = {-1, 9, -45, 0, 45, -9, 1};
  static constexpr double d2[7] = {2, -27, 270, -490, 270, -27, 2};
  for (std::size_t i = 3; i + 3 < n; ++i) {
    double wt = 0.0, wtt = 0.0;
    for (int k = 0; k < 7; ++k) {
      wt += d1[k] * w[i + k - 3];
      wtt += d2[k] * w[i + k - 3];
    }
    wt /= 60.0 * h;
    wtt /= 180.0 * h * h;
    const double r = g.r(i);
    // r^3 Delta phi = w_tt - w_t
    const double lhs = (wtt - wt) / (r * r * r);
    const double rhs = four_pi * tf_density_from_potential(phi[i] - mu);
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    out[i] = scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
  }
  return out;
}

RadialExteriorSolution tf_exterior_solve(const RadialExteriorProblem& problem, const ExteriorOptions& options) {
  const auto& grid = problem.potential.grid;
  const std::size_t n = grid.size();
  if (!(problem.r > 0.0))
    throw DomainError("exterior TF problem: r must be positive");
  if (!(problem.budget >= 0.0))
    throw DomainError("exterior TF problem: budget must be non-negative");
  RadialTFProblem p{&grid, std::vector<double>(n), std::vector<double>(n)};
  double sup_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = grid.r(i);
    const double v = problem.potential[i];
    if (!std::isfinite(v))
      throw DomainError("exterior TF problem: non-finite potential");
    if (s <= problem.r) {
      if (v != 0.0)
        throw DomainError("exterior TF problem: V_r must vanish for s <= r");
      continue;
    }
    p.mask[i] = 1.0;
    p.rv[i] = s * v;
    sup_v = std::max(sup_v, v);
  }

  RadialExteriorSolution out{RadialField(grid), RadialField(grid)};
  std::vector<double> w(n, 0.0);
  auto finish = [&](double mu) {
    out.mu = mu;
    out.rho = density_field(p, mu, w);
    out.charge = total_charge(out.rho);
    const auto psi = coulomb_potential_radial(out.rho);
    for (std::size_t i = 0; i < n; ++i)
      out.phi[i] = problem.potential[i] - psi[i];
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
      g[i] = four_pi * grid.r(i) * grid.r(i) * problem.potential[i] * out.rho[i];
    out.energy = kinetic_energy(out.rho) - grid.integrate(g) + coulomb_energy(out.rho);
    return out;
  };

  if (problem.budget == 0.0 || sup_v == 0.0) {
    // Nothing may (or wants to) bind: the minimal multiplier is [sup V_r]_+.
    return finish(problem.budget == 0.0 ? sup_v : 0.0);
  }
  solve_radial_problem(p, 0.0, w);
  const double q0 = total_charge(density_field(p, 0.0, w));
  if (q0 <= problem.budget * (1.0 + options.budget_tolerance))
    return finish(0.0);
  auto charge = [&](double mu) {
    solve_radial_problem(p, mu, w);
    return total_charge(density_field(p, mu, w));
  };
  const double mu = bisect_mu(charge, 0.0, sup_v, problem.budget, options.budget_tolerance, options.max_bisections);
  solve_radial_problem(p, mu, w);
  return finish(mu);
}

} // namespace rhftf
