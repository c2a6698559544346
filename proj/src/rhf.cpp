#include "rhftf/rhf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "rhftf/banded.hpp"
#include "rhftf/errors.hpp"

namespace rhftf {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

// With t = ln r, u = r^{1/2} f and g = r f the radial equation becomes the
// symmetric problem C g = eps g with
//   C = R^{-1} (-f_tt / 2 + (l + 1/2)^2 / 2 + r^2 V) R^{-1},  R = diag(r).
// f_tt uses the five-point fourth-order stencil; g = 0 beyond the grid.
linalg::SymmetricBand radial_operator(const RadialGrid& grid, std::span<const double> v, int l, bool with_potential) {
  const std::size_t n = grid.size();
  const double h = grid.step();
  const double c0 = 30.0 / (24.0 * h * h);
  const double c1 = -16.0 / (24.0 * h * h);
  const double c2 = 1.0 / (24.0 * h * h);
  const double centrifugal = 0.5 * (l + 0.5) * (l + 0.5);
  linalg::SymmetricBand a;
  a.diag.resize(n);
  a.off.assign(2, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double r = grid.r(i);
    a.diag[i] = (c0 + centrifugal) / (r * r) + (with_potential ? v[i] : 0.0);
    if (i + 1 < n)
      a.off[0][i] = c1 / (r * grid.r(i + 1));
    if (i + 2 < n)
      a.off[1][i] = c2 / (r * grid.r(i + 2));
  }
  return a;
}

// g (Euclidean-normalised eigenvector) <-> u (int u^2 dr = 1).
std::vector<double> orbital_from_vector(const RadialGrid& grid, std::span<const double> v) {
  const double s = 1.0 / std::sqrt(grid.step());
  std::vector<double> u(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    u[i] = s * v[i] / std::sqrt(grid.r(i));
  return u;
}

std::vector<double> vector_from_orbital(const RadialGrid& grid, std::span<const double> u) {
  const double s = std::sqrt(grid.step());
  std::vector<double> g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    g[i] = s * u[i] * std::sqrt(grid.r(i));
  return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

struct Level {
  double energy;
  int l;
  int radial; // 0-based radial index within the l channel
};

// Aufbau filling with capacity q(2l+1); levels degenerate to within `tie` share the
// remaining electrons in proportion to their capacity.
std::vector<double> fill(const std::vector<Level>& levels, double N, double q, double& fermi) {
  std::vector<double> occ(levels.size(), 0.0);
  double remaining = N;
  fermi = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < levels.size() && remaining > 0.0) {
    const double tie = 1e-10 * std::max(1.0, std::abs(levels[i].energy));
    std::size_t j = i;
    double cap = 0.0;
    while (j < levels.size() && levels[j].energy - levels[i].energy <= tie) {
      cap += q * (2.0 * levels[j].l + 1.0);
      ++j;
    }
    const double take = std::min(remaining, cap);
    for (std::size_t k = i; k < j; ++k)
      occ[k] = take * q * (2.0 * levels[k].l + 1.0) / cap;
    // Snap the last group to exact capacities when it is (numerically) full.
    if (cap - take <= 1e-12 * cap)
      for (std::size_t k = i; k < j; ++k)
        occ[k] = q * (2.0 * levels[k].l + 1.0);
    remaining -= take;
    fermi = levels[j - 1].energy;
    i = j;
  }
  if (remaining > 1e-12 * std::max(1.0, N))
    throw DomainError("scf_solve: not enough levels for N electrons; raise l_max or states_per_l");
  return occ;
}

// Largest lambda shift so that sum_i clamp(y_i - lambda, 0, cap_i) = m.
std::vector<double> project_capped(std::span<const double> y, std::span<const double> cap, double m) {
  double lo = -1.0, hi = 1.0;
  auto total = [&](double lam) {
    double t = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      t += std::clamp(y[i] - lam, 0.0, cap[i]);
    return t;
  };
  while (total(lo) < m)
    lo = 2.0 * lo - 1.0;
  while (total(hi) > m)
    hi = 2.0 * hi + 1.0;
  for (int k = 0; k < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo)); ++k) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) > m ? lo : hi) = mid;
  }
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    x[i] = std::clamp(y[i] - 0.5 * (lo + hi), 0.0, cap[i]);
  return x;
}

// min c.x + x.J.x/2 over 0 <= x <= cap, sum x = m (J symmetric positive definite,
// dimension small). Projected gradient, then an exact solve on the free set.
std::vector<double> capped_qp(const std::vector<double>& J, std::span<const double> c, std::span<const double> cap,
                              double m, std::vector<double> x) {
  const std::size_t n = c.size();
  auto grad = [&](const std::vector<double>& v) {
    std::vector<double> g(c.begin(), c.end());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        g[i] += J[i * n + j] * v[j];
    return g;
  };
  double lmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      row += std::abs(J[i * n + j]);
    lmax = std::max(lmax, row);
  }
  const double step = 1.0 / std::max(lmax, 1e-300);
  for (int k = 0; k < 400; ++k) {
    const auto g = grad(x);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = x[i] - step * g[i];
    auto nx = project_capped(y, cap, m);
    double move = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      move = std::max(move, std::abs(nx[i] - x[i]));
    x = std::move(nx);
    if (move < 1e-15 * std::max(1.0, m))
      break;
  }
  // Polish: KKT system on the free set with the bounded entries held fixed.
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<std::size_t> free;
    double fixed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double tol = 1e-9 * std::max(1.0, cap[i]);
      if (x[i] > tol && x[i] < cap[i] - tol)
        free.push_back(i);
      else
        fixed += x[i] = (x[i] <= tol ? 0.0 : cap[i]);
    }
    const std::size_t f = free.size();
    if (f == 0)
      break;
    const std::size_t d = f + 1;
    std::vector<double> a(d * d, 0.0), b(d, 0.0);
    for (std::size_t r = 0; r < f; ++r) {
      b[r] = -c[free[r]];
      for (std::size_t j = 0; j < n; ++j)
        if (std::find(free.begin(), free.end(), j) == free.end())
          b[r] -= J[free[r] * n + j] * x[j];
      for (std::size_t q = 0; q < f; ++q)
        a[r * d + q] = J[free[r] * n + free[q]];
      a[r * d + f] = 1.0;
      a[f * d + r] = 1.0;
    }
    b[f] = m - fixed;
    // Gaussian elimination with partial pivoting.
    bool ok = true;
    for (std::size_t col = 0; col < d && ok; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < d; ++r)
        if (std::abs(a[r * d + col]) > std::abs(a[piv * d + col]))
          piv = r;
      for (std::size_t k = 0; k < d; ++k)
        std::swap(a[col * d + k], a[piv * d + k]);
      std::swap(b[col], b[piv]);
      if (a[col * d + col] == 0.0) {
        ok = false;
        break;
      }
      for (std::size_t r = col + 1; r < d; ++r) {
        const double mlt = a[r * d + col] / a[col * d + col];
        for (std::size_t k = col; k < d; ++k)
          a[r * d + k] -= mlt * a[col * d + k];
        b[r] -= mlt * b[col];
      }
    }
    if (!ok)
      break;
    for (std::size_t col = d; col-- > 0;) {
      for (std::size_t k = col + 1; k < d; ++k)
        b[col] -= a[col * d + k] * b[k];
      b[col] /= a[col * d + col];
    }
    bool inside = true;
    for (std::size_t r = 0; r < f; ++r)
      inside = inside && b[r] >= 0.0 && b[r] <= cap[free[r]];
    if (!inside) {
      // Fall back to the projected-gradient point, clipped onto the constraint.
      break;
    }
    for (std::size_t r = 0; r < f; ++r)
      x[free[r]] = b[r];
    // Check the multipliers of the bounded entries; release violators.
    const auto g = grad(x);
    const double lambda = -b[f];
    bool kkt = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(free.begin(), free.end(), i) != free.end())
        continue;
      if ((x[i] == 0.0 && g[i] < lambda - 1e-12) || (x[i] == cap[i] && g[i] > lambda + 1e-12))
        kkt = false;
    }
    if (kkt)
      break;
  }
  return x;
}

struct Channel {
  std::vector<RadialEigenpair> pairs;
};

struct Iterate {
  std::vector<Level> levels;
  std::vector<Channel> channels;
  std::vector<double> occ;
  double fermi = 0.0;
  RadialField rho_out;
};

const std::vector<double>& orbital(const Iterate& it, std::size_t s) {
  return it.channels[it.levels[s].l].pairs[it.levels[s].radial].u;
}

// Aufbau alone flips integer occupations between near-degenerate levels at the
// Fermi energy. With the orbitals frozen, the occupations of the levels inside
// a window around the Fermi level are chosen to minimise the energy instead
// (a small convex QP). At a non-degenerate self-consistent point this returns
// the aufbau filling; at a degenerate one the fractional shells share one eigenvalue.
void refine_fermi_window(Iterate& it, const RadialField& v, double Z, double N, double q) {
  if (N <= 0.0)
    return;
  const auto& grid = v.grid;
  const double w = 0.05 + 0.02 * std::abs(it.fermi);
  std::vector<std::size_t> win;
  RadialField fixed(grid);
  double fixed_charge = 0.0;
  for (std::size_t s = 0; s < it.levels.size(); ++s) {
    if (std::abs(it.levels[s].energy - it.fermi) <= w) {
      win.push_back(s);
    } else if (it.occ[s] > 0.0) {
      const auto& u = orbital(it, s);
      for (std::size_t i = 0; i < grid.size(); ++i)
        fixed[i] += it.occ[s] * u[i] * u[i] / (four_pi * grid.r(i) * grid.r(i));
      fixed_charge += it.occ[s];
    }
  }
  if (win.size() < 2)
    return;
  const std::size_t n = win.size();
  std::vector<RadialField> dens;
  dens.reserve(n);
  std::vector<double> c(n), cap(n), x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& u = orbital(it, win[k]);
    RadialField d(grid);
    std::vector<double> vh(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      d[i] = u[i] * u[i] / (four_pi * grid.r(i) * grid.r(i));
      vh[i] = four_pi * grid.r(i) * grid.r(i) * d[i] * (v[i] + Z / grid.r(i));
    }
    // <u|h0|u> = eps - <u|V_H[rho_in]|u>, plus the interaction with the frozen part.
    c[k] = it.levels[win[k]].energy - grid.integrate(vh) + 2.0 * coulomb_pairing(fixed, d);
    cap[k] = q * (2.0 * it.levels[win[k]].l + 1.0);
    x[k] = it.occ[win[k]];
    dens.push_back(std::move(d));
  }
  std::vector<double> J(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b)
      J[a * n + b] = J[b * n + a] = 2.0 * coulomb_pairing(dens[a], dens[b]);
  x = capped_qp(J, c, cap, N - fixed_charge, std::move(x));
  double fermi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k)
    it.occ[win[k]] = x[k];
  for (std::size_t s = 0; s < it.levels.size(); ++s)
    if (it.occ[s] > 1e-12)
      fermi = std::max(fermi, it.levels[s].energy);
  it.fermi = fermi;
}

Iterate diagonalize_and_fill(const RadialField& v, double Z, double N, const SCFConfig& cfg, const Iterate* previous) {
  Iterate it{{}, {}, {}, 0.0, RadialField(v.grid)};
  it.channels.resize(cfg.l_max + 1);
  for (int l = 0; l <= cfg.l_max; ++l) {
    std::vector<double> guesses;
    if (previous && previous->channels.size() == it.channels.size())
      for (const auto& p : previous->channels[l].pairs)
        guesses.push_back(p.energy);
    it.channels[l].pairs = eigensolve_radial(v, l, static_cast<std::size_t>(cfg.states_per_l), guesses);
    for (int k = 0; k < cfg.states_per_l; ++k)
      it.levels.push_back({it.channels[l].pairs[k].energy, l, k});
  }
  std::stable_sort(it.levels.begin(), it.levels.end(),
                   [](const Level& a, const Level& b) { return a.energy < b.energy; });
  it.occ = fill(it.levels, N, cfg.spin_degeneracy, it.fermi);
  const auto& grid = v.grid;
  refine_fermi_window(it, v, Z, N, cfg.spin_degeneracy);
  for (std::size_t s = 0; s < it.levels.size(); ++s) {
    if (it.occ[s] == 0.0)
      continue;
    const auto& u = it.channels[it.levels[s].l].pairs[it.levels[s].radial].u;
    for (std::size_t i = 0; i < grid.size(); ++i)
      it.rho_out[i] += it.occ[s] * u[i] * u[i] / (four_pi * grid.r(i) * grid.r(i));
  }
  return it;
}

double l1_distance(const RadialField& a, const RadialField& b) {
  std::vector<double> g(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    g[i] = four_pi * a.grid.r(i) * a.grid.r(i) * std::abs(a[i] - b[i]);
  return a.grid.integrate(g);
}

double weighted_dot(const RadialGrid& grid, std::span<const double> a, std::span<const double> b) {
  std::vector<double> g(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    g[i] = four_pi * grid.r(i) * grid.r(i) * a[i] * b[i];
  return grid.integrate(g);
}

// Anderson (type II) update from the histories of inputs and residuals.
std::vector<double> anderson(const RadialGrid& grid, const std::vector<std::vector<double>>& x,
                             const std::vector<std::vector<double>>& f, double alpha) {
  const std::size_t m = x.size();
  const std::size_t n = x.back().size();
  // Minimise || f_m + sum_k c_k (f_k - f_m) || over c (k < m).
  const std::size_t q = m - 1;
  std::vector<std::vector<double>> df(q, std::vector<double>(n));
  for (std::size_t k = 0; k < q; ++k)
    for (std::size_t i = 0; i < n; ++i)
      df[k][i] = f[k][i] - f.back()[i];
  std::vector<double> a(q * q), b(q);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t c = 0; c < q; ++c)
      a[r * q + c] = weighted_dot(grid, df[r], df[c]);
    b[r] = -weighted_dot(grid, df[r], f.back());
    a[r * q + r] *= 1.0 + 1e-10;
  }
  // Gaussian elimination with partial pivoting (q is tiny).
  std::vector<double> c(b);
  for (std::size_t col = 0; col < q; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < q; ++r)
      if (std::abs(a[r * q + col]) > std::abs(a[piv * q + col]))
        piv = r;
    for (std::size_t k = 0; k < q; ++k)
      std::swap(a[col * q + k], a[piv * q + k]);
    std::swap(c[col], c[piv]);
    if (a[col * q + col] == 0.0)
      return {};
    for (std::size_t r = col + 1; r < q; ++r) {
      const double mlt = a[r * q + col] / a[col * q + col];
      for (std::size_t k = col; k < q; ++k)
        a[r * q + k] -= mlt * a[col * q + k];
      c[r] -= mlt * c[col];
    }
  }
  for (std::size_t col = q; col-- > 0;) {
    for (std::size_t k = col + 1; k < q; ++k)
      c[col] -= a[col * q + k] * c[k];
    c[col] /= a[col * q + col];
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double xi = x.back()[i] + alpha * f.back()[i];
    for (std::size_t k = 0; k < q; ++k)
      xi += c[k] * ((x[k][i] - x.back()[i]) + alpha * (f[k][i] - f.back()[i]));
    out[i] = std::max(xi, 0.0);
  }
  return out;
}

} // namespace

void SCFConfig::validate() const {
  if (l_max < 0)
    throw DomainError("SCF config: l_max must be >= 0");
  if (states_per_l < 1)
    throw DomainError("SCF config: states_per_l must be >= 1");
  if (!(mixing > 0.0 && mixing <= 1.0))
    throw DomainError("SCF config: mixing must lie in (0, 1]");
  if (!(tolerance > 0.0))
    throw DomainError("SCF config: tolerance must be positive");
  if (max_iterations < 1)
    throw DomainError("SCF config: max_iterations must be >= 1");
  if (anderson_depth < 0)
    throw DomainError("SCF config: anderson_depth must be >= 0");
  if (spin_degeneracy != 1 && spin_degeneracy != 2)
    throw DomainError("SCF config: spin_degeneracy must be 1 or 2");
}

RadialField mean_field_potential(const RadialField& rho, double Z) {
  auto v = coulomb_potential_radial(rho);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] -= Z / rho.grid.r(i);
  return v;
}

std::vector<RadialEigenpair> eigensolve_radial(const RadialField& v_eff, int l, std::size_t k,
                                               std::span<const double> guesses) {
  if (l < 0)
    throw DomainError("eigensolve_radial: l must be >= 0");
  if (k < 1)
    throw DomainError("eigensolve_radial: k must be >= 1");
  const auto& grid = v_eff.grid;
  if (grid.size() < 16 || 8 * k > grid.size())
    throw DomainError("eigensolve_radial: grid too coarse for the requested number of states");
  const auto a = radial_operator(grid, v_eff.values, l, true);
  const auto pairs = linalg::lowest_eigenpairs(a, k, guesses);
  std::vector<RadialEigenpair> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    out[j].energy = pairs[j].value;
    out[j].u = orbital_from_vector(grid, pairs[j].vector);
  }
  return out;
}

double orbital_residual(const RadialField& v_eff, int l, const RadialEigenpair& pair) {
  const auto& grid = v_eff.grid;
  const auto a = radial_operator(grid, v_eff.values, l, true);
  const auto g = vector_from_orbital(grid, pair.u);
  std::vector<double> cg(g.size());
  a.multiply(g, cg);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = cg[i] - pair.energy * g[i];
    s += d * d;
  }
  // g carries the factor sqrt(h): this is sqrt(int |H u - eps u|^2 dt) in the g variable.
  return std::sqrt(s / dot(g, g));
}

RHFAtomState scf_solve(double Z, double N, const SCFConfig& cfg, const RadialField* initial) {
  cfg.validate();
  if (!(Z >= 0.0))
    throw DomainError("scf_solve: Z must be >= 0");
  if (!(N >= 0.0))
    throw DomainError("scf_solve: N must be >= 0");
  const auto& grid = cfg.grid;
  RHFAtomState st(grid);
  st.Z = Z;
  st.N = N;

  RadialField rho_in(grid);
  if (initial) {
    if (!initial->grid.same_as(grid))
      throw GridMismatchError("scf_solve: initial density lives on a different grid");
    rho_in = *initial;
  }

  std::vector<std::vector<double>> hx, hf;
  Iterate it{{}, {}, {}, 0.0, RadialField(grid)};
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    const auto v = mean_field_potential(rho_in, Z);
    it = diagonalize_and_fill(v, Z, N, cfg, iter > 1 ? &it : nullptr);
    const double change = l1_distance(it.rho_out, rho_in);
    st.trail.push_back(change);
    st.iterations = iter;
    if (change < cfg.tolerance || N == 0.0) {
      st.converged = true;
      break;
    }
    std::vector<double> resid(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      resid[i] = it.rho_out[i] - rho_in[i];
    if (cfg.anderson_depth > 0) {
      hx.push_back(rho_in.values);
      hf.push_back(resid);
      if (hx.size() > static_cast<std::size_t>(cfg.anderson_depth) + 1) {
        hx.erase(hx.begin());
        hf.erase(hf.begin());
      }
    }
    std::vector<double> next;
    if (hx.size() >= 2)
      next = anderson(grid, hx, hf, cfg.mixing);
    if (next.empty()) {
      next.resize(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i)
        next[i] = rho_in[i] + cfg.mixing * resid[i];
    }
    rho_in.values = std::move(next);
  }

  // Report the state built from the last diagonalisation.
  const auto v_in = mean_field_potential(rho_in, Z);
  st.rho = it.rho_out;
  st.fermi_mu = it.fermi;
  st.unbound = it.fermi > 0.0;
  double band = 0.0, kinetic = 0.0;
  for (std::size_t s = 0; s < it.levels.size(); ++s) {
    const auto& lv = it.levels[s];
    const auto& pair = it.channels[lv.l].pairs[lv.radial];
    Shell sh;
    sh.l = lv.l;
    sh.n = lv.l + 1 + lv.radial;
    sh.energy = lv.energy;
    sh.occupation = it.occ[s];
    sh.u = pair.u;
    if (sh.occupation > 0.0) {
      band += sh.occupation * sh.energy;
      // Kinetic part of the discrete operator, applied directly.
      const auto t = radial_operator(grid, v_in.values, lv.l, false);
      const auto g = vector_from_orbital(grid, pair.u);
      std::vector<double> tg(g.size());
      t.multiply(g, tg);
      kinetic += sh.occupation * dot(g, tg);
    }
    st.shells.push_back(std::move(sh));
  }
  const double hartree = coulomb_energy(st.rho);
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    g[i] = four_pi * grid.r(i) * Z * st.rho[i];
  const double nuclear = grid.integrate(g);
  st.kinetic = kinetic;
  st.energy = band - hartree;
  st.energy_direct = kinetic - nuclear + hartree;
  return st;
}

double scf_orbital_residual(const RHFAtomState& st, const SCFConfig& cfg) {
  const auto v = mean_field_potential(st.rho, st.Z);
  (void)cfg;
  double worst = 0.0;
  for (const auto& sh : st.shells) {
    if (sh.occupation <= 0.0)
      continue;
    worst = std::max(worst, orbital_residual(v, sh.l, RadialEigenpair{sh.energy, sh.u}));
  }
  return worst;
}

IonizationScan ionization_scan(double Z, double dN, const SCFConfig& cfg, const ScanOptions& options) {
  if (!(dN > 0.0 && dN <= 0.5))
    throw DomainError("ionization_scan: dN must lie in (0, 0.5]");
  if (!(Z >= 0.0))
    throw DomainError("ionization_scan: Z must be >= 0");
  IonizationScan scan;
  scan.Z = Z;
  scan.dN = dN;
  scan.N_max = 0.0;
  const double cap = 2.0 * Z + 1.0 + dN;
  double previous = 0.0; // E(0) = 0
  double envelope = 0.0;
  int unbound_run = 0;
  bool binding = true;
  RadialField warm(cfg.grid);
  for (int k = 1;; ++k) {
    const double N = dN * k;
    if (N > cap + 1e-12)
      break;
    const auto st = scf_solve(Z, N, cfg, &warm);
    warm = st.rho;
    ScanPoint p;
    p.N = N;
    p.box_energy = st.energy;
    p.fermi_mu = st.fermi_mu;
    p.converged = st.converged;
    p.iterations = st.iterations;
    p.bound = st.converged && st.fermi_mu <= 1e-6 && st.energy < previous - 1e-9;
    envelope = std::min(st.energy, envelope);
    p.energy = envelope;
    previous = st.energy;
    // N_max: end of the initial run of binding points.
    if (binding && p.bound)
      scan.N_max = N;
    else
      binding = false;
    scan.points.push_back(p);
    unbound_run = p.bound ? 0 : unbound_run + 1;
    if (unbound_run >= options.stop_after_unbound)
      break;
  }
  return scan;
}

std::vector<IonizationScan> ionization_scans(const std::vector<double>& charges, double dN, const SCFConfig& cfg,
                                             const ScanOptions& options) {
  std::vector<IonizationScan> out(charges.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(options.threads, charges.size()));
  std::size_t next = 0;
  std::mutex lock;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      std::size_t job;
      {
        std::lock_guard g(lock);
        if (next >= charges.size() || failure)
          return;
        job = next++;
      }
      try {
        out[job] = ionization_scan(charges[job], dN, cfg, options);
      } catch (...) {
        std::lock_guard g(lock);
        failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(work);
    for (auto& t : pool)
      t.join();
  }
  if (failure)
    std::rethrow_exception(failure);
  return out;
}

} // namespace rhftf
