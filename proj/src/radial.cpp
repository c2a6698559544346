#include "rhftf/radial.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "rhftf/errors.hpp"

namespace rhftf {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

// Integral of g over segment [t_i, t_{i+1}] from a cubic through four
// neighbouring nodes (one-sided at the ends). Coefficients are in units of h/24.
struct SegmentStencil {
  std::size_t first;
  double c[4];
};

SegmentStencil segment_stencil(std::size_t i, std::size_t n) {
  if (i == 0)
    return {0, {9.0, 19.0, -5.0, 1.0}};
  if (i + 2 >= n)
    return {n - 4, {1.0, -5.0, 19.0, 9.0}};
  return {i - 1, {-1.0, 13.0, 13.0, -1.0}};
}

double segment_integral(std::span<const double> g, std::size_t i, double h) {
  const std::size_t n = g.size();
  if (n < 4)
    return 0.5 * h * (g[i] + g[i + 1]);
  const auto s = segment_stencil(i, n);
  double acc = 0.0;
  for (int k = 0; k < 4; ++k)
    acc += s.c[k] * g[s.first + k];
  return acc * h / 24.0;
}

} // namespace

RadialGrid::RadialGrid(double r_min, double r_max, std::size_t count) {
  if (count < 2)
    throw DomainError("radial grid needs at least 2 nodes");
  if (!(r_min > 0.0) || !(r_max > r_min) || !std::isfinite(r_max))
    throw DomainError("radial grid needs 0 < r_min < r_max");
  h_ = std::log(r_max / r_min) / static_cast<double>(count - 1);
  r_.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    r_[i] = r_min * std::exp(h_ * static_cast<double>(i));
  r_.back() = r_max;

  // Quadrature weights in r: w_i = r_i * (t-weight)_i.
  w_.assign(count, 0.0);
  for (std::size_t i = 0; i + 1 < count; ++i) {
    if (count < 4) {
      w_[i] += 0.5 * h_;
      w_[i + 1] += 0.5 * h_;
      continue;
    }
    const auto s = segment_stencil(i, count);
    for (int k = 0; k < 4; ++k)
      w_[s.first + k] += s.c[k] * h_ / 24.0;
  }
  for (std::size_t i = 0; i < count; ++i)
    w_[i] *= r_[i];
}

RadialGrid RadialGrid::for_charge(double Z, double r_max, std::size_t count) {
  const double z = Z > 0.0 ? Z : 1.0;
  return RadialGrid(1e-6 / z, r_max, count);
}

double RadialGrid::integrate(std::span<const double> f) const {
  if (f.size() != r_.size())
    throw GridMismatchError("integrand length does not match the radial grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    acc += w_[i] * f[i];
  return acc;
}

std::vector<double> RadialGrid::cumulative(std::span<const double> f) const {
  if (f.size() != r_.size())
    throw GridMismatchError("integrand length does not match the radial grid");
  std::vector<double> g(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    g[i] = f[i] * r_[i];
  std::vector<double> c(f.size(), 0.0);
  for (std::size_t i = 0; i + 1 < f.size(); ++i)
    c[i + 1] = c[i] + segment_integral(g, i, h_);
  return c;
}

std::size_t RadialGrid::locate(double r) const {
  if (r <= r_.front())
    return 0;
  const double t = std::log(r / r_.front()) / h_;
  auto i = static_cast<std::size_t>(std::max(0.0, std::floor(t)));
  i = std::min(i, r_.size() - 2);
  // Guard against round-off at node boundaries.
  while (i > 0 && r_[i] > r)
    --i;
  while (i + 2 < r_.size() && r_[i + 1] <= r)
    ++i;
  return i;
}

double RadialGrid::interpolate(std::span<const double> values, double r) const {
  if (values.size() != r_.size())
    throw GridMismatchError("field length does not match the radial grid");
  if (r <= r_.front())
    return values.front();
  if (r >= r_.back())
    return values.back();
  const std::size_t n = r_.size();
  if (n < 4) {
    const std::size_t i = locate(r);
    const double s = std::log(r / r_[i]) / h_;
    return (1.0 - s) * values[i] + s * values[i + 1];
  }
  const std::size_t i = locate(r);
  const std::size_t first = std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, n - 4);
  const double t = std::log(r / r_[first]) / h_; // position in units of h from node `first`
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    double l = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a)
        l *= (t - b) / static_cast<double>(a - b);
    acc += l * values[first + a];
  }
  return acc;
}

bool RadialGrid::same_as(const RadialGrid& other) const {
  return r_.size() == other.r_.size() && r_.front() == other.r_.front() &&
         r_.back() == other.r_.back();
}

double integrate_uniform(std::span<const double> g, double h) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i)
    acc += segment_integral(g, i, h);
  return acc;
}

RadialField::RadialField(RadialGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size())
    throw GridMismatchError("radial field length does not match its grid");
}

std::vector<double> enclosed_charge(const RadialField& rho) {
  const auto& grid = rho.grid;
  std::vector<double> density(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double r = grid.r(i);
    density[i] = four_pi * r * r * std::max(rho[i], 0.0);
  }
  auto q = grid.cumulative(density);
  const double r0 = grid.r_min();
  const double inner = four_pi * r0 * r0 * r0 * std::max(rho[0], 0.0) / 3.0;
  for (auto& v : q)
    v += inner;
  return q;
}

double total_charge(const RadialField& f) {
  std::vector<double> g(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    g[i] = four_pi * f.grid.r(i) * f.grid.r(i) * f[i];
  const double r0 = f.grid.r_min();
  return f.grid.integrate(g) + four_pi * r0 * r0 * r0 * f[0] / 3.0;
}

double charge_within(const RadialField& rho, double r) {
  const auto q = enclosed_charge(rho);
  if (r <= rho.grid.r_min()) {
    const double r0 = rho.grid.r_min();
    return q.front() * (r / r0) * (r / r0) * (r / r0);
  }
  return rho.grid.interpolate(q, r);
}

RadialField coulomb_potential_radial(const RadialField& rho) {
  const auto& grid = rho.grid;
  const std::size_t n = grid.size();
  if (n < 2)
    throw DomainError("radial grid too coarse for the Coulomb convolution");
  const auto q = enclosed_charge(rho);
  std::vector<double> shell(n);
  for (std::size_t i = 0; i < n; ++i)
    shell[i] = four_pi * grid.r(i) * std::max(rho[i], 0.0);
  const auto outer = grid.cumulative(shell);
  RadialField v(grid);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = q[i] / grid.r(i) + (outer.back() - outer[i]);
  return v;
}

double coulomb_pairing(const RadialField& f, const RadialField& g) {
  if (!f.grid.same_as(g.grid))
    throw GridMismatchError("Coulomb pairing of fields on different grids");
  auto signed_charge = [](const RadialField& a) {
    std::vector<double> dens(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      dens[i] = four_pi * a.grid.r(i) * a.grid.r(i) * a[i];
    auto q = a.grid.cumulative(dens);
    const double r0 = a.grid.r_min();
    const double inner = four_pi * r0 * r0 * r0 * a[0] / 3.0;
    for (auto& v : q)
      v += inner;
    return q;
  };
  const auto qf = signed_charge(f);
  const auto qg = signed_charge(g);
  const auto& grid = f.grid;
  std::vector<double> integrand(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    integrand[i] = qf[i] * qg[i] / (grid.r(i) * grid.r(i));
  // Below r_min: Q ~ r^3, so the integrand ~ r^4 -> contributes r0 * (...) / 5.
  const double inner = integrand.front() * grid.r_min() / 5.0;
  // Beyond r_max: no charge, Q constant.
  const double outer = qf.back() * qg.back() / grid.r_max();
  return 0.5 * (grid.integrate(integrand) + inner + outer);
}

double coulomb_energy(const RadialField& f) { return coulomb_pairing(f, f); }

double lp_norm(const RadialField& f, double p) {
  if (!(p >= 1.0))
    throw DomainError("L^p norm needs p >= 1");
  std::vector<double> g(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    g[i] = four_pi * f.grid.r(i) * f.grid.r(i) * std::pow(std::abs(f[i]), p);
  const double r0 = f.grid.r_min();
  const double s = f.grid.integrate(g) + four_pi * r0 * r0 * r0 * std::pow(std::abs(f[0]), p) / 3.0;
  return std::pow(std::max(s, 0.0), 1.0 / p);
}

void write_csv(std::ostream& out, const RadialField& f, const char* name) {
  out << "r," << name << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < f.size(); ++i)
    out << f.grid.r(i) << ',' << f[i] << '\n';
}

} // namespace rhftf
