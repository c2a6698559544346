#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace rhftf {

/// Logarithmic radial grid r_i = r_min * exp(i h), i = 0 .. count-1.
///
/// All quadratures act in t = ln r, where the spacing is uniform. The
/// composite four-point rule used here is fourth order in h.
class RadialGrid {
public:
  RadialGrid(double r_min, double r_max, std::size_t count);

  /// Default grid for nuclear charge Z: r_min = 1e-6 / Z, r_max = 60, 4000 nodes.
  static RadialGrid for_charge(double Z, double r_max = 60.0, std::size_t count = 4000);

  std::size_t size() const { return r_.size(); }
  double r(std::size_t i) const { return r_[i]; }
  std::span<const double> nodes() const { return r_; }
  double r_min() const { return r_.front(); }
  double r_max() const { return r_.back(); }
  /// Uniform spacing in ln r.
  double step() const { return h_; }

  /// Quadrature weights w_i with  int_{r_min}^{r_max} f(r) dr ~ sum_i w_i f(r_i).
  std::span<const double> weights() const { return w_; }

  /// int_{r_min}^{r_max} f(r) dr.
  double integrate(std::span<const double> f) const;

  /// c_i = int_{r_min}^{r_i} f(r) dr, c_0 = 0.
  std::vector<double> cumulative(std::span<const double> f) const;

  /// Four-point Lagrange interpolation in ln r; outside the grid the
  /// end values are returned.
  double interpolate(std::span<const double> values, double r) const;

  /// Largest i with r_i <= r (clamped to [0, size-2]).
  std::size_t locate(double r) const;

  bool same_as(const RadialGrid& other) const;

private:
  std::vector<double> r_;
  std::vector<double> w_;
  double h_ = 0.0;
};

/// int g dt over nodes spaced h apart, with the same composite rule.
double integrate_uniform(std::span<const double> g, double h);

/// Scalar values sampled on a radial grid (spherically symmetric field).
struct RadialField {
  RadialGrid grid;
  std::vector<double> values;

  explicit RadialField(RadialGrid g) : grid(std::move(g)), values(grid.size(), 0.0) {}
  RadialField(RadialGrid g, std::vector<double> v);

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  std::size_t size() const { return values.size(); }
  double at_radius(double r) const { return grid.interpolate(values, r); }
};

/// Charge inside radius r_i: Q_i = int_0^{r_i} 4 pi s^2 rho(s) ds. The
/// piece below r_min uses rho(r_min) as a constant.
std::vector<double> enclosed_charge(const RadialField& rho);

/// int 4 pi r^2 f(r) dr over the grid.
double total_charge(const RadialField& f);

/// Charge of rho inside the ball of radius r (interpolates between nodes).
double charge_within(const RadialField& rho, double r);

/// Newton's theorem: (rho * |x|^{-1})(r) = Q(r)/r + int_r^inf 4 pi s rho(s) ds.
/// Small negative density values are clamped to zero. The tail beyond
/// r_max is treated as zero charge.
RadialField coulomb_potential_radial(const RadialField& rho);

/// D(f, g) = 1/2 iint f(x) g(y) / |x - y|, evaluated in the field form
/// 1/2 int_0^inf Q_f(r) Q_g(r) / r^2 dr (positive semi-definite by construction).
double coulomb_pairing(const RadialField& f, const RadialField& g);
double coulomb_energy(const RadialField& f);

/// (int |f|^p d^3x)^{1/p} for p >= 1.
double lp_norm(const RadialField& f, double p);

/// CSV with header "r,<name>" and 17 significant digits.
void write_csv(std::ostream& out, const RadialField& f, const char* name = "value");

} // namespace rhftf
