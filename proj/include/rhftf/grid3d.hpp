#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "rhftf/geometry.hpp"

namespace rhftf {

/// Uniform Cartesian node set  origin + (i, j, k) h,  node-major with x slowest.
class CartesianGrid3D {
public:
  CartesianGrid3D(Vec3 origin, double h, std::size_t nx, std::size_t ny, std::size_t nz);

  /// Cube of side 2 * half_width centred at `center` with n nodes per axis
  /// placed at cell centres; `center` is a node exactly when n is odd.
  static CartesianGrid3D cube(Vec3 center, double half_width, std::size_t n);

  Vec3 origin() const { return origin_; }
  double spacing() const { return h_; }
  double cell_volume() const { return h_ * h_ * h_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t nz() const { return nz_; }
  std::size_t size() const { return nx_ * ny_ * nz_; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * ny_ + j) * nz_ + k; }
  Vec3 point(std::size_t i, std::size_t j, std::size_t k) const {
    return {origin_.x + h_ * static_cast<double>(i), origin_.y + h_ * static_cast<double>(j),
            origin_.z + h_ * static_cast<double>(k)};
  }
  Vec3 point(std::size_t flat) const;
  bool on_boundary(std::size_t i, std::size_t j, std::size_t k) const {
    return i == 0 || j == 0 || k == 0 || i + 1 == nx_ || j + 1 == ny_ || k + 1 == nz_;
  }
  /// Distance (in nodes) from the outer face.
  std::size_t boundary_depth(std::size_t i, std::size_t j, std::size_t k) const;

  /// True when x lies inside the node hull (interpolation is defined).
  bool contains(Vec3 x) const;
  Vec3 lower() const { return origin_; }
  Vec3 upper() const { return point(nx_ - 1, ny_ - 1, nz_ - 1); }

  bool same_as(const CartesianGrid3D& other) const;

private:
  Vec3 origin_;
  double h_;
  std::size_t nx_, ny_, nz_;
};

struct ScalarField3D {
  CartesianGrid3D grid;
  std::vector<double> values;

  explicit ScalarField3D(CartesianGrid3D g) : grid(g), values(g.size(), 0.0) {}
  ScalarField3D(CartesianGrid3D g, std::vector<double> v);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }

  /// Trilinear interpolation; throws DomainError outside the node hull.
  double interpolate(Vec3 x) const;
};

/// Exact solver for the 7-point Dirichlet problem
///   (Delta_h u)(x) = f(x)  at interior nodes,  u = g on the outer layer,
/// by sine transforms. Plans are created once per grid shape. The transform
/// length is 2 (n - 1) per axis, so n - 1 with small prime factors (n = 2^k + 1
/// best) is much faster than, e.g., n = 128.
class DirichletPoisson {
public:
  explicit DirichletPoisson(const CartesianGrid3D& grid);
  ~DirichletPoisson();
  DirichletPoisson(const DirichletPoisson&) = delete;
  DirichletPoisson& operator=(const DirichletPoisson&) = delete;
  DirichletPoisson(DirichletPoisson&&) noexcept;
  DirichletPoisson& operator=(DirichletPoisson&&) noexcept;

  const CartesianGrid3D& grid() const;

  /// `u` holds boundary values on entry (interior ignored) and the solution
  /// on return. `f` is the right-hand side on all nodes (boundary ignored).
  void solve(std::span<const double> f, std::span<double> u) const;

  /// Applies (Delta_h u) at interior nodes; boundary entries of `out` are zero.
  void apply_laplacian(std::span<const double> u, std::span<double> out) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct PoissonOptions {
  /// Largest allowed |rho| in the outer two node layers relative to max |rho|.
  double boundary_density_tolerance = 1e-3;
  /// Relative infinity-norm residual demanded of the linear solve.
  double residual_tolerance = 1e-8;
};

/// Monopole + dipole + quadrupole potential of `rho` about the grid centre,
/// evaluated on the outer node layer (all other entries zero).
std::vector<double> multipole_boundary_values(const ScalarField3D& rho);

/// rho * |x|^{-1} on the grid: Delta u = -4 pi rho with multipole Dirichlet data.
ScalarField3D poisson_free_space_3d(const ScalarField3D& rho, const PoissonOptions& options = {});

double integrate(const ScalarField3D& f);
double coulomb_pairing(const ScalarField3D& f, const ScalarField3D& g);
double coulomb_energy(const ScalarField3D& f);
double lp_norm(const ScalarField3D& f, double p);

/// Node-major text dump "x,y,z,value" with 17 significant digits.
void write_csv(std::ostream& out, const ScalarField3D& f, const char* name = "value");

} // namespace rhftf
