#include "rhftf/grid3d.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>

#include "rhftf/errors.hpp"

namespace rhftf {

namespace {
constexpr double four_pi = 4.0 * std::numbers::pi;
std::mutex fftw_planner_mutex; // FFTW planning is not thread-safe
} // namespace

CartesianGrid3D::CartesianGrid3D(Vec3 origin, double h, std::size_t nx, std::size_t ny, std::size_t nz)
    : origin_(origin), h_(h), nx_(nx), ny_(ny), nz_(nz) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw DomainError("Cartesian grid spacing must be positive");
  if (nx < 8 || ny < 8 || nz < 8)
    throw DomainError("Cartesian grid needs at least 8 nodes per axis");
}

CartesianGrid3D CartesianGrid3D::cube(Vec3 center, double half_width, std::size_t n) {
  if (!(half_width > 0.0))
    throw DomainError("cube half width must be positive");
  const double h = 2.0 * half_width / static_cast<double>(n);
  const Vec3 origin{center.x - half_width + 0.5 * h, center.y - half_width + 0.5 * h,
                    center.z - half_width + 0.5 * h};
  return CartesianGrid3D(origin, h, n, n, n);
}

Vec3 CartesianGrid3D::point(std::size_t flat) const {
  const std::size_t k = flat % nz_;
  const std::size_t j = (flat / nz_) % ny_;
  const std::size_t i = flat / (ny_ * nz_);
  return point(i, j, k);
}

std::size_t CartesianGrid3D::boundary_depth(std::size_t i, std::size_t j, std::size_t k) const {
  return std::min({i, j, k, nx_ - 1 - i, ny_ - 1 - j, nz_ - 1 - k});
}

bool CartesianGrid3D::contains(Vec3 x) const {
  const Vec3 lo = lower();
  const Vec3 hi = upper();
  return x.x >= lo.x && x.y >= lo.y && x.z >= lo.z && x.x <= hi.x && x.y <= hi.y && x.z <= hi.z;
}

bool CartesianGrid3D::same_as(const CartesianGrid3D& other) const {
  return origin_ == other.origin_ && h_ == other.h_ && nx_ == other.nx_ && ny_ == other.ny_ &&
         nz_ == other.nz_;
}

ScalarField3D::ScalarField3D(CartesianGrid3D g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size())
    throw GridMismatchError("3D field length does not match its grid");
}

double ScalarField3D::interpolate(Vec3 x) const {
  if (!grid.contains(x))
    throw DomainError("interpolation point outside the Cartesian grid");
  const double h = grid.spacing();
  const Vec3 o = grid.origin();
  auto split = [h](double coord, double origin, std::size_t n, std::size_t& i) {
    const double s = (coord - origin) / h;
    double fl = std::floor(s);
    fl = std::clamp(fl, 0.0, static_cast<double>(n - 2));
    i = static_cast<std::size_t>(fl);
    return s - fl;
  };
  std::size_t i, j, k;
  const double fx = split(x.x, o.x, grid.nx(), i);
  const double fy = split(x.y, o.y, grid.ny(), j);
  const double fz = split(x.z, o.z, grid.nz(), k);
  double acc = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const double w = (a ? fx : 1.0 - fx) * (b ? fy : 1.0 - fy) * (c ? fz : 1.0 - fz);
        acc += w * values[grid.index(i + a, j + b, k + c)];
      }
  return acc;
}

struct DirichletPoisson::Impl {
  CartesianGrid3D grid;
  std::size_t mx, my, mz;
  double* buffer = nullptr;
  fftw_plan plan = nullptr;
  std::vector<double> lx, ly, lz;

  explicit Impl(const CartesianGrid3D& g)
      : grid(g), mx(g.nx() - 2), my(g.ny() - 2), mz(g.nz() - 2) {
    buffer = static_cast<double*>(fftw_malloc(sizeof(double) * mx * my * mz));
    {
      std::lock_guard lock(fftw_planner_mutex);
      plan = fftw_plan_r2r_3d(static_cast<int>(mx), static_cast<int>(my), static_cast<int>(mz), buffer,
                              buffer, FFTW_RODFT00, FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
    }
    auto eig = [](std::size_t m) {
      std::vector<double> l(m);
      for (std::size_t k = 0; k < m; ++k)
        l[k] = 2.0 * std::cos(std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(m + 1)) - 2.0;
      return l;
    };
    lx = eig(mx);
    ly = eig(my);
    lz = eig(mz);
  }
  ~Impl() {
    std::lock_guard lock(fftw_planner_mutex);
    if (plan)
      fftw_destroy_plan(plan);
    if (buffer)
      fftw_free(buffer);
  }
};

DirichletPoisson::DirichletPoisson(const CartesianGrid3D& grid) : impl_(std::make_unique<Impl>(grid)) {}
DirichletPoisson::~DirichletPoisson() = default;
DirichletPoisson::DirichletPoisson(DirichletPoisson&&) noexcept = default;
DirichletPoisson& DirichletPoisson::operator=(DirichletPoisson&&) noexcept = default;

const CartesianGrid3D& DirichletPoisson::grid() const { return impl_->grid; }

void DirichletPoisson::solve(std::span<const double> f, std::span<double> u) const {
  auto& im = *impl_;
  const auto& g = im.grid;
  if (f.size() != g.size() || u.size() != g.size())
    throw GridMismatchError("Poisson solve: array length does not match the grid");
  const double h2 = g.spacing() * g.spacing();
  const std::size_t nx = g.nx(), ny = g.ny(), nz = g.nz();
  // Right-hand side of the interior system sum_nb u - 6 u = h^2 f, known
  // boundary neighbours moved to the right.
  for (std::size_t i = 1; i + 1 < nx; ++i)
    for (std::size_t j = 1; j + 1 < ny; ++j)
      for (std::size_t k = 1; k + 1 < nz; ++k) {
        double b = h2 * f[g.index(i, j, k)];
        if (i == 1) b -= u[g.index(0, j, k)];
        if (i + 2 == nx) b -= u[g.index(nx - 1, j, k)];
        if (j == 1) b -= u[g.index(i, 0, k)];
        if (j + 2 == ny) b -= u[g.index(i, ny - 1, k)];
        if (k == 1) b -= u[g.index(i, j, 0)];
        if (k + 2 == nz) b -= u[g.index(i, j, nz - 1)];
        im.buffer[((i - 1) * im.my + (j - 1)) * im.mz + (k - 1)] = b;
      }
  fftw_execute(im.plan);
  const double scale = 1.0 / (8.0 * static_cast<double>((im.mx + 1) * (im.my + 1) * (im.mz + 1)));
  for (std::size_t a = 0; a < im.mx; ++a)
    for (std::size_t b = 0; b < im.my; ++b)
      for (std::size_t c = 0; c < im.mz; ++c) {
        double& v = im.buffer[(a * im.my + b) * im.mz + c];
        v *= scale / (im.lx[a] + im.ly[b] + im.lz[c]);
      }
  fftw_execute(im.plan);
  for (std::size_t i = 1; i + 1 < nx; ++i)
    for (std::size_t j = 1; j + 1 < ny; ++j)
      for (std::size_t k = 1; k + 1 < nz; ++k)
        u[g.index(i, j, k)] = im.buffer[((i - 1) * im.my + (j - 1)) * im.mz + (k - 1)];
}

void DirichletPoisson::apply_laplacian(std::span<const double> u, std::span<double> out) const {
  const auto& g = impl_->grid;
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  const std::size_t nx = g.nx(), ny = g.ny(), nz = g.nz();
  const std::size_t sx = ny * nz, sy = nz;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 1; i + 1 < nx; ++i)
    for (std::size_t j = 1; j + 1 < ny; ++j)
      for (std::size_t k = 1; k + 1 < nz; ++k) {
        const std::size_t c = g.index(i, j, k);
        out[c] = (u[c - sx] + u[c + sx] + u[c - sy] + u[c + sy] + u[c - 1] + u[c + 1] - 6.0 * u[c]) * inv_h2;
      }
}

std::vector<double> multipole_boundary_values(const ScalarField3D& rho) {
  const auto& g = rho.grid;
  const Vec3 center = 0.5 * (g.lower() + g.upper());
  const double dv = g.cell_volume();
  double q = 0.0;
  Vec3 p{};
  double m[3][3] = {};
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double w = rho[n] * dv;
    const Vec3 x = g.point(n) - center;
    const double c[3] = {x.x, x.y, x.z};
    q += w;
    p = p + w * x;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        m[a][b] += w * c[a] * c[b];
  }
  const double tr = m[0][0] + m[1][1] + m[2][2];
  std::vector<double> u(g.size(), 0.0);
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t k = 0; k < g.nz(); ++k) {
        if (!g.on_boundary(i, j, k))
          continue;
        const Vec3 d = g.point(i, j, k) - center;
        const double c[3] = {d.x, d.y, d.z};
        const double r2 = dot(d, d);
        const double r = std::sqrt(r2);
        // sum_ab (3 M_ab - delta_ab tr M) d_a d_b / (2 r^5)
        double quad = -tr * r2;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            quad += 3.0 * m[a][b] * c[a] * c[b];
        u[g.index(i, j, k)] = q / r + dot(p, d) / (r2 * r) + quad / (2.0 * r2 * r2 * r);
      }
  return u;
}

ScalarField3D poisson_free_space_3d(const ScalarField3D& rho, const PoissonOptions& options) {
  const auto& g = rho.grid;
  double peak = 0.0, edge = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t k = 0; k < g.nz(); ++k) {
        const double a = std::abs(rho[g.index(i, j, k)]);
        if (!std::isfinite(a))
          throw DomainError("Poisson solve: non-finite density");
        peak = std::max(peak, a);
        if (g.boundary_depth(i, j, k) < 2)
          edge = std::max(edge, a);
      }
  ScalarField3D u(g);
  if (peak == 0.0)
    return u;
  if (edge > options.boundary_density_tolerance * peak)
    throw DomainError("Poisson solve: non-negligible density near the box boundary");

  u.values = multipole_boundary_values(rho);
  std::vector<double> f(g.size());
  for (std::size_t n = 0; n < g.size(); ++n)
    f[n] = -four_pi * rho[n];
  DirichletPoisson solver(g);
  solver.solve(f, u.values);

  // Verify the linear solve.
  std::vector<double> lap(g.size());
  solver.apply_laplacian(u.values, lap);
  double res = 0.0, scale = 0.0;
  for (std::size_t i = 1; i + 1 < g.nx(); ++i)
    for (std::size_t j = 1; j + 1 < g.ny(); ++j)
      for (std::size_t k = 1; k + 1 < g.nz(); ++k) {
        const std::size_t c = g.index(i, j, k);
        res = std::max(res, std::abs(lap[c] - f[c]));
        scale = std::max(scale, std::abs(f[c]));
      }
  if (res > options.residual_tolerance * scale)
    throw ConvergenceError("Poisson solve: residual above tolerance");
  return u;
}

double integrate(const ScalarField3D& f) {
  double acc = 0.0;
  for (double v : f.values)
    acc += v;
  return acc * f.grid.cell_volume();
}

double coulomb_pairing(const ScalarField3D& f, const ScalarField3D& g) {
  if (!f.grid.same_as(g.grid))
    throw GridMismatchError("Coulomb pairing of fields on different grids");
  PoissonOptions opts;
  opts.boundary_density_tolerance = 1.0;
  const auto ug = poisson_free_space_3d(g, opts);
  const auto uf = poisson_free_space_3d(f, opts);
  double acc = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n)
    acc += f[n] * ug[n] + g[n] * uf[n];
  return 0.25 * acc * f.grid.cell_volume();
}

double coulomb_energy(const ScalarField3D& f) {
  PoissonOptions opts;
  opts.boundary_density_tolerance = 1.0;
  const auto u = poisson_free_space_3d(f, opts);
  double acc = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n)
    acc += f[n] * u[n];
  return 0.5 * acc * f.grid.cell_volume();
}

double lp_norm(const ScalarField3D& f, double p) {
  if (!(p >= 1.0))
    throw DomainError("L^p norm needs p >= 1");
  double acc = 0.0;
  for (double v : f.values)
    acc += std::pow(std::abs(v), p);
  return std::pow(acc * f.grid.cell_volume(), 1.0 / p);
}

void write_csv(std::ostream& out, const ScalarField3D& f, const char* name) {
  out << "x,y,z," << name << '\n' << std::setprecision(17);
  for (std::size_t n = 0; n < f.size(); ++n) {
    const Vec3 p = f.grid.point(n);
    out << p.x << ',' << p.y << ',' << p.z << ',' << f[n] << '\n';
  }
}

} // namespace rhftf
