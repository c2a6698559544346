#include "rhftf/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "rhftf/errors.hpp"

namespace rhftf {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

// P(a) = int_a^{r_max} 4 pi t rho(t) dt, interpolated between nodes.
double outer_shell(const RadialField& rho, double a) {
  const auto& g = rho.grid;
  std::vector<double> shell(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    shell[i] = four_pi * g.r(i) * rho[i];
  const auto c = g.cumulative(shell);
  if (a <= g.r_min()) {
    // rho taken constant below r_min, as for the enclosed charge.
    const double r0 = g.r_min();
    return c.back() + 2.0 * std::numbers::pi * rho[0] * (r0 * r0 - a * a);
  }
  if (a >= g.r_max())
    return 0.0;
  return c.back() - g.interpolate(c, a);
}

// Enclosed charge of a signed function (enclosed_charge clamps to rho >= 0).
double signed_charge_within(const RadialField& f, double s) {
  const auto& g = f.grid;
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    d[i] = four_pi * g.r(i) * g.r(i) * f[i];
  auto q = g.cumulative(d);
  const double r0 = g.r_min();
  const double inner = four_pi * r0 * r0 * r0 * f[0] / 3.0;
  if (s <= r0)
    return inner * (s / r0) * (s / r0) * (s / r0);
  for (auto& v : q)
    v += inner;
  return g.interpolate(q, s);
}

} // namespace

double screened_potential(const RadialField& rho, double Z, double r, double s) {
  if (!(r > 0.0))
    throw DomainError("screened_potential: r must be positive");
  if (!(s > 0.0))
    throw SingularPointError("screened_potential: evaluation at the nucleus");
  if (s >= r)
    return (Z - charge_within(rho, r)) / s;
  // Inside the ball: Newton's theorem for the part inside s plus the shell s..r.
  return Z / s - charge_within(rho, s) / s - (outer_shell(rho, s) - outer_shell(rho, r));
}

double ScreenedField3D::at(Vec3 x) const { return config.nuclear_potential(x) - inner_potential.interpolate(x); }

ScreenedField3D screened_potential(const ScalarField3D& rho, const NuclearConfiguration& config, double r) {
  if (!(r > 0.0))
    throw DomainError("screened_potential: r must be positive");
  ScalarField3D inner(rho.grid);
  for (std::size_t c = 0; c < rho.size(); ++c)
    inner[c] = in_exterior_region(rho.grid.point(c), r, config) ? 0.0 : rho[c];
  return ScreenedField3D{config, r, poisson_free_space_3d(inner)};
}

const char* model_name(Model m) { return m == Model::RHF ? "RHF" : "TF"; }

ScreenedPotentialSample sample_screened(const PotentialFn& phi_r, const NuclearConfiguration& config, double r,
                                        Model model) {
  ScreenedPotentialSample out;
  out.r = r;
  out.model = model;
  out.points = sphere_samples(config, r);
  out.sup = -std::numeric_limits<double>::infinity();
  out.inf = std::numeric_limits<double>::infinity();
  for (const auto& x : out.points) {
    const double v = phi_r(x);
    out.values.push_back(v);
    out.sup = std::max(out.sup, v);
    out.inf = std::min(out.inf, v);
  }
  return out;
}

double tf_screened_identity_check(const TFSolutionAtom& sol, double r, const std::vector<double>& radii) {
  const auto& rho = sol.rho;
  const double q_r = charge_within(rho, r);
  double worst = 0.0;
  for (double s : radii) {
    if (s < r || s > rho.grid.r_max())
      throw DomainError("tf_screened_identity_check: sample radius outside [r, r_max]");
    const double lhs = (sol.Z - q_r) / s;
    // int_{A_r} rho / |x - y| at |x| = s, with the charge beyond the grid.
    const double exterior =
        (charge_within(rho, s) - q_r) / s + outer_shell(rho, s) + sol.tail_potential;
    const double rhs = sol.phi.at_radius(s) + exterior;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double exterior_charge(const RadialField& rho, double r) {
  if (!(r > 0.0))
    throw DomainError("exterior_charge: r must be positive");
  return total_charge(rho) - charge_within(rho, r);
}

double exterior_charge(const TFSolutionAtom& sol, double r) { return exterior_charge(sol.rho, r) + sol.tail_charge; }

double exterior_charge(const ScalarField3D& rho, const NuclearConfiguration& config, double r) {
  if (!(r > 0.0))
    throw DomainError("exterior_charge: r must be positive");
  double q = 0.0;
  for (std::size_t c = 0; c < rho.size(); ++c)
    if (in_exterior_region(rho.grid.point(c), r, config))
      q += rho[c];
  return q * rho.grid.cell_volume();
}

RadialExteriorProblem exterior_problem_from_tf(const TFSolutionAtom& sol, double r) {
  if (!(r > 0.0))
    throw DomainError("exterior_problem_from_tf: r must be positive");
  const auto& g = sol.rho.grid;
  RadialField chi(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.r(i) > r)
      chi[i] = sol.rho[i];
  const auto pc = coulomb_potential_radial(chi);
  RadialExteriorProblem p{r, RadialField(g), total_charge(chi) + sol.tail_charge};
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.r(i) > r)
      p.potential[i] = sol.phi[i] + pc[i] + sol.tail_potential;
  return p;
}

ComparisonReport compare_screened(const RadialField& rho_rhf, const RadialField& rho_tf, double Z,
                                  const std::vector<double>& r_list, double tail_tf) {
  if (!rho_rhf.grid.same_as(rho_tf.grid))
    throw GridMismatchError("compare_screened: densities on different grids");
  const auto config = NuclearConfiguration::atom(Z);
  ComparisonReport rep;
  rep.Z = Z;
  for (double r : r_list) {
    auto phi_rhf = [&](Vec3 x) { return screened_potential(rho_rhf, Z, r, norm(x)); };
    auto phi_tf = [&](Vec3 x) { return screened_potential(rho_tf, Z, r, norm(x)); };
    const auto a = sample_screened(phi_rhf, config, r, Model::RHF);
    const auto b = sample_screened(phi_tf, config, r, Model::TF);
    ComparisonRow row;
    row.r = r;
    row.samples = a.values.size();
    for (std::size_t k = 0; k < a.values.size(); ++k)
      row.sup_diff = std::max(row.sup_diff, std::abs(a.values[k] - b.values[k]));
    row.r4_diff = std::pow(r, 4) * row.sup_diff;
    row.ext_charge_rhf = exterior_charge(rho_rhf, r);
    row.ext_charge_tf = exterior_charge(rho_tf, r) + tail_tf;
    row.r3_ext_rhf = r * r * r * row.ext_charge_rhf;
    // The difference is harmonic in A_r and vanishes at infinity, so its
    // modulus at interior probes cannot exceed the boundary supremum.
    for (double f : {1.25, 1.5, 2.0, 4.0}) {
      const Vec3 x{f * r, 0.0, 0.0};
      const double d = std::abs(phi_rhf(x) - phi_tf(x));
      if (row.sup_diff > 0.0)
        row.harmonic_ratio = std::max(row.harmonic_ratio, d / row.sup_diff);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

void write_csv(std::ostream& out, const ComparisonReport& rep) {
  out << "r,sup_diff,r4_diff,ext_charge_rhf,ext_charge_tf,r3_ext_rhf\n" << std::setprecision(17);
  for (const auto& row : rep.rows)
    out << row.r << ',' << row.sup_diff << ',' << row.r4_diff << ',' << row.ext_charge_rhf << ','
        << row.ext_charge_tf << ',' << row.r3_ext_rhf << '\n';
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi >= lo) || count == 0)
    throw DomainError("log_spaced: need 0 < lo <= hi and count >= 1");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = count == 1 ? lo : lo * std::pow(hi / lo, double(i) / double(count - 1));
  if (count > 1)
    out.back() = hi;
  return out;
}

double coulomb_estimate_check(const RadialField& f, const std::vector<double>& x_list) {
  const double norm53 = lp_norm(f, 5.0 / 3.0);
  const double d = coulomb_energy(f);
  double worst = 0.0;
  for (double s : x_list) {
    if (!(s > 0.0))
      throw DomainError("coulomb_estimate_check: |x| must be positive");
    // Newton: the ball |y| < |x| acts on x as the enclosed charge.
    const double lhs = std::abs(signed_charge_within(f, s) / s);
    if (lhs == 0.0)
      continue;
    if (!(d > 0.0) || !(norm53 > 0.0))
      throw DomainError("coulomb_estimate_check: D[f] = 0 with a nonzero left side");
    worst = std::max(worst, lhs / (std::pow(norm53, 5.0 / 6.0) * std::pow(s * d, 1.0 / 12.0)));
  }
  return worst;
}

RadialField uniform_ball(double R, double q, std::size_t count) {
  if (!(R > 0.0))
    throw DomainError("uniform_ball: radius must be positive");
  const RadialGrid g(1e-6 * R, R, count);
  return RadialField(g, std::vector<double>(count, 3.0 * q / (four_pi * R * R * R)));
}

RadialField random_radial_density(const RadialGrid& grid, std::mt19937_64& rng, bool signed_weights) {
  std::uniform_int_distribution<int> terms(1, 4);
  std::uniform_real_distribution<double> width(0.2, 3.0);
  std::uniform_real_distribution<double> weight(signed_weights ? -1.0 : 0.1, 1.0);
  const int k = terms(rng);
  std::vector<double> c(k), w(k);
  for (int t = 0; t < k; ++t) {
    c[t] = weight(rng);
    w[t] = width(rng);
  }
  RadialField f(grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (int t = 0; t < k; ++t)
      f[i] += c[t] * std::exp(-std::pow(grid.r(i) / w[t], 2));
  return f;
}

BudgetCheck ionization_budget_check(double N_max, double Z, std::size_t K) {
  BudgetCheck b;
  b.bound = 2.0 * Z + static_cast<double>(K);
  b.hard_pass = N_max <= b.bound;
  b.excess = N_max - Z;
  return b;
}

ExponentFit fit_initial_estimate_exponents(const std::vector<ExponentSample>& table) {
  // Normal equations for [c, alpha, beta].
  std::array<std::array<double, 4>, 3> m{};
  ExponentFit fit;
  for (const auto& t : table) {
    if (!(t.sup_diff > 0.0 && t.Z > 0.0 && t.r > 0.0))
      continue;
    const double row[3] = {1.0, std::log(t.Z), std::log(t.r)};
    const double y = std::log(t.sup_diff);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b)
        m[a][b] += row[a] * row[b];
      m[a][3] += row[a] * y;
    }
    ++fit.points;
  }
  if (fit.points < 3)
    throw DomainError("fit_initial_estimate_exponents: need at least three positive samples");
  double scale = 0.0;
  for (int a = 0; a < 3; ++a)
    scale = std::max(scale, std::abs(m[a][a]));
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col]))
        piv = r;
    std::swap(m[col], m[piv]);
    if (std::abs(m[col][col]) <= 1e-12 * scale)
      throw DomainError("fit_initial_estimate_exponents: degenerate table (need several Z and r values)");
    for (int r = 0; r < 3; ++r) {
      if (r == col)
        continue;
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k)
        m[r][k] -= f * m[col][k];
    }
  }
  fit.log_constant = m[0][3] / m[0][0];
  fit.alpha = m[1][3] / m[1][1];
  fit.beta = m[2][3] / m[2][2];
  return fit;
}

} // namespace rhftf
