// rhftf: command-line front end for the TF / RHF solvers and diagnostics.
//
//   rhftf <command> --config run.json [--set key=value]... [--out DIR] [--format csv|json]
//
// Exit status: 0 success, 1 solver failure, 2 configuration error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rhftf/config.hpp"
#include "rhftf/diagnostics.hpp"
#include "rhftf/rhf.hpp"
#include "rhftf/sommerfeld.hpp"
#include "rhftf/tf.hpp"

using namespace rhftf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct SolverFailure : Error {
  using Error::Error;
};

struct Table {
  std::string name; ///< file suffix; empty for the main table
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Report {
  json summary = json::object();
  std::vector<Table> tables;
};

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f)
      throw Error("cannot open " + tmp.string() + " for writing");
    f << content;
    if (!f.flush())
      throw Error("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path);
}

std::string csv_text(const Table& t) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

std::vector<fs::path> emit(const RunConfig& cfg, const Report& rep) {
  fs::create_directories(cfg.output);
  const fs::path dir(cfg.output);
  const std::string stem = cfg.command;
  std::vector<fs::path> written;
  if (cfg.format == OutputFormat::CSV) {
    for (const auto& t : rep.tables) {
      const auto p = dir / (stem + (t.name.empty() ? "" : "_" + t.name) + ".csv");
      write_atomic(p, csv_text(t));
      written.push_back(p);
    }
    const auto p = dir / (stem + "_summary.json");
    write_atomic(p, rep.summary.dump(2) + "\n");
    written.push_back(p);
  } else {
    json j;
    j["summary"] = rep.summary;
    j["tables"] = json::object();
    for (const auto& t : rep.tables)
      j["tables"][t.name.empty() ? "main" : t.name] = {{"columns", t.columns}, {"rows", t.rows}};
    const auto p = dir / (stem + ".json");
    write_atomic(p, j.dump(2) + "\n");
    written.push_back(p);
  }
  return written;
}

// ---------------------------------------------------------------------------

void require_single(const RunConfig& c) {
  if (c.nuclei.size() != 1)
    throw ConfigError({"nuclei: command '" + c.command + "' needs exactly one nucleus"});
}

double Z1(const RunConfig& c) { return c.nuclei.front().z; }

Table radial_table(const std::vector<std::pair<std::string, const RadialField*>>& cols) {
  Table t;
  t.columns.push_back("r");
  for (const auto& [n, f] : cols)
    t.columns.push_back(n);
  const auto& g = cols.front().second->grid;
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<double> row{g.r(i)};
    for (const auto& [n, f] : cols)
      row.push_back((*f)[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

TFSolutionAtom solve_tf_atom(const RunConfig& c) {
  require_single(c);
  if (c.electrons() > Z1(c))
    throw ConfigError({"N: the TF atom binds at most Z electrons"});
  return tf_atom_solve(Z1(c), c.electrons(), c.radial_grid());
}

TFSolutionMolecule solve_tf_molecule(const RunConfig& c) {
  if (c.N && std::abs(*c.N - c.total_charge()) > 1e-12)
    throw ConfigError({"N: the molecular TF solver handles the neutral case only"});
  return tf_molecule_solve(c.nuclear_configuration(), c.cartesian_grid(), c.tf_options());
}

Report cmd_tf_atom(const RunConfig& c) {
  const auto s = solve_tf_atom(c);
  Report r;
  r.tables.push_back(radial_table({{"phi", &s.phi}, {"rho", &s.rho}}));
  r.summary = {{"Z", s.Z},
               {"N", s.N},
               {"mu", s.mu},
               {"energy", s.energy},
               {"energy_from_slope", s.energy_from_slope},
               {"initial_slope", s.initial_slope},
               {"tail_charge", s.tail_charge},
               {"equation_residual", tf_equation_residual(s)}};
  return r;
}

Report cmd_tf_molecule(const RunConfig& c) {
  const auto s = solve_tf_molecule(c);
  Report r;
  Table t;
  t.columns = {"x", "y", "z", "phi", "rho"};
  for (std::size_t k = 0; k < s.phi.size(); ++k) {
    const Vec3 x = s.phi.grid.point(k);
    t.rows.push_back({x.x, x.y, x.z, s.phi[k], s.rho[k]});
  }
  r.tables.push_back(std::move(t));
  r.summary = {{"K", c.nuclei.size()},
               {"Z", c.total_charge()},
               {"charge", integrate(s.rho)},
               {"mu", s.mu},
               {"energy", s.energy},
               {"nuclear_repulsion", s.config.nuclear_repulsion()},
               {"iterations", s.iterations},
               {"grid_n", c.grid3d.n},
               {"half_width", c.grid3d.half_width},
               {"equation_residual", tf_equation_residual(s)}};
  return r;
}

Report cmd_rhf_atom(const RunConfig& c) {
  require_single(c);
  const auto scf = c.scf_config();
  const auto st = scf_solve(Z1(c), c.electrons(), scf);
  Report r;
  const auto v = mean_field_potential(st.rho, st.Z);
  r.tables.push_back(radial_table({{"rho", &st.rho}, {"v_eff", &v}}));
  Table sh{"shells", {"n", "l", "energy", "occupation"}, {}};
  for (const auto& s : st.shells)
    sh.rows.push_back({double(s.n), double(s.l), s.energy, s.occupation});
  r.tables.push_back(std::move(sh));
  r.summary = {{"Z", st.Z},
               {"N", st.N},
               {"fermi_mu", st.fermi_mu},
               {"energy", st.energy},
               {"energy_direct", st.energy_direct},
               {"kinetic", st.kinetic},
               {"converged", st.converged},
               {"unbound", st.unbound},
               {"iterations", st.iterations},
               {"spin_degeneracy", c.rhf.spin_degeneracy}};
  if (!st.converged)
    r.summary["failure"] = "SCF did not converge";
  return r;
}

Report cmd_ionize(const RunConfig& c) {
  std::vector<double> zs;
  for (double z = c.scan.z_min; z <= c.scan.z_max + 1e-9; z += 1.0)
    zs.push_back(z);
  ScanOptions opt;
  opt.threads = c.threads;
  // The radial grid follows each Z when r_min is left automatic.
  std::vector<IonizationScan> scans;
  for (double z : zs) {
    RunConfig one = c;
    one.nuclei = {{{0, 0, 0}, z}};
    scans.push_back(ionization_scan(z, c.scan.dN, one.scf_config(), opt));
  }
  Report r;
  Table t{"", {"Z", "N", "energy", "box_energy", "fermi_mu", "converged", "bound", "iterations"}, {}};
  json per = json::array();
  bool all_ok = true;
  for (const auto& s : scans) {
    bool monotone = true;
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      const auto& p = s.points[k];
      t.rows.push_back({s.Z, p.N, p.energy, p.box_energy, p.fermi_mu, double(p.converged), double(p.bound),
                        double(p.iterations)});
      if (k > 0 && p.energy > s.points[k - 1].energy)
        monotone = false;
    }
    const auto b = ionization_budget_check(s.N_max, s.Z, 1);
    all_ok = all_ok && b.hard_pass;
    per.push_back({{"Z", s.Z},
                   {"N_max", s.N_max},
                   {"excess", b.excess},
                   {"bound_2Z_plus_K", b.bound},
                   {"hard_pass", b.hard_pass},
                   {"energy_non_increasing", monotone},
                   {"points", s.points.size()}});
  }
  r.tables.push_back(std::move(t));
  r.summary = {{"dN", c.scan.dN}, {"scans", per}, {"hard_bound_holds", all_ok}};
  return r;
}

std::vector<double> r_values_or(const RunConfig& c, std::vector<double> dflt) {
  return c.r_values.empty() ? dflt : c.r_values;
}

Report cmd_sommerfeld(const RunConfig& c) {
  VerifyOptions opt;
  opt.absolute = c.absolute_slack;
  opt.relative = c.relative_slack;
  Report r;
  Table t{"", {"r", "a", "A", "nu", "samples", "lower_worst_slack", "upper_worst_slack", "refined_worst_slack",
               "violations"},
          {}};
  json reports = json::array();
  auto add = [&](const BoundReport& b) {
    t.rows.push_back({b.params.r, b.params.a, b.params.A, b.params.nu, double(b.sample_count), b.lower.worst_slack,
                      b.upper.worst_slack, b.refined.worst_slack, double(b.total_violations())});
    reports.push_back(json::parse(to_json(b)));
  };
  std::size_t violations = 0;
  if (c.nuclei.size() == 1) {
    const auto s = solve_tf_atom(c);
    for (double rv : r_values_or(c, {0.01, 0.1, 1.0})) {
      // The nucleus sits at the origin of the radial solution.
      const auto b = verify_sommerfeld(s, rv, radial_samples(rv, s.phi.grid.r_max(), c.samples), opt);
      violations += b.total_violations();
      add(b);
    }
  } else {
    const auto s = solve_tf_molecule(c);
    const std::size_t shell = std::max<std::size_t>(1, c.samples / 5);
    for (double rv : r_values_or(c, {0.2})) {
      const auto b = verify_sommerfeld(s, rv, exterior_samples(s.config, s.phi.grid, rv, c.samples, shell, c.seed),
                                       opt);
      violations += b.total_violations();
      add(b);
    }
  }
  r.tables.push_back(std::move(t));
  r.summary = {{"reports", reports}, {"total_violations", violations}, {"seed", c.seed}};
  return r;
}

Report cmd_screened(const RunConfig& c) {
  require_single(c);
  const double Z = Z1(c);
  const auto scf = c.scf_config();
  const auto st = scf_solve(Z, c.electrons(), scf);
  if (!st.converged)
    throw SolverFailure("screened-compare: SCF did not converge");
  if (c.electrons() > Z)
    throw ConfigError({"N: the TF atom binds at most Z electrons"});
  const auto tf = tf_atom_solve(Z, c.electrons(), scf.grid);
  const auto rep = compare_screened(st.rho, tf.rho, Z, r_values_or(c, log_spaced(std::cbrt(1.0 / Z), 1.0, 16)),
                                    tf.tail_charge);
  Report r;
  Table t{"", {"r", "sup_diff", "r4_diff", "ext_charge_rhf", "ext_charge_tf", "r3_ext_rhf"}, {}};
  double lo = INFINITY, hi = 0.0, harm = 0.0;
  for (const auto& row : rep.rows) {
    t.rows.push_back({row.r, row.sup_diff, row.r4_diff, row.ext_charge_rhf, row.ext_charge_tf, row.r3_ext_rhf});
    lo = std::min(lo, row.r4_diff);
    hi = std::max(hi, row.r4_diff);
    harm = std::max(harm, row.harmonic_ratio);
  }
  r.tables.push_back(std::move(t));
  r.summary = {{"Z", Z},
               {"rhf_energy", st.energy},
               {"tf_energy", tf.energy},
               {"r4_diff_min", lo},
               {"r4_diff_max", hi},
               {"r4_diff_ratio", lo > 0.0 ? hi / lo : INFINITY},
               {"max_harmonic_ratio", harm},
               {"sphere_samples", rep.rows.empty() ? 0u : rep.rows.front().samples}};
  return r;
}

Report cmd_coulomb(const RunConfig& c) {
  Report r;
  const auto ball = uniform_ball(1.0);
  const auto v = coulomb_potential_radial(ball);
  double pot_err = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double s = ball.grid.r(i);
    pot_err = std::max(pot_err, std::abs(v[i] - (3.0 - s * s) / 2.0));
  }
  std::mt19937_64 rng(c.seed);
  const auto grid = c.radial_grid();
  Table t{"", {"index", "coulomb_energy", "norm_5_3", "estimate_ratio"}, {}};
  const auto xs = log_spaced(grid.r_min() * 10.0, grid.r_max() / 2.0, 32);
  double worst = 0.0;
  for (std::size_t k = 0; k < c.densities; ++k) {
    const auto f = random_radial_density(grid, rng, true);
    const double ratio = coulomb_estimate_check(f, xs);
    worst = std::max(worst, ratio);
    t.rows.push_back({double(k), coulomb_energy(f), lp_norm(f, 5.0 / 3.0), ratio});
  }
  std::size_t cs_violations = 0;
  for (std::size_t k = 0; k < 100; ++k) {
    const auto f = random_radial_density(grid, rng, true);
    const auto g = random_radial_density(grid, rng, true);
    const double d = coulomb_pairing(f, g);
    if (d * d > coulomb_energy(f) * coulomb_energy(g) * (1.0 + 1e-12))
      ++cs_violations;
  }
  r.tables.push_back(std::move(t));
  r.summary = {{"ball_potential_error", pot_err},
               {"ball_energy", coulomb_energy(ball)},
               {"ball_energy_error", std::abs(coulomb_energy(ball) - 0.6)},
               {"cauchy_schwarz_pairs", 100},
               {"cauchy_schwarz_violations", cs_violations},
               {"max_estimate_ratio", worst},
               {"seed", c.seed}};
  return r;
}

Report dispatch(const RunConfig& c) {
  if (c.command == "tf-atom")
    return cmd_tf_atom(c);
  if (c.command == "tf-molecule")
    return cmd_tf_molecule(c);
  if (c.command == "rhf-atom")
    return cmd_rhf_atom(c);
  if (c.command == "ionize")
    return cmd_ionize(c);
  if (c.command == "sommerfeld-check")
    return cmd_sommerfeld(c);
  if (c.command == "screened-compare")
    return cmd_screened(c);
  if (c.command == "coulomb-check")
    return cmd_coulomb(c);
  throw ConfigError({"command: missing (give it on the command line or in the config)"});
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw ConfigError({"--config: cannot read " + path});
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thomas-Fermi and reduced Hartree-Fock atoms and molecules"};
  std::string command, config_path, out, format;
  std::vector<std::string> sets;
  int threads = 0;
  std::uint64_t seed = 0;
  bool echo = false;
  app.add_option("command", command, "tf-atom | tf-molecule | rhf-atom | ionize | sommerfeld-check | "
                                     "screened-compare | coulomb-check");
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--set", sets, "override a config field, e.g. --set rhf.l_max=4 --set nuclei[0].z=2");
  app.add_option("--out", out, "output directory");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  auto* t_opt = app.add_option("--threads", threads, "worker threads for multi-Z scans")->check(CLI::PositiveNumber);
  auto* s_opt = app.add_option("--seed", seed, "seed for sampled checks");
  app.add_flag("--print-config", echo, "print the resolved configuration and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  RunConfig cfg;
  try {
    std::string text = config_path.empty() ? std::string("{}") : read_file(config_path);
    std::vector<std::string> all = sets;
    if (!command.empty())
      all.push_back("command=\"" + command + "\"");
    if (!out.empty())
      all.push_back("output=" + json(out).dump());
    if (!format.empty())
      all.push_back("format=\"" + format + "\"");
    if (*t_opt)
      all.push_back("threads=" + std::to_string(threads));
    if (*s_opt)
      all.push_back("seed=" + std::to_string(seed));
    cfg = parse_config(apply_overrides(text, all));
    if (echo) {
      std::cout << emit_config(cfg);
      return 0;
    }
    if (cfg.command.empty())
      throw ConfigError({"command: missing (give it on the command line or in the config)"});
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems())
      std::cerr << "config error: " << p << '\n';
    return 2;
  }

  try {
    const auto rep = dispatch(cfg);
    for (const auto& p : emit(cfg, rep))
      std::cerr << "wrote " << p.string() << '\n';
    if (rep.summary.contains("failure")) {
      std::cerr << "solver failure: " << rep.summary["failure"].get<std::string>() << '\n';
      return 1;
    }
    return 0;
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems())
      std::cerr << "config error: " << p << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 1;
  }
}
