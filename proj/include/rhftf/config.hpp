#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rhftf/errors.hpp"
#include "rhftf/geometry.hpp"
#include "rhftf/radial.hpp"
#include "rhftf/rhf.hpp"
#include "rhftf/tf.hpp"

namespace rhftf {

/// A list of field-level problems, each prefixed with the JSON path of the
/// offending field ("nuclei[0].z: must be positive").
class ConfigError : public Error {
public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

private:
  std::vector<std::string> problems_;
};

enum class OutputFormat { CSV, JSON };

struct NucleusSpec {
  Vec3 pos;
  double z = 0.0;
  friend bool operator==(const NucleusSpec&, const NucleusSpec&) = default;
};

struct RadialGridSpec {
  double r_min = 0.0; ///< 0: 1e-6 / Z
  double r_max = 60.0;
  std::size_t count = 4000;
  friend bool operator==(const RadialGridSpec&, const RadialGridSpec&) = default;
};

struct CartesianGridSpec {
  std::size_t n = 64;
  double half_width = 8.0;
  friend bool operator==(const CartesianGridSpec&, const CartesianGridSpec&) = default;
};

struct TFSpec {
  double tolerance_scale = 1e-6;
  int max_iterations = 200;
  int subcell_points = 4;
  friend bool operator==(const TFSpec&, const TFSpec&) = default;
};

struct RHFSpec {
  int l_max = 3;
  int states_per_l = 5;
  double mixing = 0.3;
  int anderson_depth = 5;
  double tolerance = 1e-9;
  int max_iterations = 2000;
  int spin_degeneracy = 1;
  RadialGridSpec grid{0.0, 60.0, 2000};
  friend bool operator==(const RHFSpec&, const RHFSpec&) = default;
};

struct ScanSpec {
  double z_min = 1.0;
  double z_max = 8.0;
  double dN = 0.05;
  friend bool operator==(const ScanSpec&, const ScanSpec&) = default;
};

struct RunConfig {
  std::string command;
  std::vector<NucleusSpec> nuclei;
  std::optional<double> N; ///< electrons; neutral when absent
  RadialGridSpec radial;
  CartesianGridSpec grid3d;
  TFSpec tf;
  RHFSpec rhf;
  ScanSpec scan;
  std::vector<double> r_values; ///< empty: command default
  std::size_t samples = 1000;
  double absolute_slack = 1e-8;
  double relative_slack = 0.0;
  std::size_t densities = 20;   ///< coulomb-check
  std::string output = ".";
  OutputFormat format = OutputFormat::CSV;
  std::uint64_t seed = 12345;
  int threads = 1;

  NuclearConfiguration nuclear_configuration() const;
  double total_charge() const;
  double electrons() const { return N.value_or(total_charge()); }
  RadialGrid radial_grid() const;
  CartesianGrid3D cartesian_grid() const; ///< cube about the nuclear centroid
  SCFConfig scf_config() const;
  TFMoleculeOptions tf_options() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

const std::vector<std::string>& known_commands();

/// Throws ConfigError listing every problem found.
RunConfig parse_config(const std::string& text);

/// JSON text with sorted keys; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& config);

/// Applies "a.b[2].c=value" overrides to config text before parsing. The value
/// is read as JSON when possible, otherwise as a string.
std::string apply_overrides(const std::string& text, const std::vector<std::string>& overrides);

} // namespace rhftf
