#include "rhftf/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

namespace rhftf {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& p : v)
    s += (s.empty() ? "" : "; ") + p;
  return s;
}

// Collects every problem instead of stopping at the first one.
class Reader {
public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  // Rejects unknown keys of an object.
  void keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : obj.items()) {
      (void)v;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
        fail(join_path(path, k), "unknown field");
    }
  }

  static std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  template <class Check>
  void number(const json& obj, const std::string& path, const char* key, double& out, Check ok, const char* rule) {
    if (!obj.contains(key))
      return;
    const auto p = join_path(path, key);
    const auto& v = obj[key];
    if (!v.is_number()) {
      fail(p, "expected a number");
      return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || !ok(x)) {
      fail(p, rule);
      return;
    }
    out = x;
  }

  template <class Int, class Check>
  void integer(const json& obj, const std::string& path, const char* key, Int& out, Check ok, const char* rule) {
    if (!obj.contains(key))
      return;
    const auto p = join_path(path, key);
    const auto& v = obj[key];
    if (!v.is_number_integer()) {
      fail(p, "expected an integer");
      return;
    }
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned() || v.get<long long>() >= 0) {
        const auto x = v.get<std::uint64_t>();
        if (x <= std::numeric_limits<Int>::max() && ok(x)) {
          out = static_cast<Int>(x);
          return;
        }
      }
    } else {
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() <= std::uint64_t(std::numeric_limits<Int>::max())) {
        const auto x = v.get<long long>();
        if (x >= std::numeric_limits<Int>::min() && x <= std::numeric_limits<Int>::max() && ok(x)) {
          out = static_cast<Int>(x);
          return;
        }
      }
    }
    fail(p, rule);
  }

  const json* object(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key))
      return nullptr;
    if (!obj[key].is_object()) {
      fail(join_path(path, key), "expected an object");
      return nullptr;
    }
    return &obj[key];
  }
};

void read_radial(Reader& rd, const json& o, const std::string& path, RadialGridSpec& g) {
  rd.keys(o, path, {"r_min", "r_max", "count"});
  rd.number(o, path, "r_min", g.r_min, [](double x) { return x >= 0.0; }, "must be >= 0 (0 selects 1e-6/Z)");
  rd.number(o, path, "r_max", g.r_max, [](double x) { return x > 0.0; }, "must be positive");
  rd.integer(o, path, "count", g.count, [](auto x) { return x >= 16; }, "must be an integer >= 16");
  if (g.r_min > 0.0 && g.r_max <= g.r_min)
    rd.fail(Reader::join_path(path, "r_max"), "must exceed r_min");
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error("invalid configuration: " + join(problems)), problems_(std::move(problems)) {}

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c = {"tf-atom",          "tf-molecule",      "rhf-atom",    "ionize",
                                             "sommerfeld-check", "screened-compare", "coulomb-check"};
  return c;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("<root>: malformed config text: ") + e.what()});
  }
  if (!j.is_object())
    throw ConfigError({"<root>: expected an object"});

  RunConfig c;
  Reader rd;
  rd.keys(j, "",
          {"command", "nuclei", "N", "radial", "grid3d", "tf", "rhf", "scan", "r_values", "samples", "absolute_slack",
           "relative_slack", "densities", "output", "format", "seed", "threads"});

  if (j.contains("command")) {
    if (!j["command"].is_string())
      rd.fail("command", "expected a string");
    else {
      c.command = j["command"].get<std::string>();
      const auto& k = known_commands();
      if (!c.command.empty() && std::find(k.begin(), k.end(), c.command) == k.end())
        rd.fail("command", "unknown command '" + c.command + "'");
    }
  }

  if (!j.contains("nuclei"))
    rd.fail("nuclei", "missing");
  else if (!j["nuclei"].is_array() || j["nuclei"].empty())
    rd.fail("nuclei", "expected a non-empty array");
  else {
    const auto& arr = j["nuclei"];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "nuclei[" + std::to_string(i) + "]";
      const auto& n = arr[i];
      NucleusSpec s;
      if (!n.is_object()) {
        rd.fail(p, "expected an object");
        continue;
      }
      rd.keys(n, p, {"pos", "z"});
      if (!n.contains("pos"))
        rd.fail(p + ".pos", "missing");
      else if (!n["pos"].is_array() || n["pos"].size() != 3 ||
               !std::all_of(n["pos"].begin(), n["pos"].end(), [](const json& v) { return v.is_number(); }))
        rd.fail(p + ".pos", "expected three numbers");
      else {
        s.pos = {n["pos"][0].get<double>(), n["pos"][1].get<double>(), n["pos"][2].get<double>()};
        if (!std::isfinite(s.pos.x) || !std::isfinite(s.pos.y) || !std::isfinite(s.pos.z))
          rd.fail(p + ".pos", "must be finite");
      }
      if (!n.contains("z"))
        rd.fail(p + ".z", "missing");
      else
        rd.number(n, p, "z", s.z, [](double x) { return x > 0.0; }, "charge must be positive");
      c.nuclei.push_back(s);
    }
    for (std::size_t i = 0; i < c.nuclei.size(); ++i)
      for (std::size_t k = 0; k < i; ++k)
        if (c.nuclei[i].pos == c.nuclei[k].pos)
          rd.fail("nuclei[" + std::to_string(i) + "].pos",
                  "coincides with nuclei[" + std::to_string(k) + "].pos (R_min = 0)");
  }

  if (j.contains("N")) {
    double n = 0.0;
    const auto before = rd.errors.size();
    rd.number(j, "", "N", n, [](double x) { return x >= 0.0; }, "must be >= 0");
    if (rd.errors.size() == before)
      c.N = n;
  }

  if (const auto* o = rd.object(j, "", "radial"))
    read_radial(rd, *o, "radial", c.radial);
  if (const auto* o = rd.object(j, "", "grid3d")) {
    rd.keys(*o, "grid3d", {"n", "half_width"});
    rd.integer(*o, "grid3d", "n", c.grid3d.n, [](auto x) { return x >= 9 && x <= 1025; }, "must be in [9, 1025]");
    rd.number(*o, "grid3d", "half_width", c.grid3d.half_width, [](double x) { return x > 0.0; }, "must be positive");
  }
  if (const auto* o = rd.object(j, "", "tf")) {
    rd.keys(*o, "tf", {"tolerance_scale", "max_iterations", "subcell_points"});
    rd.number(*o, "tf", "tolerance_scale", c.tf.tolerance_scale, [](double x) { return x > 0.0; }, "must be positive");
    rd.integer(*o, "tf", "max_iterations", c.tf.max_iterations, [](auto x) { return x >= 1; }, "must be >= 1");
    rd.integer(*o, "tf", "subcell_points", c.tf.subcell_points, [](auto x) { return x >= 1 && x <= 32; },
               "must be in [1, 32]");
  }
  if (const auto* o = rd.object(j, "", "rhf")) {
    auto& r = c.rhf;
    rd.keys(*o, "rhf",
            {"l_max", "states_per_l", "mixing", "anderson_depth", "tolerance", "max_iterations", "spin_degeneracy",
             "grid"});
    rd.integer(*o, "rhf", "l_max", r.l_max, [](auto x) { return x >= 0 && x <= 12; }, "must be in [0, 12]");
    rd.integer(*o, "rhf", "states_per_l", r.states_per_l, [](auto x) { return x >= 1 && x <= 50; },
               "must be in [1, 50]");
    rd.number(*o, "rhf", "mixing", r.mixing, [](double x) { return x > 0.0 && x <= 1.0; }, "must be in (0, 1]");
    rd.integer(*o, "rhf", "anderson_depth", r.anderson_depth, [](auto x) { return x >= 0 && x <= 50; },
               "must be in [0, 50]");
    rd.number(*o, "rhf", "tolerance", r.tolerance, [](double x) { return x > 0.0; }, "must be positive");
    rd.integer(*o, "rhf", "max_iterations", r.max_iterations, [](auto x) { return x >= 1; }, "must be >= 1");
    rd.integer(*o, "rhf", "spin_degeneracy", r.spin_degeneracy, [](auto x) { return x == 1 || x == 2; },
               "must be 1 or 2");
    if (const auto* g = rd.object(*o, "rhf", "grid"))
      read_radial(rd, *g, "rhf.grid", r.grid);
  }
  if (const auto* o = rd.object(j, "", "scan")) {
    rd.keys(*o, "scan", {"z_min", "z_max", "dN"});
    rd.number(*o, "scan", "z_min", c.scan.z_min, [](double x) { return x > 0.0; }, "must be positive");
    rd.number(*o, "scan", "z_max", c.scan.z_max, [](double x) { return x > 0.0; }, "must be positive");
    rd.number(*o, "scan", "dN", c.scan.dN, [](double x) { return x > 0.0 && x <= 1.0; }, "must be in (0, 1]");
    if (c.scan.z_max < c.scan.z_min)
      rd.fail("scan.z_max", "must be >= scan.z_min");
  }
  if (j.contains("r_values")) {
    if (!j["r_values"].is_array())
      rd.fail("r_values", "expected an array of numbers");
    else
      for (std::size_t i = 0; i < j["r_values"].size(); ++i) {
        const auto& v = j["r_values"][i];
        const std::string p = "r_values[" + std::to_string(i) + "]";
        if (!v.is_number())
          rd.fail(p, "expected a number");
        else if (!(v.get<double>() > 0.0) || !std::isfinite(v.get<double>()))
          rd.fail(p, "must be positive");
        else
          c.r_values.push_back(v.get<double>());
      }
  }
  rd.integer(j, "", "samples", c.samples, [](auto x) { return x >= 1; }, "must be >= 1");
  rd.number(j, "", "absolute_slack", c.absolute_slack, [](double x) { return x >= 0.0; }, "must be >= 0");
  rd.number(j, "", "relative_slack", c.relative_slack, [](double x) { return x >= 0.0; }, "must be >= 0");
  rd.integer(j, "", "densities", c.densities, [](auto x) { return x >= 1; }, "must be >= 1");
  if (j.contains("output")) {
    if (!j["output"].is_string() || j["output"].get<std::string>().empty())
      rd.fail("output", "expected a non-empty string");
    else
      c.output = j["output"].get<std::string>();
  }
  if (j.contains("format")) {
    const auto& f = j["format"];
    if (f == "csv")
      c.format = OutputFormat::CSV;
    else if (f == "json")
      c.format = OutputFormat::JSON;
    else
      rd.fail("format", "expected \"csv\" or \"json\"");
  }
  rd.integer(j, "", "seed", c.seed, [](auto) { return true; }, "expected an unsigned 64-bit integer");
  rd.integer(j, "", "threads", c.threads, [](auto x) { return x >= 1 && x <= 1024; }, "must be in [1, 1024]");

  if (!rd.errors.empty())
    throw ConfigError(rd.errors);
  return c;
}

namespace {

json radial_json(const RadialGridSpec& g) { return {{"r_min", g.r_min}, {"r_max", g.r_max}, {"count", g.count}}; }

} // namespace

std::string emit_config(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["nuclei"] = json::array();
  for (const auto& n : c.nuclei)
    j["nuclei"].push_back({{"pos", {n.pos.x, n.pos.y, n.pos.z}}, {"z", n.z}});
  if (c.N)
    j["N"] = *c.N;
  j["radial"] = radial_json(c.radial);
  j["grid3d"] = {{"n", c.grid3d.n}, {"half_width", c.grid3d.half_width}};
  j["tf"] = {{"tolerance_scale", c.tf.tolerance_scale},
             {"max_iterations", c.tf.max_iterations},
             {"subcell_points", c.tf.subcell_points}};
  j["rhf"] = {{"l_max", c.rhf.l_max},
              {"states_per_l", c.rhf.states_per_l},
              {"mixing", c.rhf.mixing},
              {"anderson_depth", c.rhf.anderson_depth},
              {"tolerance", c.rhf.tolerance},
              {"max_iterations", c.rhf.max_iterations},
              {"spin_degeneracy", c.rhf.spin_degeneracy},
              {"grid", radial_json(c.rhf.grid)}};
  j["scan"] = {{"z_min", c.scan.z_min}, {"z_max", c.scan.z_max}, {"dN", c.scan.dN}};
  j["r_values"] = c.r_values;
  j["samples"] = c.samples;
  j["absolute_slack"] = c.absolute_slack;
  j["relative_slack"] = c.relative_slack;
  j["densities"] = c.densities;
  j["output"] = c.output;
  j["format"] = c.format == OutputFormat::CSV ? "csv" : "json";
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j.dump(2) + "\n";
}

std::string apply_overrides(const std::string& text, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = text.empty() ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("<root>: malformed config text: ") + e.what()});
  }
  std::vector<std::string> bad;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      bad.push_back("--set " + o + ": expected key=value");
      continue;
    }
    const std::string key = o.substr(0, eq), raw = o.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }
    // "nuclei[0].z" -> "/nuclei/0/z"
    std::string ptr;
    std::string tok;
    auto flush = [&] {
      if (!tok.empty())
        ptr += "/" + tok;
      tok.clear();
    };
    for (char ch : key) {
      if (ch == '.' || ch == '[' || ch == ']')
        flush();
      else
        tok += ch;
    }
    flush();
    try {
      j[json::json_pointer(ptr)] = value;
    } catch (const json::exception& e) {
      bad.push_back("--set " + key + ": " + e.what());
    }
  }
  if (!bad.empty())
    throw ConfigError(bad);
  return j.dump();
}

double RunConfig::total_charge() const {
  double z = 0.0;
  for (const auto& n : nuclei)
    z += n.z;
  return z;
}

NuclearConfiguration RunConfig::nuclear_configuration() const {
  std::vector<Vec3> p;
  std::vector<double> q;
  for (const auto& n : nuclei) {
    p.push_back(n.pos);
    q.push_back(n.z);
  }
  return NuclearConfiguration(std::move(p), std::move(q));
}

namespace {

RadialGrid make_radial(const RadialGridSpec& g, double Z) {
  const double r_min = g.r_min > 0.0 ? g.r_min : 1e-6 / Z;
  if (!(g.r_max > r_min))
    throw ConfigError({"radial.r_max: must exceed r_min"});
  return RadialGrid(r_min, g.r_max, g.count);
}

} // namespace

RadialGrid RunConfig::radial_grid() const { return make_radial(radial, total_charge()); }

CartesianGrid3D RunConfig::cartesian_grid() const {
  Vec3 c{};
  for (const auto& n : nuclei)
    c = c + (1.0 / double(nuclei.size())) * n.pos;
  return CartesianGrid3D::cube(c, grid3d.half_width, grid3d.n);
}

SCFConfig RunConfig::scf_config() const {
  SCFConfig s;
  s.grid = make_radial(rhf.grid, total_charge());
  s.l_max = rhf.l_max;
  s.states_per_l = rhf.states_per_l;
  s.mixing = rhf.mixing;
  s.anderson_depth = rhf.anderson_depth;
  s.tolerance = rhf.tolerance;
  s.max_iterations = rhf.max_iterations;
  s.spin_degeneracy = rhf.spin_degeneracy;
  return s;
}

TFMoleculeOptions RunConfig::tf_options() const {
  TFMoleculeOptions o;
  o.tolerance_scale = tf.tolerance_scale;
  o.max_iterations = tf.max_iterations;
  o.subcell_points = tf.subcell_points;
  return o;
}

} // namespace rhftf
