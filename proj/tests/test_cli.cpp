#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rhftf/config.hpp"

using namespace rhftf;
namespace fs = std::filesystem;

namespace {

const char* minimal = R"({"command": "tf-atom", "nuclei": [{"pos": [0, 0, 0], "z": 1}]})";

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& ps, const std::string& needle) {
  for (const auto& p : ps)
    if (p.find(needle) != std::string::npos)
      return true;
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string(RHFTF_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rhftf_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

} // namespace

TEST_CASE("config: minimal file and defaults") {
  const auto c = parse_config(minimal);
  CHECK(c.command == "tf-atom");
  REQUIRE(c.nuclei.size() == 1);
  CHECK(c.total_charge() == 1.0);
  CHECK(c.electrons() == 1.0);
  CHECK_FALSE(c.N.has_value());
  CHECK(c.radial_grid().r_min() == doctest::Approx(1e-6));
  CHECK(c.rhf.spin_degeneracy == 1);
  CHECK(c.grid3d.n == 64);
  CHECK(c.format == OutputFormat::CSV);
}

TEST_CASE("config: field-level errors") {
  auto ps = problems_of(R"({"nuclei": [{"pos": [0, 0, 0], "z": -1}]})");
  CHECK(mentions(ps, "nuclei[0].z"));

  ps = problems_of(R"({"nuclei": [{"pos": [0, 0, 0], "z": 1}, {"pos": [0, 0, 0], "z": 2}]})");
  CHECK(mentions(ps, "nuclei[1].pos"));
  CHECK(mentions(ps, "R_min = 0"));

  // Every problem is reported, not just the first.
  ps = problems_of(R"({"command": "nope", "nuclei": [{"pos": [0, 0], "z": 1}], "rhf": {"l_max": "x"}, "colour": 1})");
  CHECK(ps.size() >= 4);
  CHECK(mentions(ps, "command"));
  CHECK(mentions(ps, "nuclei[0].pos"));
  CHECK(mentions(ps, "rhf.l_max"));
  CHECK(mentions(ps, "colour"));

  CHECK(mentions(problems_of("{"), "malformed"));
  CHECK(mentions(problems_of(R"({"nuclei": []})"), "nuclei"));
  CHECK(mentions(problems_of(R"({"nuclei": [{"pos": [0, 0, 0], "z": 1}], "N": -0.5})"), "N"));
  CHECK(mentions(problems_of(R"({"nuclei": [{"pos": [0, 0, 0], "z": 1}], "format": "xml"})"), "format"));
}

TEST_CASE("config: emit and parse round trip") {
  auto c = parse_config(minimal);
  CHECK(parse_config(emit_config(c)) == c);
  c.nuclei.push_back({{1.5, -0.25, 1.0 / 3.0}, 2.5});
  c.N = 2.75;
  c.r_values = {0.1, 0.2};
  c.rhf.l_max = 4;
  c.rhf.grid.count = 3000;
  c.format = OutputFormat::JSON;
  c.seed = 987654321987ULL;
  c.scan.dN = 0.025;
  CHECK(parse_config(emit_config(c)) == c);
  CHECK(emit_config(parse_config(emit_config(c))) == emit_config(c));
}

TEST_CASE("config: overrides") {
  const auto c = parse_config(apply_overrides(minimal, {"nuclei[0].z=2", "rhf.l_max=4", "output=out dir", "N=1.5"}));
  CHECK(c.nuclei[0].z == 2.0);
  CHECK(c.rhf.l_max == 4);
  CHECK(c.output == "out dir");
  CHECK(c.N == 1.5);
  CHECK_THROWS_AS(apply_overrides(minimal, {"novalue"}), ConfigError);
}

TEST_CASE("cli: exit codes") {
  const auto dir = scratch("codes");
  std::ofstream(dir / "bad.json") << R"({"nuclei": [{"pos": [0, 0, 0], "z": -1}]})";
  CHECK(run("tf-atom --config " + (dir / "bad.json").string()) == 2);
  CHECK(run("--help") == 0);
  CHECK(run("--no-such-flag") == 2);
  CHECK(run("warp-drive --set 'nuclei=[{\"pos\":[0,0,0],\"z\":1}]'") == 2);
  // A solver that cannot converge is a failure, not a config error.
  CHECK(run("rhf-atom --out " + dir.string() +
            " --set 'nuclei=[{\"pos\":[0,0,0],\"z\":2}]' --set rhf.max_iterations=1 --set rhf.grid.count=400") == 1);
  fs::remove_all(dir);
}

TEST_CASE("cli: outputs are deterministic and complete") {
  const auto a = scratch("a"), b = scratch("b");
  const std::string args = "tf-atom --set 'nuclei=[{\"pos\":[0,0,0],\"z\":2}]' --set radial.count=800 --out ";
  REQUIRE(run(args + a.string()) == 0);
  REQUIRE(run(args + b.string()) == 0);
  for (const char* f : {"tf-atom.csv", "tf-atom_summary.json"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "tf-atom.csv").rfind("r,phi,rho\n", 0) == 0);
  const auto summary = nlohmann::json::parse(slurp(a / "tf-atom_summary.json"));
  CHECK(summary.contains("energy"));

  const auto j = scratch("j");
  REQUIRE(run("coulomb-check --format json --set densities=3 --set 'nuclei=[{\"pos\":[0,0,0],\"z\":1}]' --out " + j.string()) == 0);
  const auto doc = nlohmann::json::parse(slurp(j / "coulomb-check.json"));
  CHECK(doc.contains("summary"));
  CHECK(doc.contains("tables"));
  // Nothing half-written is left behind.
  for (const auto& e : fs::directory_iterator(j))
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  for (const auto& d : {a, b, j})
    fs::remove_all(d);
}
