#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/config.hpp"
#include "cli/plot_svg.hpp"
#include "cli/presets.hpp"
#include "cli/runner.hpp"

using namespace lspdyn;
using namespace lspdyn::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lspdyn_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmall = R"(name: sd
medium:
  eps_d: 1.0
emitters:
  count: 2
  distance_nm: 8.0
numerics:
  omega_points: 801
scenario:
  kind: spectral_density
)";

int run_exe(const std::string& args) {
  const char* exe = std::getenv("LSPDYN_EXE");
  REQUIRE(exe != nullptr);
  const int status = std::system((std::string(exe) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("YAML scalars and defaults") {
  const auto doc = yaml_to_json("a: 1\nb: 2.5\nc: true\nd: text\ne: [1, 2]\n");
  CHECK(doc["a"].is_number_integer());
  CHECK(doc["b"].get<double>() == 2.5);
  CHECK(doc["c"].get<bool>());
  CHECK(doc["d"] == "text");
  CHECK(doc["e"].size() == 2);

  const auto cfg = parse_config(yaml_to_json(kSmall));
  CHECK(cfg.name == "sd");
  CHECK(cfg.kind == ScenarioKind::spectral_density);
  CHECK(cfg.geom.n_emitters == 2);
  CHECK(cfg.numerics.grid.n_points == 801);
  CHECK(cfg.numerics.dt_fs == 0.001);
  CHECK(cfg.points().empty());
  CHECK(cfg.notes.empty());

  // resolved form parses back to the same thing
  const auto again = parse_config(to_json(cfg));
  CHECK(to_json(again) == to_json(cfg));
}

TEST_CASE("schema errors name the key") {
  auto key_of = [](const std::string& yaml) -> std::string {
    try {
      parse_config(yaml_to_json(yaml));
    } catch (const ConfigError& e) {
      return e.key_path();
    }
    return "<accepted>";
  };
  CHECK(key_of("sphere:\n  colour: red\n") == "sphere.colour");
  CHECK(key_of("emitters:\n  count: 0\n") == "emitters.count");
  CHECK(key_of("emitters:\n  distance_nm: 4.0\n") == "emitters.distance_nm");
  CHECK(key_of("numerics:\n  dt_fs: -1\n") == "numerics.dt_fs");
  CHECK(key_of("scenario:\n  kind: nonsense\n") == "scenario.kind");
  CHECK(key_of("scenario:\n  kind: spectrum_scan\n") == "scenario.sweep");
  CHECK(key_of("scenario:\n  sweep:\n    parameter: distance_nm\n    values: [8, 9]\n    start: 1\n") ==
        "scenario.sweep.start");
  CHECK_THROWS_AS(yaml_to_json("a: [1, 2\n"), ConfigError);
}

TEST_CASE("missing eps_d is reported") {
  const auto cfg = parse_config(yaml_to_json("emitters:\n  count: 2\n"));
  REQUIRE(cfg.notes.size() == 1);
  CHECK(cfg.notes[0].find("eps_d") != std::string::npos);
  CHECK(cfg.geom.eps_d == 1.0);
}

TEST_CASE("sweeps") {
  const auto cfg = parse_config(yaml_to_json(
      "scenario:\n  kind: spectrum_scan\n  sweep:\n    parameter: distance_nm\n    start: 7\n    stop: 8\n    step: 0.25\n"));
  REQUIRE(cfg.sweep);
  CHECK(cfg.points().size() == 5);
  CHECK(cfg.geometry_at(7.5).distance_nm == 7.5);
  const auto counts = parse_config(
      yaml_to_json("scenario:\n  sweep:\n    parameter: count\n    values: [2, 4]\n"));
  CHECK(counts.geometry_at(4).n_emitters == 4);
}

TEST_CASE("empty sweep warns and writes no images") {
  const auto dir = scratch("empty");
  auto cfg = parse_config(yaml_to_json("scenario:\n  kind: steady_sweep\n  sweep:\n    values: []\n"));
  RunOptions o;
  o.out_dir = dir;
  o.emit_plots = true;
  std::ostringstream log;
  const auto report = run_jobs({cfg}, o, log);
  CHECK(report.warnings.size() == 1);
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".svg");
}

TEST_CASE("spectral density job with a plot") {
  const auto dir = scratch("sd");
  RunOptions o;
  o.out_dir = dir;
  o.emit_plots = true;
  std::ostringstream log;
  const auto report = run_jobs({parse_config(yaml_to_json(kSmall))}, o, log);
  CHECK(report.warnings.empty());
  for (const char* f : {"sd.csv", "sd_convergence.json", "sd_D0.svg", "manifest.json"}) CHECK(fs::exists(dir / f));
  const auto svg = slurp(dir / "sd_D0.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("n=1 3.77 eV") != std::string::npos);
  CHECK(svg.find("n=2 3.94 eV") != std::string::npos);
  const auto csv = slurp(dir / "sd.csv");
  CHECK(csv.find("omega_eV,J_0,J_1,D_0,D_1\n") != std::string::npos);
}

TEST_CASE("SVG escapes text") {
  PlotSpec spec{"a < b & c", "x", "y", {{"s", {0.0, 1.0}, {0.0, 1.0}}}, {}, std::nullopt};
  const auto svg = render_svg(spec);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
}

TEST_CASE("presets") {
  CHECK(preset_names().size() == 3);
  for (auto name : preset_names()) CHECK_FALSE(preset(name).empty());
  CHECK_THROWS_AS(preset("fig9"), ConfigError);
  const auto fig2 = preset("fig2");
  REQUIRE(fig2.size() == 2);
  CHECK(fig2[0].kind == ScenarioKind::dynamics);
  CHECK(fig2[0].points() == std::vector<double>{8.0, 9.0, 9.5});
  CHECK(fig2[1].kind == ScenarioKind::spectrum_scan);
  const auto fig3 = preset("fig3");
  CHECK(fig3[0].initial == InitialKind::w_state);
}

TEST_CASE("executable: exit codes and reproducible output") {
  const auto dir = scratch("exe");
  write(dir / "ok.yaml", kSmall);
  write(dir / "bad.yaml", "sphere:\n  colour: red\n");
  CHECK(run_exe("validate " + (dir / "ok.yaml").string()) == 0);
  CHECK(run_exe("validate " + (dir / "bad.yaml").string()) == 2);
  CHECK(run_exe("validate " + (dir / "missing.yaml").string()) == 2);
  CHECK(run_exe("frobnicate") == 2);

  const auto a = dir / "a", b = dir / "b";
  REQUIRE(run_exe("run " + (dir / "ok.yaml").string() + " --out-dir " + a.string()) == 0);
  REQUIRE(run_exe("run " + (dir / "ok.yaml").string() + " --out-dir " + b.string()) == 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().filename() == "manifest.json") continue;
    CAPTURE(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    ++compared;
  }
  CHECK(compared >= 2);
}
