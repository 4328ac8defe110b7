#include "cli/presets.hpp"

#include <fmt/format.h>

namespace lspdyn::cli {

namespace {

// Silver sphere R = 5 nm in vacuum, w0 = 0.8 eV, gamma0 = 0.1 meV.
RunConfig base(const std::string& name, int count) {
  RunConfig c;
  c.name = name;
  c.geom.n_emitters = count;
  return c;
}

Sweep distances(std::vector<double> values) { return {SweepParameter::distance_nm, std::move(values)}; }
Sweep counts(std::vector<double> values) { return {SweepParameter::count, std::move(values)}; }

std::vector<double> range(double start, double stop, double step) {
  std::vector<double> out;
  for (int i = 0; start + i * step <= stop + 1e-9; ++i) out.push_back(start + i * step);
  return out;
}

std::vector<RunConfig> fig2() {
  auto dyn = base("fig2_dynamics", 2);
  dyn.sweep = distances({8.0, 9.0, 9.5});
  auto scan = base("fig2_scan", 2);
  scan.kind = ScenarioKind::spectrum_scan;
  scan.sweep = distances(range(7.0, 11.0, 0.1));
  return {dyn, scan};
}

std::vector<RunConfig> fig3() {
  auto dyn = base("fig3_dynamics", 2);
  dyn.initial = InitialKind::w_state;
  dyn.geom.distance_nm = 9.5;
  // The D_0 bound state appears near N = 25 at this distance; N = 30 shows trapping.
  dyn.sweep = counts({2, 4, 8, 30});
  auto bound = base("fig3_bound", 2);
  bound.kind = ScenarioKind::spectrum_scan;
  bound.geom.distance_nm = 9.5;
  bound.sweep = counts(range(1, 40, 1));
  auto density = base("fig3_density", 2);
  density.kind = ScenarioKind::spectral_density;
  density.sweep = counts({2, 4, 8});
  return {dyn, bound, density};
}

std::vector<RunConfig> fig4() {
  // N = 4 binds channels 1 and 3 below 9.03 nm and channel 2 below 8.73 nm.
  auto dyn = base("fig4_dynamics", 4);
  dyn.sweep = distances({8.0, 9.5});
  // Inside the narrow trapping window the band-edge transient decays slowly.
  auto trap = base("fig4_trapping", 4);
  trap.geom.distance_nm = 8.95;
  trap.numerics.t_max_fs = 5000.0;
  trap.numerics.dt_fs = 0.002;
  trap.numerics.grid.n_points = 24001;
  auto scan = base("fig4_scan", 4);
  scan.kind = ScenarioKind::spectrum_scan;
  scan.sweep = distances(range(7.0, 12.0, 0.1));
  return {dyn, trap, scan};
}

}  // namespace

std::vector<std::string_view> preset_names() { return {"fig2", "fig3", "fig4"}; }

std::vector<RunConfig> preset(std::string_view name) {
  if (name == "fig2") return fig2();
  if (name == "fig3") return fig3();
  if (name == "fig4") return fig4();
  throw ConfigError("preset", fmt::format("unknown preset '{}' (expected fig2, fig3 or fig4)", name));
}

}  // namespace lspdyn::cli
