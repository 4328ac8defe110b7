#include "lspdyn/spectrum_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "lspdyn/error.hpp"
#include "lspdyn/quadrature.hpp"

namespace lspdyn {

namespace {

constexpr std::string_view kModule = "spectrum_solver";
constexpr double kQuadratureAgreement = 1e-6;
constexpr double kRootTolerance = 1e-12;
constexpr double kLowestBracket = -50.0;

const std::vector<double>& channel_row(const SpectralTable& table, int channel) {
  if (channel < 0 || channel >= int(table.d_channels.size()))
    throw Error(kModule, Errc::domain,
                fmt::format("channel {} outside [0, {})", channel, table.d_channels.size()));
  return table.d_channels[std::size_t(channel)];
}

bool identically_zero(const std::vector<double>& d) {
  return std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
}

// int D(w) g(w) dw by trapezoid, cross-checked against Simpson.
double checked_integral(const SpectralTable& table, const std::vector<double>& d, auto&& g, const char* what) {
  std::vector<double> f(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) f[i] = d[i] * g(table.omega[i]);
  const double h = table.grid.step();
  const double trap = quad::trapezoid(f, h);
  const double simp = quad::simpson(f, h);
  const double scale = std::max(std::abs(trap), std::abs(simp));
  if (scale > 0.0 && std::abs(trap - simp) > kQuadratureAgreement * scale)
    throw Error(kModule, Errc::precision,
                fmt::format("{}: trapezoid {} and Simpson {} disagree by {:.2e} (relative); refine the omega grid",
                            what, trap, simp, std::abs(trap - simp) / scale));
  return trap;
}

}  // namespace

double channel_self_energy(const SpectralTable& table, int channel, double hbar_omega0, double varpi) {
  const auto& d = channel_row(table, channel);
  if (varpi >= table.omega.front())
    throw Error(kModule, Errc::domain, fmt::format("energy {} eV is not below the band", varpi));
  std::vector<double> f(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) f[i] = d[i] / (table.omega[i] - varpi);
  return hbar_omega0 - quad::trapezoid(f, table.grid.step());
}

std::optional<BoundState> find_bound_state(const SpectralTable& table, int channel, double hbar_omega0) {
  const auto& d = channel_row(table, channel);
  if (identically_zero(d)) return BoundState{channel, hbar_omega0, 1.0};

  const double coupling = checked_integral(table, d, [](double w) { return 1.0 / w; }, "int D/w");
  if (hbar_omega0 - coupling >= 0.0) return std::nullopt;

  // g(v) = y(v) - v decreases strictly; g(0) < 0 here.
  auto g = [&](double v) { return channel_self_energy(table, channel, hbar_omega0, v) - v; };
  double hi = 0.0;
  double lo = -2.0 * hbar_omega0;
  while (g(lo) < 0.0) {
    if (lo <= kLowestBracket)
      throw Error(kModule, Errc::convergence,
                  fmt::format("channel {}: no sign change of y(v) - v above {} eV", channel, kLowestBracket));
    hi = lo;
    lo = std::max(2.0 * lo, kLowestBracket);
  }
  for (int it = 0; it < 200 && hi - lo > kRootTolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  const double energy = 0.5 * (lo + hi);
  const double slope =
      checked_integral(table, d, [energy](double w) { return 1.0 / ((w - energy) * (w - energy)); }, "int D/(w-E)^2");
  return BoundState{channel, energy, 1.0 / (1.0 + slope)};
}

double eigen_residual(const SpectralTable& table, int channel, double energy, double hbar_omega0) {
  const auto& d = channel_row(table, channel);
  const double h = table.grid.step();
  const std::size_t n = d.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] == 0.0) continue;
    const double wt = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    acc += wt * d[i] / (energy - table.omega[i]);
  }
  return std::abs(energy - hbar_omega0 - acc * h);
}

double bound_state_population(const SpectralTable& table, const std::optional<BoundState>& bound) {
  if (table.n_emitters != 2 || table.j_rows.size() != 2)
    throw Error(kModule, Errc::unsupported, "bound-state populations are defined for N = 2 tables");
  if (!bound) throw Error(kModule, Errc::absent_state, "no bound state in this channel");
  if (bound->channel != 0 && bound->channel != 1)
    throw Error(kModule, Errc::domain, "N = 2 channel must be 0 or 1");
  const double sign = bound->channel == 0 ? 1.0 : -1.0;
  std::vector<double> d(table.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = table.j_rows[0][i] + sign * table.j_rows[1][i];
  const double e = bound->energy;
  const double slope =
      checked_integral(table, d, [e](double w) { return 1.0 / ((e - w) * (e - w)); }, "int (J0+-J1)/(E-w)^2");
  return 0.5 / (1.0 + slope);
}

std::vector<int> distinct_channels(int n_emitters) {
  std::vector<int> out;
  for (int l = 0; l <= n_emitters / 2; ++l) out.push_back(l);
  return out;
}

SpectrumScan scan_spectrum(const DrudeMetal& metal, const SystemGeometry& geom, const std::vector<double>& r_values,
                           const std::vector<int>& channels, const ScanOptions& options) {
  SpectrumScan scan;
  scan.n_emitters = geom.n_emitters;
  scan.channels = channels;
  scan.band_edge = 0.0;
  for (const double r : r_values) {
    if (!(r > geom.radius_nm))
      throw Error(kModule, Errc::domain, fmt::format("scan distance {} nm is inside the sphere", r));
    SystemGeometry g = geom;
    g.distance_nm = r;
    const auto table = build_spectral_table(metal, g, options.grid, options.table);
    SpectrumPoint point{r, {}};
    for (const int l : channels)
      if (auto b = find_bound_state(table, l, geom.hbar_omega0)) point.bound.push_back(*b);
    scan.points.push_back(std::move(point));
  }
  return scan;
}

void write_scan_csv(const SpectrumScan& scan, std::ostream& out) {
  out << "r_nm,channel,bound_energy_eV,residue\n";
  for (const auto& p : scan.points)
    for (const auto& b : p.bound) out << fmt::format("{:.6f},{},{:.12f},{:.12f}\n", p.r_nm, b.channel, b.energy, b.residue);
}

std::optional<double> bound_threshold(const DrudeMetal& metal, const SystemGeometry& geom, int channel, double r_lo,
                                      double r_hi, const ScanOptions& options, double tol_nm) {
  auto excess = [&](double r) {
    SystemGeometry g = geom;
    g.distance_nm = r;
    const auto table = build_spectral_table(metal, g, options.grid, options.table);
    const auto& d = channel_row(table, channel);
    return checked_integral(table, d, [](double w) { return 1.0 / w; }, "int D/w") - geom.hbar_omega0;
  };
  double lo = r_lo;
  double hi = r_hi;
  const double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (!(f_lo > 0.0 && f_hi <= 0.0)) return std::nullopt;
  while (hi - lo > tol_nm) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace lspdyn
