#pragma once

/// \file spectrum_solver.hpp
/// Bound states of the circulant channels below the continuum, their
/// residues, and distance scans of the bound-state branches.

#include <iosfwd>
#include <optional>
#include <vector>

#include "lspdyn/spectral_density.hpp"

namespace lspdyn {

struct BoundState {
  int channel = 0;
  double energy = 0.0;   ///< eV, below the band (negative for a band starting at w > 0)
  double residue = 1.0;  ///< Z_l
};

/// y_l(varpi) = w0 - int D_l(w) / (w - varpi) dw, trapezoid on the table grid.
double channel_self_energy(const SpectralTable& table, int channel, double hbar_omega0, double varpi);

/// Root of y_l(varpi) = varpi below the band when y_l(0) < 0. A channel with
/// D_l == 0 returns the decoupled level (w0, Z = 1).
/// Throws Errc::precision when trapezoid and Simpson differ by more than 1e-6.
std::optional<BoundState> find_bound_state(const SpectralTable& table, int channel, double hbar_omega0);

/// |E - w0 - int D_l / (E - w) dw| with its own quadrature loop.
double eigen_residual(const SpectralTable& table, int channel, double energy, double hbar_omega0);

/// N = 2 only: (1/2)[1 + int (J_0 +- J_1)/(E - w)^2 dw]^-1 with + for channel 0.
/// Throws Errc::absent_state for a missing bound state.
double bound_state_population(const SpectralTable& table, const std::optional<BoundState>& bound);

/// Distinct channels l = 0..N/2; l and N - l share D.
std::vector<int> distinct_channels(int n_emitters);

struct SpectrumPoint {
  double r_nm = 0.0;
  std::vector<BoundState> bound;  ///< one entry per bound channel
};

struct SpectrumScan {
  int n_emitters = 0;
  std::vector<int> channels;
  std::vector<SpectrumPoint> points;
  double band_edge = 0.0;  ///< continuum support starts above this energy
};

struct ScanOptions {
  TableOptions table;
  FrequencyGrid grid;
};

/// One spectral table per distance; each point is independent and runs on
/// options.table.workers threads.
SpectrumScan scan_spectrum(const DrudeMetal& metal, const SystemGeometry& geom, const std::vector<double>& r_values,
                           const std::vector<int>& channels, const ScanOptions& options);

/// Columns r_nm, channel, bound_energy_eV, residue.
void write_scan_csv(const SpectrumScan& scan, std::ostream& out);

/// Distance at which channel l acquires its bound state, i.e. int D_l / w dw = w0,
/// found by bisection in [r_lo, r_hi] to `tol_nm`. Returns nullopt when the
/// binding condition does not change sign in the interval.
std::optional<double> bound_threshold(const DrudeMetal& metal, const SystemGeometry& geom, int channel, double r_lo,
                                      double r_hi, const ScanOptions& options, double tol_nm = 1e-4);

}  // namespace lspdyn
