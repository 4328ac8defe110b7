#pragma once

/// \file spectral_density.hpp
/// Correlated spectral densities J_s(w) of the emitter ring and their
/// circulant eigen-channels D_l(w).

#include <complex>
#include <iosfwd>
#include <vector>

#include "lspdyn/nanosphere_green.hpp"

namespace lspdyn {

/// Uniform frequency grid omega_min..omega_max [eV] with n_points samples.
struct FrequencyGrid {
  double omega_min = 0.01;
  double omega_max = 8.0;
  int n_points = 12001;

  void validate() const;
  double step() const { return (omega_max - omega_min) / double(n_points - 1); }
  double at(int i) const { return omega_min + double(i) * step(); }
  std::vector<double> points() const;
};

struct SpectralTable {
  int n_emitters = 1;
  FrequencyGrid grid;
  std::vector<double> omega;
  /// J_s(w) for s = 0..N/2 in eV (rate density), indexed [s][i].
  std::vector<std::vector<double>> j_rows;
  /// D_l(w) for l = 0..N-1, indexed [l][i]. Empty until circulant_channels().
  std::vector<std::vector<double>> d_channels;

  int non_converged_points = 0;  ///< grid points whose multipole tail exceeded tolerance
  double max_tail = 0.0;

  std::size_t size() const { return omega.size(); }
  /// J_lj(w_i) by ring separation.
  double j_element(int l, int j, std::size_t i) const;
};

struct TableOptions {
  int n_max = 30;
  Scattering scattering = Scattering::full;
  int workers = 1;
};

SpectralTable build_spectral_table(const DrudeMetal& metal, const SystemGeometry& geom, const FrequencyGrid& grid,
                                   const TableOptions& options = {});

/// Fills d_channels. Throws Errc::numerical_symmetry when the imaginary
/// residue of a channel exceeds 1e-10 of its scale.
SpectralTable circulant_channels(SpectralTable table);

/// Table holding caller-supplied channels directly (synthetic spectra and
/// tests). j_rows stays empty.
SpectralTable table_from_channels(const FrequencyGrid& grid, std::vector<std::vector<double>> channels);

/// Normalised DFT matrix, V_jl = exp(2 pi i j l / N) / sqrt(N), row-major.
struct TransformMatrix {
  int n = 1;
  std::vector<std::complex<double>> v;
  std::vector<std::complex<double>> v_inv;

  std::complex<double> at(int row, int col) const { return v[std::size_t(row) * n + col]; }
  std::complex<double> inv_at(int row, int col) const { return v_inv[std::size_t(row) * n + col]; }
  /// x = V y
  std::vector<std::complex<double>> apply(const std::vector<std::complex<double>>& y) const;
  /// y = V^-1 x
  std::vector<std::complex<double>> apply_inverse(const std::vector<std::complex<double>>& x) const;
};

TransformMatrix transform_matrix(int n);

/// Writes columns omega_eV, J_0..J_s, D_0..D_{N-1} (header line included).
void write_spectral_csv(const SpectralTable& table, std::ostream& out);

}  // namespace lspdyn
