#pragma once

// W-state evolution of the full N-emitter system in the site basis, compared
// with the scalar solve of the D_0 channel.

#include <algorithm>
#include <complex>
#include <vector>

#include "lspdyn/dynamics.hpp"
#include "lspdyn/units.hpp"
#include "oracles.hpp"

struct SuperatomDeviation {
  double symmetric = 0.0;  ///< max |cbar_0(site solve) - scalar D_0 solve|
  double others = 0.0;     ///< max |cbar_j|, j != 0
};

inline SuperatomDeviation superatom_deviation(const lspdyn::SpectralTable& table, double w0, double t_max,
                                              double dt) {
  using cd = std::complex<double>;
  const int n = table.n_emitters;
  const auto time = lspdyn::TimeGrid::covering(t_max, dt);

  // Site kernel from the J rows by ring separation; V is never used here.
  const auto raw = lspdyn::table_from_channels(table.grid, table.j_rows);
  std::vector<int> rows;
  for (std::size_t s = 0; s < table.j_rows.size(); ++s) rows.push_back(int(s));
  const auto ks = lspdyn::synthesize_kernel(raw, time, w0, rows);
  const std::size_t n_int = ks.m0[0].size();
  std::vector<std::vector<cd>> m0(n_int, std::vector<cd>(std::size_t(n * n))), m1 = m0;
  for (std::size_t q = 0; q < n_int; ++q)
    for (int l = 0; l < n; ++l)
      for (int j = 0; j < n; ++j) {
        const int s = std::min((l - j + n) % n, (j - l + n) % n);
        m0[q][std::size_t(l * n + j)] = ks.m0[std::size_t(s)][q];
        m1[q][std::size_t(l * n + j)] = ks.m1[std::size_t(s)][q];
      }
  const std::vector<cd> w_state(std::size_t(n), 1.0 / std::sqrt(double(n)));
  const auto site = oracle::site_volterra(m0, m1, n, w_state);

  // Scalar solve of the symmetric channel alone.
  const auto kd = lspdyn::synthesize_kernel(table, time, w0, {0});
  const auto scalar = lspdyn::solve_volterra(kd, 0, 1.0);

  // Channel amplitudes cbar = V^-1 c by direct DFT sums.
  SuperatomDeviation dev;
  const double pi = lspdyn::units::kPi;
  for (std::size_t k = 0; k < site.size(); ++k) {
    const cd phase = std::polar(1.0, -w0 * time.t(int(k)) / lspdyn::units::kHbarFs);
    for (int l = 0; l < n; ++l) {
      cd s{0.0, 0.0};
      for (int j = 0; j < n; ++j) s += std::polar(1.0, -2.0 * pi * l * j / n) * site[k][std::size_t(j)];
      s *= phase / std::sqrt(double(n));
      if (l == 0)
        dev.symmetric = std::max(dev.symmetric, std::abs(s - scalar[k]));
      else
        dev.others = std::max(dev.others, std::abs(s));
    }
  }
  return dev;
}
