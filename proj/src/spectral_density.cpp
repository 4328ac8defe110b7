#include "lspdyn/spectral_density.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "lspdyn/error.hpp"
#include "lspdyn/units.hpp"

namespace lspdyn {

namespace {

constexpr std::string_view kModule = "spectral_density";

// cos/sin of 2 pi k / N with the integer phase reduced first.
double cos_phase(long k, int n) { return std::cos(2.0 * units::kPi * double(((k % n) + n) % n) / double(n)); }
double sin_phase(long k, int n) { return std::sin(2.0 * units::kPi * double(((k % n) + n) % n) / double(n)); }

}  // namespace

void FrequencyGrid::validate() const {
  if (!(omega_min > 0.0)) throw Error(kModule, Errc::domain, "omega_min must be > 0");
  if (!(omega_max > omega_min)) throw Error(kModule, Errc::domain, "omega_max must exceed omega_min");
  if (n_points < 3) throw Error(kModule, Errc::domain, "omega grid needs at least 3 points");
}

std::vector<double> FrequencyGrid::points() const {
  std::vector<double> w(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) w[i] = at(i);
  w.back() = omega_max;
  return w;
}

double SpectralTable::j_element(int l, int j, std::size_t i) const {
  int s = ((l - j) % n_emitters + n_emitters) % n_emitters;
  s = std::min(s, n_emitters - s);
  return j_rows[std::size_t(s)][i];
}

SpectralTable build_spectral_table(const DrudeMetal& metal, const SystemGeometry& geom, const FrequencyGrid& grid,
                                   const TableOptions& options) {
  metal.validate();
  geom.validate();
  grid.validate();

  SpectralTable table;
  table.n_emitters = geom.n_emitters;
  table.grid = grid;
  table.omega = grid.points();
  const int n_sep = geom.n_emitters / 2 + 1;
  const std::size_t n_w = table.omega.size();
  table.j_rows.assign(std::size_t(n_sep), std::vector<double>(n_w, 0.0));

  const auto weights = angular_weights(options.n_max, geom.n_emitters);
  const double w0_3 = geom.hbar_omega0 * geom.hbar_omega0 * geom.hbar_omega0;
  const double pre_scale = 3.0 * geom.hbar_gamma0 * std::sqrt(geom.eps_d) / (4.0 * units::kPi * w0_3);

  std::vector<double> tails(n_w, 0.0);
  auto evaluate = [&](std::size_t i) {
    const double w = table.omega[i];
    const auto f = radial_factors(metal, geom, w, options.n_max, options.scattering);
    const double pre = pre_scale * w * w * w;
    for (int s = 0; s < n_sep; ++s) {
      double sum = 0.0;
      for (int n = 1; n <= options.n_max; ++n) sum += weights[n][s] * f[n].real();
      table.j_rows[s][i] = pre * sum;
    }
    double abs_sum = 0.0;
    for (int n = 1; n <= options.n_max; ++n) abs_sum += std::abs(weights[n][0] * f[n]);
    tails[i] = abs_sum > 0.0 ? std::abs(weights[options.n_max][0] * f[options.n_max]) / abs_sum : 0.0;
  };

  const int workers = std::max(1, std::min<int>(options.workers, int(n_w)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n_w; ++i) evaluate(i);
  } else {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = std::size_t(t); i < n_w; i += std::size_t(workers)) evaluate(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (const double t : tails) {
    table.max_tail = std::max(table.max_tail, t);
    if (t >= kGreenTailTolerance) ++table.non_converged_points;
  }
  return circulant_channels(std::move(table));
}

SpectralTable circulant_channels(SpectralTable table) {
  const int n = table.n_emitters;
  if (table.j_rows.empty()) throw Error(kModule, Errc::domain, "spectral table has no J rows");
  const std::size_t n_w = table.size();
  table.d_channels.assign(std::size_t(n), std::vector<double>(n_w, 0.0));
  for (int l = 0; l < n; ++l)
    for (std::size_t i = 0; i < n_w; ++i) {
      double re = 0.0;
      double im = 0.0;
      double scale = 0.0;
      for (int j = 0; j < n; ++j) {
        const double jj = table.j_element(0, j, i);
        re += jj * cos_phase(long(l) * j, n);
        im += jj * sin_phase(long(l) * j, n);
        scale += std::abs(jj);
      }
      if (std::abs(im) > 1e-10 * std::max(std::abs(re), scale))
        throw Error(kModule, Errc::numerical_symmetry,
                    fmt::format("channel {} keeps imaginary part {} at {} eV", l, im, table.omega[i]));
      table.d_channels[l][i] = re;
    }
  // D_l and D_{N-l} agree analytically; make them agree bit for bit
  for (int l = n / 2 + 1; l < n; ++l) table.d_channels[std::size_t(l)] = table.d_channels[std::size_t(n - l)];
  return table;
}

SpectralTable table_from_channels(const FrequencyGrid& grid, std::vector<std::vector<double>> channels) {
  grid.validate();
  SpectralTable table;
  table.grid = grid;
  table.omega = grid.points();
  table.n_emitters = int(channels.size());
  for (const auto& c : channels)
    if (c.size() != table.omega.size())
      throw Error(kModule, Errc::domain, "channel length does not match the frequency grid");
  table.d_channels = std::move(channels);
  return table;
}

TransformMatrix transform_matrix(int n) {
  if (n < 1) throw Error(kModule, Errc::domain, "transform size must be >= 1");
  TransformMatrix t;
  t.n = n;
  t.v.resize(std::size_t(n) * n);
  t.v_inv.resize(std::size_t(n) * n);
  const double norm = 1.0 / std::sqrt(double(n));
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      const std::complex<double> e{cos_phase(long(j) * l, n), sin_phase(long(j) * l, n)};
      t.v[std::size_t(j) * n + l] = norm * e;
      t.v_inv[std::size_t(l) * n + j] = norm * std::conj(e);
    }
  return t;
}

std::vector<std::complex<double>> TransformMatrix::apply(const std::vector<std::complex<double>>& y) const {
  std::vector<std::complex<double>> x(std::size_t(n), 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) x[r] += at(r, c) * y[c];
  return x;
}

std::vector<std::complex<double>> TransformMatrix::apply_inverse(const std::vector<std::complex<double>>& x) const {
  std::vector<std::complex<double>> y(std::size_t(n), 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) y[r] += inv_at(r, c) * x[c];
  return y;
}

void write_spectral_csv(const SpectralTable& table, std::ostream& out) {
  out << "omega_eV";
  for (std::size_t s = 0; s < table.j_rows.size(); ++s) out << ",J_" << s;
  for (std::size_t l = 0; l < table.d_channels.size(); ++l) out << ",D_" << l;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << fmt::format("{:.10g}", table.omega[i]);
    for (const auto& row : table.j_rows) out << fmt::format(",{:.12e}", row[i]);
    for (const auto& row : table.d_channels) out << fmt::format(",{:.12e}", row[i]);
    out << '\n';
  }
}

}  // namespace lspdyn
