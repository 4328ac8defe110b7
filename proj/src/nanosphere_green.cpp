#include "lspdyn/nanosphere_green.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "lspdyn/error.hpp"
#include "lspdyn/specfun.hpp"
#include "lspdyn/units.hpp"

namespace lspdyn {

namespace {

constexpr std::string_view kModule = "nanosphere_green";
constexpr complex kI{0.0, 1.0};

bool finite(complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_frequency(double hbar_omega) {
  if (!(hbar_omega > 0.0) || !std::isfinite(hbar_omega))
    throw Error(kModule, Errc::domain, fmt::format("frequency must be positive, got {} eV", hbar_omega));
}

void require_order(int n) {
  if (n < 1) throw Error(kModule, Errc::domain, fmt::format("multipole order must be >= 1, got {}", n));
  if (n > specfun::kMaxOrder)
    throw Error(kModule, Errc::unsupported_order, fmt::format("multipole order {} too large", n));
}

struct WaveNumbers {
  complex k1;
  complex k2;
};

WaveNumbers wave_numbers(const DrudeMetal& metal, const SystemGeometry& geom, double hbar_omega) {
  const complex eps_m = drude_permittivity(metal, hbar_omega);
  return {complex{hbar_omega * std::sqrt(geom.eps_d) / units::kHbarC, 0.0},
          hbar_omega * std::sqrt(eps_m) / units::kHbarC};
}

}  // namespace

void DrudeMetal::validate() const {
  if (!(hbar_omega_p > 0.0)) throw Error(kModule, Errc::domain, "hbar_omega_p must be > 0");
  if (!(eps_inf >= 1.0)) throw Error(kModule, Errc::domain, "eps_inf must be >= 1");
  if (!(hbar_gamma_p >= 0.0)) throw Error(kModule, Errc::domain, "hbar_gamma_p must be >= 0");
}

void SystemGeometry::validate() const {
  if (!(radius_nm > 0.0)) throw Error(kModule, Errc::domain, "radius_nm must be > 0");
  if (!(distance_nm > radius_nm))
    throw Error(kModule, Errc::domain,
                fmt::format("distance_nm ({}) must exceed radius_nm ({})", distance_nm, radius_nm));
  if (n_emitters < 1) throw Error(kModule, Errc::domain, "n_emitters must be >= 1");
  if (!(eps_d > 0.0)) throw Error(kModule, Errc::domain, "eps_d must be > 0");
  if (!(hbar_omega0 > 0.0)) throw Error(kModule, Errc::domain, "hbar_omega0 must be > 0");
  if (!(hbar_gamma0 > 0.0)) throw Error(kModule, Errc::domain, "hbar_gamma0 must be > 0");
}

complex drude_permittivity(const DrudeMetal& metal, double hbar_omega) {
  require_frequency(hbar_omega);
  const double wp2 = metal.hbar_omega_p * metal.hbar_omega_p;
  return metal.eps_inf - wp2 / (hbar_omega * complex{hbar_omega, metal.hbar_gamma_p});
}

MieCoefficients mie_coefficients(const DrudeMetal& metal, const SystemGeometry& geom, double hbar_omega,
                                 int n) {
  require_order(n);
  const auto [k1, k2] = wave_numbers(metal, geom, hbar_omega);
  const complex rho1 = k1 * geom.radius_nm;
  const complex rho2 = k2 * geom.radius_nm;

  const complex tau1 = specfun::spherical_jn(n, rho1);
  const complex tau2 = specfun::spherical_jn(n, rho2);
  const complex kappa1 = specfun::spherical_h1n(n, rho1);
  const auto d1 = specfun::riccati_derivatives(n, rho1);
  const auto d2 = specfun::riccati_derivatives(n, rho2);
  const complex dtau1 = d1.d_rho_jn;
  const complex dkappa1 = d1.d_rho_hn;
  const complex dtau2 = d2.d_rho_jn;

  const complex k1s = k1 * k1;
  const complex k2s = k2 * k2;
  const complex den_h = kappa1 * dtau2 - tau2 * dkappa1;
  const complex den_v = k2s * tau2 * dkappa1 - k1s * kappa1 * dtau2;
  if (den_h == complex{0.0, 0.0} || den_v == complex{0.0, 0.0} || !finite(den_h) || !finite(den_v))
    throw Error(kModule, Errc::pole,
                fmt::format("scattering coefficient denominator vanishes at {} eV (n = {})", hbar_omega, n));
  return {(tau2 * dtau1 - tau1 * dtau2) / den_h, (k1s * tau1 * dtau2 - k2s * tau2 * dtau1) / den_v};
}

complex quasi_static_coefficient(const DrudeMetal& metal, const SystemGeometry& geom, double hbar_omega,
                                 int n) {
  require_order(n);
  const complex eps_m = drude_permittivity(metal, hbar_omega);
  const double k1r = hbar_omega * std::sqrt(geom.eps_d) / units::kHbarC * geom.radius_nm;
  const complex den = double(n) * eps_m + double(n + 1) * geom.eps_d;
  if (den == complex{0.0, 0.0})
    throw Error(kModule, Errc::pole,
                fmt::format("quasi-static denominator vanishes at {} eV (n = {})", hbar_omega, n));
  const double log_mag = double(2 * n + 1) * std::log(k1r) + std::log(double(n + 1)) -
                         specfun::log_double_factorial(2 * n + 1) - specfun::log_double_factorial(2 * n - 1);
  return -kI * std::exp(log_mag) * (geom.eps_d - eps_m) / den;
}

std::vector<double> lsp_resonances(const DrudeMetal& metal, double eps_d, std::span<const int> orders) {
  metal.validate();
  if (!(eps_d > 0.0)) throw Error(kModule, Errc::domain, "eps_d must be > 0");
  std::vector<double> out;
  out.reserve(orders.size());
  for (const int n : orders) {
    require_order(n);
    const double target = -double(n + 1) * eps_d / double(n);
    auto f = [&](double w) { return drude_permittivity(metal, w).real() - target; };
    // Re eps_m increases monotonically with frequency.
    double lo = 1e-6;
    double hi = 100.0 * metal.hbar_omega_p;
    if (!(f(lo) < 0.0 && f(hi) > 0.0))
      throw Error(kModule, Errc::no_resonance,
                  fmt::format("no sign change of Re eps_m + {} in [{}, {}] eV", -target, lo, hi));
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) < 0.0 ? lo : hi) = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

std::vector<complex> radial_factors(const DrudeMetal& metal, const SystemGeometry& geom, double hbar_omega,
                                    int n_max, Scattering scattering) {
  require_frequency(hbar_omega);
  require_order(n_max);
  const auto [k1, k2] = wave_numbers(metal, geom, hbar_omega);
  const complex x = k1 * geom.distance_nm;
  const complex x2 = x * x;
  const auto jx = specfun::spherical_jn_array(n_max, x);

  std::vector<complex> f(std::size_t(n_max) + 1, complex{0.0, 0.0});
  for (int n = 1; n <= n_max; ++n) f[n] = jx[n] * jx[n] / x2;
  if (scattering == Scattering::none) return f;

  const auto hx = specfun::spherical_h1n_array(n_max, x);
  if (scattering == Scattering::quasi_static) {
    for (int n = 1; n <= n_max; ++n) {
      const complex h = hx[n];
      if (!finite(h * h)) break;  // remaining orders are below double range
      f[n] += quasi_static_coefficient(metal, geom, hbar_omega, n) * h * h / x2;
    }
    return f;
  }

  // R^V h(x)^2 = (R^V kappa_1) h(x) (h(x)/kappa_1); the first factor is formed
  // from log derivatives so it stays finite when tau and kappa leave double range.
  const complex rho1 = k1 * geom.radius_nm;
  const complex rho2 = k2 * geom.radius_nm;
  const auto tau1 = specfun::spherical_jn_array(n_max, rho1);
  const auto kappa1 = specfun::spherical_h1n_array(n_max, rho1);
  const auto a = specfun::jn_log_derivative_array(n_max, rho1);
  const auto b = specfun::h1n_log_derivative_array(n_max, rho1);
  const auto c = specfun::jn_log_derivative_array(n_max, rho2);
  const complex k1s = k1 * k1;
  const complex k2s = k2 * k2;
  for (int n = 1; n <= n_max; ++n) {
    const complex den = k2s * b[n] - k1s * c[n];
    if (den == complex{0.0, 0.0})
      throw Error(kModule, Errc::pole,
                  fmt::format("scattering coefficient denominator vanishes at {} eV (n = {})", hbar_omega, n));
    const complex rk = tau1[n] * (k1s * c[n] - k2s * a[n]) / den;
    const complex term = rk * hx[n] * (hx[n] / kappa1[n]) / x2;
    if (!finite(term)) break;
    f[n] += term;
  }
  return f;
}

std::vector<std::vector<double>> angular_weights(int n_max, int n_emitters) {
  require_order(n_max);
  if (n_emitters < 1) throw Error(kModule, Errc::domain, "n_emitters must be >= 1");
  const int n_sep = n_emitters / 2 + 1;
  std::vector<std::vector<double>> w(std::size_t(n_max) + 1, std::vector<double>(std::size_t(n_sep), 0.0));
  for (int n = 1; n <= n_max; ++n)
    for (int m = 0; m <= n; ++m) {
      const double c = specfun::cmn_legendre_weight(n, m);
      if (c == 0.0) continue;
      for (int s = 0; s < n_sep; ++s) {
        // m s mod N keeps the cosine argument small and exact for integer phases.
        const long phase = (long(m) * s) % n_emitters;
        w[n][s] += c * std::cos(2.0 * units::kPi * double(phase) / double(n_emitters));
      }
    }
  return w;
}

GreenValue green_rr(const DrudeMetal& metal, const SystemGeometry& geom, double hbar_omega, int l, int j,
                    int n_max, Scattering scattering) {
  const int big_n = geom.n_emitters;
  if (l < 0 || j < 0 || l >= big_n || j >= big_n)
    throw Error(kModule, Errc::domain, fmt::format("emitter indices ({}, {}) outside [0, {})", l, j, big_n));
  int s = ((l - j) % big_n + big_n) % big_n;
  s = std::min(s, big_n - s);

  const auto f = radial_factors(metal, geom, hbar_omega, n_max, scattering);
  const auto w = angular_weights(n_max, big_n);
  complex sum{0.0, 0.0};
  double abs_sum = 0.0;
  double last = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    const complex term = w[n][s] * f[n];
    sum += term;
    abs_sum += std::abs(term);
    last = std::abs(term);
  }
  const double tail = abs_sum > 0.0 ? last / abs_sum : 0.0;
  const double k1 = hbar_omega * std::sqrt(geom.eps_d) / units::kHbarC;
  return {kI * k1 / (4.0 * units::kPi) * sum, tail < kGreenTailTolerance, tail};
}

}  // namespace lspdyn
