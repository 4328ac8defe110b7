#include "lspdyn/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lspdyn/error.hpp"

namespace lspdyn::specfun {

namespace {

constexpr std::string_view kModule = "specfun";
constexpr complex kI{0.0, 1.0};

bool finite(complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void check_order(int n) {
  if (n < 0) throw Error(kModule, Errc::domain, "negative order " + std::to_string(n));
  if (n > kMaxOrder)
    throw Error(kModule, Errc::unsupported_order,
                "order " + std::to_string(n) + " exceeds supported maximum " +
                    std::to_string(kMaxOrder));
}

void check_argument(complex z) {
  if (!finite(z)) throw Error(kModule, Errc::domain, "non-finite argument");
}

// Power series j_n(z) = z^n sum_k (-z^2/2)^k / (k! (2n+2k+1)!!), used for the
// two anchor orders when |z| is small enough that the closed forms cancel.
complex jn_series(int n, complex z) {
  complex lead = 1.0;
  for (int k = 1; k <= n; ++k) lead *= z / double(2 * k + 1);
  const complex q = -0.5 * z * z;
  complex term = lead;
  complex sum = lead;
  for (int k = 1; k < 60; ++k) {
    term *= q / (double(k) * double(2 * n + 2 * k + 1));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

complex j0_exact(complex z) {
  if (std::abs(z) < 0.5) return jn_series(0, z);
  return std::sin(z) / z;
}

complex j1_exact(complex z) {
  if (std::abs(z) < 0.5) return jn_series(1, z);
  return (std::sin(z) / z - std::cos(z)) / z;
}

complex y0_exact(complex z) { return -std::cos(z) / z; }
complex y1_exact(complex z) { return -(std::cos(z) / z + std::sin(z)) / z; }

// Upward recurrence f_{n+1} = (2n+1)/z f_n - f_{n-1}.
void upward(std::vector<complex>& f, complex z) {
  for (std::size_t n = 1; n + 1 < f.size(); ++n)
    f[n + 1] = double(2 * n + 1) / z * f[n] - f[n - 1];
}

// ratio[n] = j_n / j_{n-1} for n = 1..n_max, descending from a zero seed far
// above n_max.
std::vector<complex> jn_ratios(int n_max, complex z) {
  const int start = n_max + static_cast<int>(std::ceil(std::abs(z))) + 40;
  std::vector<complex> ratio(std::size_t(start) + 2, complex{0.0, 0.0});
  for (int n = start; n >= 1; --n) ratio[n] = z / (double(2 * n + 1) - z * ratio[n + 1]);
  ratio.resize(std::size_t(n_max) + 1);
  return ratio;
}

}  // namespace

std::vector<complex> spherical_jn_array(int n_max, complex z) {
  check_order(n_max);
  check_argument(z);
  std::vector<complex> out(std::size_t(n_max) + 1, complex{0.0, 0.0});
  if (z == complex{0.0, 0.0}) {
    out[0] = 1.0;
    return out;
  }
  const auto ratio = jn_ratios(std::max(n_max, 1), z);

  // Unnormalised sequence u_n proportional to j_n.
  std::vector<complex> u(std::size_t(std::max(n_max, 1)) + 1);
  u[0] = 1.0;
  for (std::size_t n = 1; n < u.size(); ++n) u[n] = u[n - 1] * ratio[n];

  // Least-squares scale against both exact anchors: j_0 and j_1 never vanish
  // together, so the fit stays well conditioned near zeros of either.
  const complex j0 = j0_exact(z);
  const complex j1 = j1_exact(z);
  const complex scale = (j0 * std::conj(u[0]) + j1 * std::conj(u[1])) / (std::norm(u[0]) + std::norm(u[1]));
  for (int n = 0; n <= n_max; ++n) out[n] = scale * u[n];
  out[0] = j0;
  if (n_max >= 1) out[1] = j1;
  return out;
}

std::vector<complex> spherical_h1n_array(int n_max, complex z) {
  check_order(n_max);
  check_argument(z);
  if (z == complex{0.0, 0.0}) throw Error(kModule, Errc::pole, "h_n^(1) has a pole at z = 0");

  const std::size_t size = std::size_t(std::max(n_max, 1)) + 1;
  std::vector<complex> h(size);
  if (std::abs(z.imag()) < 2.0) {
    // Near the real axis build h = j + i y so that Re h_n keeps full relative
    // accuracy for real z (the radiative part of the Green's function needs j_n^2).
    std::vector<complex> y(size);
    y[0] = y0_exact(z);
    y[1] = y1_exact(z);
    upward(y, z);
    const auto j = spherical_jn_array(int(size) - 1, z);
    for (std::size_t n = 0; n < size; ++n) h[n] = j[n] + kI * y[n];
  } else {
    const complex e = std::exp(kI * z);
    h[0] = -kI * e / z;
    h[1] = -e * (z + kI) / (z * z);
    upward(h, z);
  }
  h.resize(std::size_t(n_max) + 1);
  return h;
}

complex spherical_jn(int n, complex z) {
  check_order(n);
  return spherical_jn_array(n, z)[std::size_t(n)];
}

complex spherical_h1n(int n, complex z) {
  check_order(n);
  return spherical_h1n_array(n, z)[std::size_t(n)];
}

std::vector<complex> riccati_derivative_array(const std::vector<complex>& f, complex minus_one,
                                              complex z) {
  std::vector<complex> d(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) {
    const complex prev = n == 0 ? minus_one : f[n - 1];
    d[n] = z * prev - double(n) * f[n];
  }
  return d;
}

RiccatiDerivatives riccati_derivatives(int n, complex z) {
  check_order(n);
  check_argument(z);
  if (z == complex{0.0, 0.0}) throw Error(kModule, Errc::pole, "Riccati derivative of h_n at z = 0");
  const auto j = spherical_jn_array(n, z);
  const auto h = spherical_h1n_array(n, z);
  const complex j_minus = std::cos(z) / z;
  const complex h_minus = std::exp(kI * z) / z;
  const complex jp = n == 0 ? j_minus : j[std::size_t(n) - 1];
  const complex hp = n == 0 ? h_minus : h[std::size_t(n) - 1];
  return {z * jp - double(n) * j[std::size_t(n)], z * hp - double(n) * h[std::size_t(n)]};
}

std::vector<complex> jn_log_derivative_array(int n_max, complex z) {
  check_order(n_max);
  check_argument(z);
  if (z == complex{0.0, 0.0}) throw Error(kModule, Errc::pole, "log derivative at z = 0");
  const auto ratio = jn_ratios(std::max(n_max, 1), z);
  std::vector<complex> d(std::size_t(n_max) + 1);
  d[0] = 1.0 - z * j1_exact(z) / j0_exact(z);
  for (int n = 1; n <= n_max; ++n) d[n] = z / ratio[n] - double(n);
  return d;
}

std::vector<complex> h1n_log_derivative_array(int n_max, complex z) {
  check_order(n_max);
  check_argument(z);
  if (z == complex{0.0, 0.0}) throw Error(kModule, Errc::pole, "log derivative at z = 0");
  std::vector<complex> d(std::size_t(n_max) + 1);
  // q = h_n / h_{n-1}; h_1/h_0 = (1 - i z)/z and h_0'/h_0 = i z.
  d[0] = kI * z;
  complex q = (1.0 - kI * z) / z;
  for (int n = 1; n <= n_max; ++n) {
    d[n] = z / q - double(n);
    q = double(2 * n + 1) / z - 1.0 / q;
  }
  return d;
}

double legendre_p0_squared(int n, int m) {
  if (m < 0 || n < 0 || m > n)
    throw Error(kModule, Errc::domain,
                "associated Legendre needs 0 <= m <= n (n=" + std::to_string(n) +
                    ", m=" + std::to_string(m) + ")");
  check_order(n);
  if ((n + m) % 2 != 0) return 0.0;
  // P_m^m(0)^2 = ((2m-1)!!)^2 ; P_n^m(0) = -(n+m-1)/(n-m) P_{n-2}^m(0).
  double sq = 1.0;
  for (int k = 1; k <= m; ++k) sq *= double(2 * k - 1) * double(2 * k - 1);
  for (int k = m + 2; k <= n; k += 2) {
    const double f = double(k + m - 1) / double(k - m);
    sq *= f * f;
  }
  return sq;
}

double cmn_coefficient(int n, int m) {
  if (m < 0 || n < 1 || m > n)
    throw Error(kModule, Errc::domain,
                "c_mn needs 0 <= m <= n, n >= 1 (n=" + std::to_string(n) + ", m=" + std::to_string(m) + ")");
  check_order(n);
  const double log_ratio = std::lgamma(double(n - m + 1)) - std::lgamma(double(n + m + 1));
  const double pre = (m == 0 ? 1.0 : 2.0) * double(n) * double(n + 1) * double(2 * n + 1);
  return pre * std::exp(log_ratio);
}

double log_double_factorial(int k) {
  if (k < -1) throw Error(kModule, Errc::domain, "double factorial of " + std::to_string(k));
  if (k <= 0) return 0.0;
  if (k % 2 == 0) return double(k / 2) * std::log(2.0) + std::lgamma(double(k / 2 + 1));
  // (2p-1)!! = (2p)! / (2^p p!)
  const int p = (k + 1) / 2;
  return std::lgamma(double(2 * p + 1)) - double(p) * std::log(2.0) - std::lgamma(double(p + 1));
}

double cmn_legendre_weight(int n, int m) {
  if (m < 0 || n < 1 || m > n)
    throw Error(kModule, Errc::domain, "weight needs 0 <= m <= n, n >= 1");
  check_order(n);
  if ((n + m) % 2 != 0) return 0.0;
  const double log_p = log_double_factorial(n + m - 1) - log_double_factorial(n - m);
  const double log_ratio = std::lgamma(double(n - m + 1)) - std::lgamma(double(n + m + 1));
  const double pre = (m == 0 ? 1.0 : 2.0) * double(n) * double(n + 1) * double(2 * n + 1);
  return pre * std::exp(log_ratio + 2.0 * log_p);
}

}  // namespace lspdyn::specfun
