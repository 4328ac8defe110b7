#pragma once

/// \file specfun.hpp
/// Spherical Bessel/Hankel functions of complex argument and the angular
/// factors that appear in the radial-radial multipole expansion.
///
/// All routines are pure. Orders are limited to kMaxOrder.

#include <complex>
#include <vector>

namespace lspdyn::specfun {

using complex = std::complex<double>;

inline constexpr int kMaxOrder = 100;

/// j_n(z). Uses Miller-type downward ratio recurrence normalised against the
/// closed forms of j_0 and j_1. j_n(0) is the analytic limit.
complex spherical_jn(int n, complex z);

/// h_n^(1)(z) = j_n(z) + i y_n(z). Upward recurrence; throws Errc::pole at z = 0.
complex spherical_h1n(int n, complex z);

/// j_0..j_{n_max} in one sweep.
std::vector<complex> spherical_jn_array(int n_max, complex z);

/// h_0^(1)..h_{n_max}^(1) in one sweep.
std::vector<complex> spherical_h1n_array(int n_max, complex z);

struct RiccatiDerivatives {
  complex d_rho_jn;  ///< d/drho [rho j_n(rho)]
  complex d_rho_hn;  ///< d/drho [rho h_n^(1)(rho)]
};

/// Derivatives of the Riccati-Bessel functions through
/// d/drho[rho f_n] = rho f_{n-1} - n f_n, with f_{-1} = cos z / z (j) and
/// e^{iz}/z (h).
RiccatiDerivatives riccati_derivatives(int n, complex z);

/// Same relation evaluated from precomputed arrays f_0..f_{n_max}.
/// Returns d/drho[rho f_n] for n = 0..n_max; `minus_one` is f_{-1}(z).
std::vector<complex> riccati_derivative_array(const std::vector<complex>& f, complex minus_one,
                                              complex z);

/// Logarithmic Riccati derivatives [rho j_n]' / j_n for n = 0..n_max, taken
/// from the downward ratio sweep so they stay finite where j_n underflows.
std::vector<complex> jn_log_derivative_array(int n_max, complex z);

/// [rho h_n]' / h_n for n = 0..n_max from the upward ratio recurrence.
std::vector<complex> h1n_log_derivative_array(int n_max, complex z);

/// P_n^m(0)^2. Zero when n + m is odd.
double legendre_p0_squared(int n, int m);

/// c_mn = (2 - delta_0m) n (n+1) (2n+1) (n-m)! / (n+m)!
double cmn_coefficient(int n, int m);

/// log(k!!) for k >= -1, with (-1)!! = 0!! = 1.
double log_double_factorial(int k);

/// c_mn P_n^m(0)^2 evaluated in log space (finite for every n <= kMaxOrder).
double cmn_legendre_weight(int n, int m);

}  // namespace lspdyn::specfun
