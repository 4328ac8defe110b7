#pragma once

/// \file nanosphere_green.hpp
/// Drude metal sphere in a homogeneous dielectric: permittivity, Mie
/// scattering coefficients, localized-surface-plasmon resonances and the
/// radial-radial Green's function between emitters on the equator ring.

#include <complex>
#include <span>
#include <vector>

namespace lspdyn {

using complex = std::complex<double>;

struct DrudeMetal {
  double hbar_omega_p = 9.01;   // eV
  double eps_inf = 3.718;
  double hbar_gamma_p = 0.09;   // eV

  void validate() const;
  static DrudeMetal silver() { return {}; }
};

/// Emitter l sits at (r, pi/2, 2 pi l / N) with a radial dipole; the positions
/// are implied by the ring and never stored.
struct SystemGeometry {
  double radius_nm = 5.0;
  double eps_d = 1.0;
  int n_emitters = 2;
  double distance_nm = 8.0;
  double hbar_omega0 = 0.8;    // eV
  double hbar_gamma0 = 1e-4;   // eV

  void validate() const;
};

/// Which scattering coefficient multiplies the outgoing-wave term.
enum class Scattering {
  full,          ///< exact Mie coefficient R^V
  quasi_static,  ///< small-sphere limit R_n^V
  none,          ///< free space only
};

complex drude_permittivity(const DrudeMetal& metal, double hbar_omega);

struct MieCoefficients {
  complex r_h;  ///< transverse-electric coefficient R^H
  complex r_v;  ///< transverse-magnetic coefficient R^V
};

/// Sphere boundary-value coefficients of multipole order n >= 1.
MieCoefficients mie_coefficients(const DrudeMetal& metal, const SystemGeometry& geom, double hbar_omega,
                                 int n);

/// Small-sphere limit of R^V for order n.
complex quasi_static_coefficient(const DrudeMetal& metal, const SystemGeometry& geom, double hbar_omega,
                                 int n);

/// Frequencies [eV] solving Re eps_m(w) = -(n+1) eps_d / n, by bisection to 1e-6 eV.
std::vector<double> lsp_resonances(const DrudeMetal& metal, double eps_d, std::span<const int> orders);

struct GreenValue {
  complex value;      ///< G_rr in nm^-1
  bool converged;     ///< last multipole term below kGreenTailTolerance
  double tail;        ///< |last term| / sum |terms|
};

inline constexpr double kGreenTailTolerance = 1e-8;

/// Radial-radial Green's function between emitters l and j, truncated at n_max.
///
/// The free-space part enters through its radiative piece i k j_n^2 / ...; the
/// contact term and the singular real part of the coincident free-space
/// Green's function are not represented (only Im G_rr reaches the dynamics).
GreenValue green_rr(const DrudeMetal& metal, const SystemGeometry& geom, double hbar_omega, int l, int j,
                    int n_max, Scattering scattering = Scattering::full);

/// Per-order radial factors F_n = [j_n(x)^2 + R_n h_n(x)^2] / x^2 with
/// x = k_1 r, for n = 1..n_max (index 0 unused). Shared by green_rr and the
/// spectral-density tables.
std::vector<complex> radial_factors(const DrudeMetal& metal, const SystemGeometry& geom, double hbar_omega,
                                    int n_max, Scattering scattering);

/// Angular weights A_n(s) = sum_m c_mn P_n^m(0)^2 cos(2 pi m s / N) for
/// n = 1..n_max and separations s = 0..N/2. Indexed [n][s].
std::vector<std::vector<double>> angular_weights(int n_max, int n_emitters);

}  // namespace lspdyn
