#pragma once

// Energies are carried in eV, lengths in nm, times in fs.
namespace lspdyn::units {

inline constexpr double kHbarC = 197.327;    // eV nm
inline constexpr double kHbarFs = 0.658212;  // eV fs
inline constexpr double kPi = 3.14159265358979323846;

/// Wave number in nm^-1 for photon energy `hbar_omega` [eV] in a medium of
/// (real) permittivity eps.
inline double wave_number(double hbar_omega, double sqrt_eps) {
  return hbar_omega * sqrt_eps / kHbarC;
}

}  // namespace lspdyn::units
