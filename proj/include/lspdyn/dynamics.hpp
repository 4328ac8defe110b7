#pragma once

/// \file dynamics.hpp
/// Memory kernels, the per-channel Volterra solve, fidelity/concurrence and
/// the bound-state prediction of the long-time fidelity.

#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lspdyn/spectral_density.hpp"
#include "lspdyn/spectrum_solver.hpp"

namespace lspdyn {

/// Samples t_k = k dt for k = 0..n_steps, in fs.
struct TimeGrid {
  double dt_fs = 0.02;
  int n_steps = 0;

  double t(int k) const { return double(k) * dt_fs; }
  double t_max() const { return t(n_steps); }
  static TimeGrid covering(double t_max_fs, double dt_fs);
};

/// Largest admissible step, pi hbar / (4 w_max), in fs.
double max_time_step(const FrequencyGrid& grid);

/// Longest admissible span before the discretised continuum revives,
/// pi hbar / dw, in fs.
double max_time_span(const FrequencyGrid& grid);

/// Throws Errc::aliasing when the time grid is too coarse for the band or
/// longer than the recurrence horizon of the frequency grid.
void check_time_grid(const FrequencyGrid& grid, const TimeGrid& time);

struct MemoryKernel {
  TimeGrid time;
  double hbar_omega0 = 0.0;
  std::vector<int> channels;
  /// Rotating-frame energy per channel [eV]; the solver works with
  /// a(t) = cbar(t) exp(i frame t / hbar) / cbar(0).
  std::vector<double> frames;
  /// K_l(t_k) = (1/hbar^2) int D_l(E) exp(-i E t / hbar) dE, in fs^-2.
  std::vector<std::vector<std::complex<double>>> k;
  /// Step moments of the integrated frame kernel
  /// L(u) = i (w0 - frame)/hbar + int_0^u K_l(s) exp(i frame s / hbar) ds:
  /// m0[m] = int_{m h}^{(m+1) h} L(u) du and m1[m] = int (u - m h) L(u) du / h.
  std::vector<std::vector<std::complex<double>>> m0;
  std::vector<std::vector<std::complex<double>>> m1;
};

/// Kernel quadrature over the table grid for every listed channel. `frames`
/// defaults to w0 for each channel.
MemoryKernel synthesize_kernel(const SpectralTable& table, const TimeGrid& time, double hbar_omega0,
                               const std::vector<int>& channels, std::vector<double> frames = {});

/// Amplitude of channel `index` of the kernel started from c0, on the kernel
/// time grid coarsened by `every` (every = 2 gives the doubled step).
///
/// Solves dc/dt + i w0 c + int_0^t K(t - s) c(s) ds = 0 in the integrated
/// form a(t) = 1 - int_0^t L(t - s) a(s) ds. The memory integral uses the
/// trapezoid product rule: a(s) is linear on each step and the kernel is
/// integrated exactly, so the scheme is second order in the step. The
/// resulting Toeplitz system is solved by FFT series inversion.
std::vector<std::complex<double>> solve_volterra(const MemoryKernel& kernel, std::size_t index,
                                                 std::complex<double> c0, int every = 1);

enum class InitialKind { single_excited, w_state, custom };

struct InitialCondition {
  InitialKind kind = InitialKind::single_excited;
  int site = 0;
  std::vector<std::complex<double>> custom;

  /// Normalised site vector c(0). Throws on a zero or mis-sized custom vector.
  std::vector<std::complex<double>> site_vector(int n_emitters) const;
};

/// P(t) = |sum_l c_l(0)^* c_l(t)|^2 over site (or channel) amplitudes [l][k].
std::vector<double> fidelity(const std::vector<std::vector<std::complex<double>>>& amplitudes,
                             const std::vector<std::complex<double>>& c0);

/// C(t) = 2 |c_0 c_1|, N = 2 only (Errc::unsupported otherwise).
std::vector<double> concurrence(const std::vector<std::vector<std::complex<double>>>& amplitudes);

enum class SteadyClass { complete_decay, population_trapping, persistent_oscillation };

std::string_view steady_class_name(SteadyClass c);

struct BeatLine {
  double frequency_ev = 0.0;  ///< |varpi_g - varpi_h|
  double amplitude = 0.0;     ///< 2 A_g A_h
};

/// Long-time fidelity from the bound states:
/// P(t) -> |sum_g A_g exp(-i varpi_g t)|^2, A_g = sum_{l in g} |cbar_l(0)|^2 Z_l,
/// grouping channels with equal energies.
struct SteadyPrediction {
  int distinct_energies = 0;
  SteadyClass steady_class = SteadyClass::complete_decay;
  std::vector<double> energies;  ///< per group, eV
  std::vector<double> weights;   ///< A_g
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double beat_ev = 0.0;  ///< strongest beat, 0 without oscillation
  std::vector<BeatLine> beats;

  double beat_period_fs() const;
  double at(double t_fs) const;
};

/// bound[l] for every channel l = 0..N-1; cbar0 = V^-1 c(0).
SteadyPrediction steady_state_predictor(const std::vector<std::optional<BoundState>>& bound,
                                        const std::vector<std::complex<double>>& cbar0);

/// Late-window statistics of P(t) and the threshold classification.
struct SteadyObservation {
  double window_start_fs = 0.0;
  double mean = 0.0;
  double ptp = 0.0;
  double line_ev = 0.0;        ///< strongest periodogram line
  double line_fraction = 0.0;  ///< variance explained by that line
  bool beat_match = false;
  bool settled = true;
  SteadyClass steady_class = SteadyClass::complete_decay;
};

inline constexpr double kLateWindowFraction = 0.1;
inline constexpr double kPeakToPeakThreshold = 0.01;
inline constexpr double kTrappingThreshold = 0.01;
inline constexpr double kBeatTolerance = 0.05;
inline constexpr double kAgreementTolerance = 0.02;

SteadyObservation classify_late_window(const std::vector<double>& t_fs, const std::vector<double>& p,
                                       const SteadyPrediction& prediction);

struct DynamicsOptions {
  FrequencyGrid grid;
  TableOptions table;
  double t_max_fs = 2500.0;
  double dt_fs = 0.001;
  bool extend_for_beats = true;  ///< grow t_max to 20 beat periods
  bool check_step = true;        ///< compare against the doubled step
  double step_tolerance = 1e-4;
  int stride = 10;               ///< output decimation
};

struct TrajectoryResult {
  int n_emitters = 0;
  double distance_nm = 0.0;
  TimeGrid time;
  std::vector<double> t_fs;                                         ///< output samples
  std::vector<std::vector<std::complex<double>>> site_amplitudes;   ///< [site][sample]
  std::vector<std::vector<std::complex<double>>> channel_amplitudes;///< [l][sample]
  std::vector<double> p;                                            ///< fidelity
  std::vector<double> c;                                            ///< concurrence, N = 2
  std::vector<std::optional<BoundState>> bound;                     ///< per channel
  SteadyPrediction predicted;
  SteadyObservation observed;
  double predicted_window_mean = 0.0;
  double predicted_window_ptp = 0.0;
  bool agrees = false;
  double max_norm = 0.0;
  double step_discrepancy = 0.0;  ///< max |P_dt - P_2dt|
  int non_converged_points = 0;
  double max_tail = 0.0;
  std::vector<std::string> notes;
};

TrajectoryResult run_scenario(const DrudeMetal& metal, const SystemGeometry& geom, const InitialCondition& initial,
                              const DynamicsOptions& options);

/// Same as run_scenario on a prebuilt table (channels filled).
TrajectoryResult run_on_table(const SpectralTable& table, const SystemGeometry& geom, const InitialCondition& initial,
                              const DynamicsOptions& options);

/// Columns t_fs, re_c_l, im_c_l (each site), P, C (N = 2).
void write_trajectory_csv(const TrajectoryResult& result, std::ostream& out);

}  // namespace lspdyn
