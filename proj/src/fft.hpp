#pragma once

// Thin FFTW wrappers used by the kernel synthesis and the Volterra solve.

#include <complex>
#include <cstddef>
#include <vector>

namespace lspdyn::fft {

using cplx = std::complex<double>;

/// Smallest n' >= n whose prime factors are 2, 3, 5 and 7.
std::size_t good_size(std::size_t n);

/// In-place forward (sign -1) or backward (sign +1) unnormalised transform.
void transform(std::vector<cplx>& data, int sign);

/// First n coefficients of the linear convolution a * b.
std::vector<cplx> convolve(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t n);

/// First n coefficients of the power series 1 / w (Newton iteration); w[0] != 0.
std::vector<cplx> series_inverse(const std::vector<cplx>& w, std::size_t n);

/// S_m = sum_i x_i exp(-i theta i m) for m = 0..n_out-1 (chirp-z transform).
/// Chirp phases are reduced in extended precision, so large m keep their accuracy.
std::vector<cplx> chirp_sum(const std::vector<cplx>& x, double theta, std::size_t n_out);

/// Chirp-z transform against a precomputed chirp spectrum, for several inputs
/// sharing theta and the output length.
class ChirpPlan {
 public:
  ChirpPlan(std::size_t n_in, std::size_t n_out, double theta);
  std::vector<cplx> operator()(const std::vector<cplx>& x) const;

 private:
  std::size_t n_in_;
  std::size_t n_out_;
  std::size_t size_;
  std::vector<cplx> chirp_in_;   // exp(-i theta i^2 / 2)
  std::vector<cplx> chirp_out_;  // exp(-i theta m^2 / 2)
  std::vector<cplx> kernel_;     // spectrum of exp(+i theta k^2 / 2)
};

}  // namespace lspdyn::fft
