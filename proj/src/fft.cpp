#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <fftw3.h>

namespace lspdyn::fft {

namespace {

// The FFTW planner is not thread-safe; executing a plan on new arrays is.
std::mutex planner_mutex;

struct PlanCache {
  std::map<std::pair<std::size_t, int>, fftw_plan> plans;
  ~PlanCache() {
    for (auto& [key, p] : plans) fftw_destroy_plan(p);
  }
};

fftw_plan plan_for(std::size_t n, int sign) {
  static PlanCache cache;
  std::lock_guard lock(planner_mutex);
  auto it = cache.plans.find({n, sign});
  if (it != cache.plans.end()) return it->second;
  std::vector<cplx> scratch(n);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan = fftw_plan_dft_1d(int(n), p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.plans.emplace(std::pair{n, sign}, plan);
  return plan;
}

cplx chirp(long double theta, std::size_t k, double sign) {
  constexpr long double two_pi = 6.283185307179586476925286766559L;
  const long double kk = static_cast<long double>(k) * static_cast<long double>(k);
  const long double phase = std::fmod(theta * kk / 2.0L, two_pi);
  return std::polar(1.0, sign * double(phase));
}

}  // namespace

std::size_t good_size(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (const std::size_t p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

void transform(std::vector<cplx>& data, int sign) {
  if (data.empty()) return;
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(data.size(), sign), p, p);
}

std::vector<cplx> convolve(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t n) {
  const std::size_t na = std::min(a.size(), n);
  const std::size_t nb = std::min(b.size(), n);
  if (na == 0 || nb == 0) return std::vector<cplx>(n, 0.0);
  const std::size_t size = good_size(na + nb - 1);
  std::vector<cplx> fa(size, 0.0), fb(size, 0.0);
  std::copy_n(a.begin(), na, fa.begin());
  std::copy_n(b.begin(), nb, fb.begin());
  transform(fa, -1);
  transform(fb, -1);
  for (std::size_t i = 0; i < size; ++i) fa[i] *= fb[i] / double(size);
  transform(fa, +1);
  fa.resize(n, 0.0);
  fa.shrink_to_fit();
  return fa;
}

std::vector<cplx> series_inverse(const std::vector<cplx>& w, std::size_t n) {
  std::vector<cplx> g{1.0 / w.at(0)};
  std::size_t m = 1;
  while (m < n) {
    const std::size_t m2 = std::min(2 * m, n);
    // g <- g (2 - w g) mod z^m2
    auto e = convolve(w, g, m2);
    for (auto& v : e) v = -v;
    e[0] += 2.0;
    g = convolve(g, e, m2);
    m = m2;
  }
  g.resize(n);
  return g;
}

ChirpPlan::ChirpPlan(std::size_t n_in, std::size_t n_out, double theta)
    : n_in_(n_in), n_out_(n_out), size_(good_size(n_in + n_out - 1)) {
  // i m = (i^2 + m^2 - (m - i)^2) / 2
  const long double th = theta;
  chirp_in_.resize(n_in);
  for (std::size_t i = 0; i < n_in; ++i) chirp_in_[i] = chirp(th, i, -1.0);
  chirp_out_.resize(n_out);
  for (std::size_t m = 0; m < n_out; ++m) chirp_out_[m] = chirp(th, m, -1.0);
  kernel_.assign(size_, 0.0);
  for (std::size_t k = 0; k < n_out; ++k) kernel_[k] = chirp(th, k, 1.0);
  for (std::size_t k = 1; k < n_in; ++k) kernel_[size_ - k] = chirp(th, k, 1.0);
  transform(kernel_, -1);
  for (auto& v : kernel_) v /= double(size_);
}

std::vector<cplx> ChirpPlan::operator()(const std::vector<cplx>& x) const {
  std::vector<cplx> buf(size_, 0.0);
  for (std::size_t i = 0; i < n_in_; ++i) buf[i] = x[i] * chirp_in_[i];
  transform(buf, -1);
  for (std::size_t i = 0; i < size_; ++i) buf[i] *= kernel_[i];
  transform(buf, +1);
  std::vector<cplx> out(n_out_);
  for (std::size_t m = 0; m < n_out_; ++m) out[m] = buf[m] * chirp_out_[m];
  return out;
}

std::vector<cplx> chirp_sum(const std::vector<cplx>& x, double theta, std::size_t n_out) {
  return ChirpPlan(x.size(), n_out, theta)(x);
}

}  // namespace lspdyn::fft
