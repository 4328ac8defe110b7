#include "lspdyn/quadrature.hpp"

#include "lspdyn/error.hpp"

namespace lspdyn::quad {

double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

double simpson(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 3) throw Error("quadrature", Errc::domain, "Simpson rule needs at least 3 samples");
  const std::size_t intervals = n - 1;
  std::size_t even_end = intervals % 2 == 0 ? intervals : intervals - 3;
  double s = 0.0;
  if (even_end >= 2) {
    double acc = f[0] + f[even_end];
    for (std::size_t i = 1; i < even_end; ++i) acc += (i % 2 ? 4.0 : 2.0) * f[i];
    s = acc * h / 3.0;
  }
  if (even_end != intervals) {
    const std::size_t k = even_end;
    s += 3.0 * h / 8.0 * (f[k] + 3.0 * f[k + 1] + 3.0 * f[k + 2] + f[k + 3]);
  }
  return s;
}

}  // namespace lspdyn::quad
