#include "cli/plot_svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace lspdyn::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step of roughly (hi - lo) / 5 from {1, 2, 5} x 10^k.
double tick_step(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (const double f : {1.0, 2.0, 5.0})
    if (f * mag >= raw) return f * mag;
  return 10.0 * mag;
}

std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 1.0 : 0.1 * std::abs(lo);
    return {lo - pad, hi + pad};
  }
  return {lo, hi};
}

}  // namespace

std::string render_svg(const PlotSpec& spec, std::size_t max_points) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  for (const auto& m : spec.markers) {
    x_lo = std::min(x_lo, m.x);
    x_hi = std::max(x_hi, m.x);
  }
  if (!std::isfinite(x_lo)) x_lo = 0.0, x_hi = 1.0;
  if (!std::isfinite(y_lo)) y_lo = 0.0, y_hi = 1.0;
  if (spec.y_range) std::tie(y_lo, y_hi) = *spec.y_range;
  std::tie(x_lo, x_hi) = padded(x_lo, x_hi);
  std::tie(y_lo, y_hi) = padded(y_lo, y_hi);

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  out += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", kLeft + pw / 2,
                     escape(spec.title));

  // axes and ticks
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                     kTop, pw, ph);
  const double xs = tick_step(x_lo, x_hi);
  for (double t = std::ceil(x_lo / xs) * xs; t <= x_hi + 1e-9 * xs; t += xs) {
    const double v = std::abs(t) < 1e-12 * xs ? 0.0 : t;
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"black\"/>"
                       "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4:g}</text>\n",
                       px(v), kTop + ph, kTop + ph + 5, kTop + ph + 19, v);
  }
  const double ys = tick_step(y_lo, y_hi);
  for (double t = std::ceil(y_lo / ys) * ys; t <= y_hi + 1e-9 * ys; t += ys) {
    const double v = std::abs(t) < 1e-12 * ys ? 0.0 : t;
    out += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"black\"/>"
                       "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:g}</text>\n",
                       kLeft - 5, py(v), kLeft, kLeft - 8, py(v) + 4, v);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2, kHeight - 15,
                     escape(spec.x_label));
  out += fmt::format("<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                     kTop + ph / 2, escape(spec.y_label));

  out += fmt::format("<clipPath id=\"plot\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath>\n", kLeft,
                     kTop, pw, ph);
  for (const auto& m : spec.markers) {
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"gray\" "
                       "stroke-dasharray=\"6 4\"/>\n",
                       px(m.x), kTop, kTop + ph);
    if (!m.label.empty())
      out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" fill=\"gray\" font-size=\"10\">{}</text>\n", px(m.x) + 3,
                         kTop + 12, escape(m.label));
  }

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.line && n > 1) {
      const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
      std::string pts;
      for (std::size_t i = 0; i < n; i += stride)
        if (std::isfinite(s.y[i])) pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
      if ((n - 1) % stride != 0 && std::isfinite(s.y[n - 1]))
        pts += fmt::format("{:.2f},{:.2f}", px(s.x[n - 1]), py(s.y[n - 1]));
      out += fmt::format("<polyline clip-path=\"url(#plot)\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" "
                         "points=\"{}\"/>\n",
                         color, pts);
    }
    if (s.markers)
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.y[i]))
          out += fmt::format("<circle clip-path=\"url(#plot)\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\" fill=\"{}\"/>\n",
                             px(s.x[i]), py(s.y[i]), color);
    const double ly = kTop + 14.0 + 18.0 * double(k);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>"
                       "<text x=\"{4}\" y=\"{5}\">{6}</text>\n",
                       kLeft + pw + 10, ly, kLeft + pw + 30, color, kLeft + pw + 36, ly + 4, escape(s.label));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace lspdyn::cli
