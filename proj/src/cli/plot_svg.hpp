#pragma once

// Minimal static line plots written as SVG text.

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lspdyn::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = true;
  bool markers = false;
};

struct VerticalMarker {
  double x = 0.0;
  std::string label;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<VerticalMarker> markers;  ///< dashed vertical lines
  std::optional<std::pair<double, double>> y_range;
};

/// Lines are decimated to at most `max_points` vertices each.
std::string render_svg(const PlotSpec& spec, std::size_t max_points = 2000);

}  // namespace lspdyn::cli
