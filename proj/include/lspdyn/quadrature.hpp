#pragma once

#include <span>

// Composite rules on uniformly spaced samples.
namespace lspdyn::quad {

double trapezoid(std::span<const double> f, double h);

/// Composite Simpson; an odd interval count closes with the 3/8 rule on the
/// last three intervals. Needs at least 3 samples.
double simpson(std::span<const double> f, double h);

}  // namespace lspdyn::quad
