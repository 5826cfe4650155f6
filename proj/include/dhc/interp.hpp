#pragma once

// Piecewise-cubic interpolation of scattered samples.
//
// Both interpolants reproduce the knots exactly. pchip is shape preserving:
// slopes are weighted harmonic means of neighbouring secants and vanish at
// local extrema, so on monotone stretches it never leaves the data range. The
// natural cubic spline is C2 with zero end curvature and can overshoot.

#include <span>
#include <vector>

namespace dhc {

std::vector<double> pchip(std::span<const double> xs, std::span<const double> ys, std::span<const double> query_xs);

std::vector<double> cubic_spline(std::span<const double> xs, std::span<const double> ys,
                                 std::span<const double> query_xs);

// Knot slopes used by pchip (exposed for tests).
std::vector<double> pchip_slopes(std::span<const double> xs, std::span<const double> ys);

}  // namespace dhc
