#pragma once

#include <array>
#include <string>

#include "mixdyn/point.hpp"

namespace mixdyn {

// Axis-aligned rectangular phase space; any axis may be periodic.
struct Domain {
  int dim = 0;
  std::array<double, kMaxDim> lower{};
  std::array<double, kMaxDim> upper{};
  std::array<bool, kMaxDim> periodic{};

  static Domain interval(double lo, double hi, bool is_periodic = false);
  static Domain rectangle(double x_lo, double x_hi, double y_lo, double y_hi, bool x_periodic = false,
                          bool y_periodic = false);

  double extent(int axis) const { return upper[axis] - lower[axis]; }

  // Throws ConfigError unless 1 <= dim <= kMaxDim and lower < upper.
  void validate() const;

  // Wraps periodic coordinates into [lower, upper).
  Point reduce(Point p) const;

  // Closed containment on non-periodic axes; periodic axes always contain.
  bool contains(const Point& p) const;

  // Signed per-axis difference a - b, wrapped on periodic axes.
  double axis_difference(const Point& a, const Point& b, int axis) const;

  // Max-metric distance honoring periodic wrap.
  double distance(const Point& a, const Point& b) const;

  friend bool operator==(const Domain&, const Domain&) = default;
};

std::string describe(const Domain& domain);

}  // namespace mixdyn
