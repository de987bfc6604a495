#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <initializer_list>
#include <span>

namespace mixdyn {

inline constexpr int kMaxDim = 3;

// A point of a low-dimensional phase space, stored inline.
struct Point {
  std::array<double, kMaxDim> x{};
  int dim = 0;

  Point() = default;
  explicit Point(int d) : dim(d) { assert(d >= 0 && d <= kMaxDim); }
  Point(std::initializer_list<double> values) : dim(static_cast<int>(values.size())) {
    assert(dim <= kMaxDim);
    std::copy(values.begin(), values.end(), x.begin());
  }

  double& operator[](int i) { return x[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return x[static_cast<std::size_t>(i)]; }

  std::span<const double> coords() const { return {x.data(), static_cast<std::size_t>(dim)}; }

  bool finite() const {
    return std::all_of(x.begin(), x.begin() + dim, [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Point& a, const Point& b) {
    if (a.dim != b.dim) return false;
    return std::equal(a.x.begin(), a.x.begin() + a.dim, b.x.begin());
  }
};

// Plain max-metric distance, no periodic wrap.
inline double max_distance(const Point& a, const Point& b) {
  assert(a.dim == b.dim);
  double d = 0.0;
  for (int i = 0; i < a.dim; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Reduce v into [0, period).
inline double wrap_periodic(double v, double period) {
  double r = std::fmod(v, period);
  if (r < 0) r += period;
  if (r >= period) r -= period;
  return r;
}

// Signed difference a - b reduced into [-period/2, period/2).
inline double wrap_difference(double a, double b, double period) {
  double d = std::fmod(a - b, period);
  if (d >= 0.5 * period) d -= period;
  if (d < -0.5 * period) d += period;
  return d;
}

}  // namespace mixdyn
