#include "mixdyn/domain.hpp"

#include <sstream>

#include "mixdyn/errors.hpp"

namespace mixdyn {

Domain Domain::interval(double lo, double hi, bool is_periodic) {
  Domain d;
  d.dim = 1;
  d.lower[0] = lo;
  d.upper[0] = hi;
  d.periodic[0] = is_periodic;
  return d;
}

Domain Domain::rectangle(double x_lo, double x_hi, double y_lo, double y_hi, bool x_periodic, bool y_periodic) {
  Domain d;
  d.dim = 2;
  d.lower = {x_lo, y_lo, 0.0};
  d.upper = {x_hi, y_hi, 0.0};
  d.periodic = {x_periodic, y_periodic, false};
  return d;
}

void Domain::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("domain dimension must be 1.." + std::to_string(kMaxDim));
  for (int i = 0; i < dim; ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
      throw ConfigError("domain axis " + std::to_string(i) + " needs finite lower < upper");
  }
}

Point Domain::reduce(Point p) const {
  for (int i = 0; i < dim; ++i)
    if (periodic[i]) p[i] = lower[i] + wrap_periodic(p[i] - lower[i], extent(i));
  return p;
}

bool Domain::contains(const Point& p) const {
  for (int i = 0; i < dim; ++i) {
    if (!std::isfinite(p[i])) return false;
    if (!periodic[i] && (p[i] < lower[i] || p[i] > upper[i])) return false;
  }
  return true;
}

double Domain::axis_difference(const Point& a, const Point& b, int axis) const {
  if (periodic[axis]) return wrap_difference(a[axis], b[axis], extent(axis));
  return a[axis] - b[axis];
}

double Domain::distance(const Point& a, const Point& b) const {
  double d = 0.0;
  for (int i = 0; i < dim; ++i) d = std::max(d, std::abs(axis_difference(a, b, i)));
  return d;
}

std::string describe(const Domain& domain) {
  std::ostringstream os;
  os.precision(17);
  for (int i = 0; i < domain.dim; ++i) {
    if (i) os << " x ";
    os << '[' << domain.lower[i] << ", " << domain.upper[i] << (domain.periodic[i] ? ") periodic" : "]");
  }
  return os.str();
}

}  // namespace mixdyn
