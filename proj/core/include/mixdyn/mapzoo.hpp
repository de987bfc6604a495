#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixdyn/domain.hpp"
#include "mixdyn/point.hpp"

namespace mixdyn {

using PointMap = std::function<Point(const Point&)>;

// Segment origin + s * direction, s in [s_lo, s_hi]: the fixed set of a
// linear involution restricted to the domain.
struct FixedLine {
  Point origin{2};
  Point direction{2};
  double s_lo = 0.0;
  double s_hi = 0.0;
  std::string description;

  Point at(double s) const;
};

struct InvolutionSpec {
  std::string name;
  PointMap eval;
  std::optional<FixedLine> fixed_line;
};

// Ordered (name, value) pairs with unique names.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(std::initializer_list<std::pair<std::string, double>> items);

  // Adds or replaces.
  void set(const std::string& name, double value);
  bool has(const std::string& name) const;
  // Throws ConfigError when absent.
  double get(const std::string& name) const;
  double get_or(const std::string& name, double fallback) const;

  std::span<const std::pair<std::string, double>> items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  // Parses "name=value"; throws ConfigError on malformed input.
  static std::pair<std::string, double> parse_assignment(const std::string& text);

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<std::pair<std::string, double>> items_;
};

struct MapSystem {
  std::string name;
  int dim = 0;
  ParamSet params;  // fully resolved, defaults included
  Domain domain;
  PointMap forward;
  PointMap inverse;             // empty when unavailable
  bool inverse_numeric = false;  // inverse solves forward(y) = x by Newton
  std::optional<InvolutionSpec> involution;
  std::optional<double> lipschitz_hint;

  bool has_inverse() const { return static_cast<bool>(inverse); }
};

std::vector<std::string> builtin_system_names();

// Builds a named system. Parameters not supplied take their defaults; unknown
// names, non-finite values and out-of-range values throw ConfigError.
//   cat_map            (x, y) -> (2x + y, x + y) mod 1
//   circle_semistable  phi -> phi + sin^2(phi / 2) mod 2 pi
//   cubic_interval     x -> x + a x (1 - x^2) on [-1, 1]            a
//   nested_rings       time-`time` map of r' = r^2 sin(pi / r), theta' = 1
//                                                                   time, step
//   nf_timeq           power-th iterate of R_omega o (time-1 normal-form flow)
//                      p, q, mu, delta, B, C, omega1..omega3, rho0, D, radius,
//                      step, power
//   periodic_spot      (phi, Z) -> (phi + 2qZ, Z (1 - 2q eps) - eps (phi - phistar))
//                                                                   q, theta | eps, phistar
//   identity           x -> x on [0, 1]^dim                         dim
MapSystem make_system(const std::string& name, const ParamSet& params = {});

// Replaces the involution of `sys` by a named linear one: "swap" (x, y) -> (y, x),
// "negate" x -> -x (reduced on periodic axes), "conj" (x, y) -> (x, -y).
void attach_involution(MapSystem& sys, const std::string& name);

// Inverse of `raw_forward` by Newton iteration from the target itself, with a
// central-difference Jacobian; periodic axes are compared modulo their period.
// Tolerance 1e-12, at most 50 iterations; throws NumericError otherwise.
PointMap newton_inverse(PointMap raw_forward, Domain domain);

struct InverseReport {
  double max_error = 0.0;
  Point worst{1};
  bool pass = false;
};

// sup over samples of distance(inverse(forward(x)), x). Throws ConfigError if
// the system has no inverse.
InverseReport check_inverse_consistency(const MapSystem& sys, std::span<const Point> samples, double tol);

// n^dim grid of cell-centred points of the domain.
std::vector<Point> sample_grid(const Domain& domain, int n);

}  // namespace mixdyn
