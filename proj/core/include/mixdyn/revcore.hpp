#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixdyn/mapzoo.hpp"

namespace mixdyn {

using Complex = std::complex<double>;

struct ReversibilityReport {
  double max_residual = 0.0;  // sup of distance(f^-1(x), g(f(g(x))))
  Point worst{1};
  double involution_residual = 0.0;  // sup of distance(g(g(x)), x)
  bool pass = false;
};

// Requires an involution and an inverse (a numeric one is fine); throws
// ConfigError otherwise.
ReversibilityReport verify_reversibility(const MapSystem& sys, std::span<const Point> samples, double tol);

struct InvolutionCheck {
  double max_residual = 0.0;
  bool pass = false;
};

// g o g = id on the 20 x 20 (or 20-point) grid of the domain.
InvolutionCheck check_involution(const MapSystem& sys, double tol = 1e-10);

// Row-major Jacobian of forward^period at x by central differences with
// steps 1e-6 and 5e-7 combined by one Richardson step.
std::vector<double> period_jacobian(const MapSystem& sys, const Point& x, int period);

struct MultiplierPair {
  Complex lambda;
  Complex lambda_inv;
  double pairing_error = 0.0;  // |lambda * lambda_inv - 1|
};

enum class PointType { Elliptic, Hyperbolic, Parabolic };
std::string to_string(PointType t);

struct Multipliers {
  std::vector<Complex> eigenvalues;
  std::vector<MultiplierPair> pairs;  // empty in dimension 1
  PointType type = PointType::Hyperbolic;
  std::vector<double> jacobian;
};

inline constexpr double kParabolicTol = 1e-4;
inline constexpr double kUnitCircleTol = 1e-6;

// Throws NumericError when forward^period(x) is farther than 1e-6 from x or
// the Jacobian is not finite; ConfigError for dimension 3.
Multipliers multipliers_at(const MapSystem& sys, const Point& x, int period);

// Eigenvalues of a 2 x 2 row-major matrix, ordered by real then imaginary part.
std::array<Complex, 2> eigenvalues_2x2(double a, double b, double c, double d);

struct SymmetricPoint {
  Point location{1};
  double s = 0.0;  // line parameter
  int period = 1;
  std::string which_involution;  // "g" or "f*g"; "none" for plain line searches
  bool fixed_by_fg = false;
  double displacement = 0.0;
  Multipliers multipliers;
};

struct FixedPointSearch {
  std::vector<SymmetricPoint> points;
  bool degenerate = false;  // every grid point was already fixed
  std::string warning;
};

struct LineSearchOptions {
  int grid = 400;
  int period = 1;
  double tol = 1e-9;  // accepted |forward^period(x) - x|
  int workers = 1;
};

// Fixed points of forward^period on a segment: grid scan for exact zeros,
// sign changes (bisection to 1e-10) and touching zeros (bisection on the sign
// of the derivative) of each displacement component, merged across the
// periodic seam.
FixedPointSearch find_fixed_points_on_line(const MapSystem& sys, const FixedLine& line,
                                           const LineSearchOptions& options = {});

// Same search along Fix(g) of the system's involution, optionally restricted
// to [s_lo, s_hi]. Throws ConfigError without an involution or fixed-set line.
FixedPointSearch find_symmetric_fixed_points(const MapSystem& sys, const LineSearchOptions& options = {},
                                             std::optional<std::pair<double, double>> range = std::nullopt);

struct SpotCheck {
  int q = 0;
  double theta = 0.0;
  double epsilon = 0.0;
  std::array<double, 4> matrix{};  // row-major
  double determinant = 0.0;
  int k = 0;
  double residual = 0.0;            // Frobenius norm of M^k - Id
  double max_return_error = 0.0;    // over the sampled points
  std::size_t samples = 0;
};

// epsilon = (1 - cos theta) / q, M = [[1, 2q], [-eps, 1 - 2q eps]], k the
// order of theta / 2 pi (denominators up to 10000). Throws ConfigError when
// theta is not in (0, pi) or not a rational multiple of 2 pi.
SpotCheck periodic_spot_check(int q, double theta, std::size_t samples = 100);
SpotCheck periodic_spot_check(int q, double theta, int k, std::size_t samples);

}  // namespace mixdyn
