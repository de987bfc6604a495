#include "mixdyn/revcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mixdyn/errors.hpp"
#include "mixdyn/parallel.hpp"

namespace mixdyn {

namespace {

Point iterate(const MapSystem& sys, Point x, int period) {
  for (int i = 0; i < period; ++i) x = sys.forward(x);
  return x;
}

std::vector<double> fd_jacobian(const MapSystem& sys, const Point& x, int period, double h) {
  const int n = sys.dim;
  std::vector<double> J(static_cast<std::size_t>(n * n));
  for (int j = 0; j < n; ++j) {
    Point xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Point fp = iterate(sys, xp, period);
    const Point fm = iterate(sys, xm, period);
    for (int i = 0; i < n; ++i) J[static_cast<std::size_t>(i * n + j)] = sys.domain.axis_difference(fp, fm, i) / (2.0 * h);
  }
  return J;
}

double sup_norm(const Point& d) {
  double m = 0.0;
  for (int i = 0; i < d.dim; ++i) m = std::max(m, std::abs(d[i]));
  return std::isnan(m) ? std::numeric_limits<double>::infinity() : m;
}

}  // namespace

ReversibilityReport verify_reversibility(const MapSystem& sys, std::span<const Point> samples, double tol) {
  if (!sys.involution) throw ConfigError("system '" + sys.name + "' has no involution");
  if (!sys.has_inverse()) throw ConfigError("system '" + sys.name + "' has no inverse");
  const auto& g = sys.involution->eval;
  ReversibilityReport rep;
  rep.worst = samples.empty() ? Point(sys.dim) : samples.front();
  for (const Point& x : samples) {
    double e = sys.domain.distance(sys.inverse(x), g(sys.forward(g(x))));
    if (std::isnan(e)) e = std::numeric_limits<double>::infinity();
    if (e > rep.max_residual) {
      rep.max_residual = e;
      rep.worst = x;
    }
    rep.involution_residual = std::max(rep.involution_residual, sys.domain.distance(g(g(x)), x));
  }
  rep.pass = rep.max_residual < tol;
  return rep;
}

InvolutionCheck check_involution(const MapSystem& sys, double tol) {
  if (!sys.involution) throw ConfigError("system '" + sys.name + "' has no involution");
  InvolutionCheck out;
  for (const Point& x : sample_grid(sys.domain, 20)) {
    const auto& g = sys.involution->eval;
    out.max_residual = std::max(out.max_residual, sys.domain.distance(g(g(x)), x));
  }
  out.pass = out.max_residual < tol;
  return out;
}

std::vector<double> period_jacobian(const MapSystem& sys, const Point& x, int period) {
  if (period < 1) throw ConfigError("period must be positive");
  const auto coarse = fd_jacobian(sys, x, period, 1e-6);
  const auto fine = fd_jacobian(sys, x, period, 5e-7);
  std::vector<double> J(coarse.size());
  for (std::size_t i = 0; i < J.size(); ++i) {
    J[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    if (!std::isfinite(J[i])) throw NumericError("Jacobian of the period map is not finite");
  }
  return J;
}

std::string to_string(PointType t) {
  switch (t) {
    case PointType::Elliptic: return "elliptic";
    case PointType::Hyperbolic: return "hyperbolic";
    case PointType::Parabolic: return "parabolic";
  }
  return "hyperbolic";
}

std::array<Complex, 2> eigenvalues_2x2(double a, double b, double c, double d) {
  const double tr = a + d;
  const double det = a * d - b * c;
  const double disc = tr * tr / 4.0 - det;
  std::array<Complex, 2> ev;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    // Stable form for the smaller root.
    const double big = tr / 2.0 + (tr >= 0.0 ? r : -r);
    const double small = big != 0.0 ? det / big : tr / 2.0 - (tr >= 0.0 ? r : -r);
    ev = {Complex(big, 0.0), Complex(small, 0.0)};
  } else {
    const double im = std::sqrt(-disc);
    ev = {Complex(tr / 2.0, -im), Complex(tr / 2.0, im)};
  }
  std::sort(ev.begin(), ev.end(), [](const Complex& u, const Complex& v) {
    return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
  });
  return ev;
}

Multipliers multipliers_at(const MapSystem& sys, const Point& x, int period) {
  if (sys.dim > 2) throw ConfigError("multipliers are supported in dimensions 1 and 2");
  const Point fx = iterate(sys, x, period);
  const double gap = sys.domain.distance(fx, x);
  if (!(gap <= 1e-6)) throw NumericError("point is not periodic with the given period (gap " + std::to_string(gap) + ")");
  Multipliers m;
  m.jacobian = period_jacobian(sys, x, period);
  auto near_one = [](const Complex& l) { return std::abs(l - 1.0) < kParabolicTol || std::abs(l + 1.0) < kParabolicTol; };
  if (sys.dim == 1) {
    m.eigenvalues = {Complex(m.jacobian[0], 0.0)};
    m.type = near_one(m.eigenvalues[0]) ? PointType::Parabolic : PointType::Hyperbolic;
    return m;
  }
  const auto ev = eigenvalues_2x2(m.jacobian[0], m.jacobian[1], m.jacobian[2], m.jacobian[3]);
  m.eigenvalues = {ev[0], ev[1]};
  m.pairs.push_back({ev[0], ev[1], std::abs(ev[0] * ev[1] - 1.0)});
  if (near_one(ev[0]) || near_one(ev[1]))
    m.type = PointType::Parabolic;
  else if (std::abs(std::abs(ev[0]) - 1.0) < kUnitCircleTol && std::abs(std::abs(ev[1]) - 1.0) < kUnitCircleTol &&
           ev[0].imag() != 0.0)
    m.type = PointType::Elliptic;
  else
    m.type = PointType::Hyperbolic;
  return m;
}

FixedPointSearch find_fixed_points_on_line(const MapSystem& sys, const FixedLine& line,
                                           const LineSearchOptions& options) {
  if (options.grid < 2) throw ConfigError("line search grid must have at least 2 cells");
  if (options.period < 1) throw ConfigError("period must be positive");
  if (line.origin.dim != sys.dim || line.direction.dim != sys.dim) throw ConfigError("line dimension mismatch");
  const int n = sys.dim;
  auto point_at = [&](double s) { return sys.domain.reduce(line.at(s)); };
  auto displacement = [&](double s) {
    const Point x = point_at(s);
    const Point y = iterate(sys, x, options.period);
    Point d(n);
    for (int i = 0; i < n; ++i) d[i] = sys.domain.axis_difference(y, x, i);
    return d;
  };

  const bool single = line.s_hi <= line.s_lo;
  const int cells = single ? 0 : options.grid;
  std::vector<double> s(static_cast<std::size_t>(cells) + 1);
  for (int j = 0; j <= cells; ++j)
    s[static_cast<std::size_t>(j)] = single ? line.s_lo : line.s_lo + (line.s_hi - line.s_lo) * j / cells;
  std::vector<Point> d(s.size());
  parallel_for(s.size(), options.workers, [&](std::size_t j) { d[j] = displacement(s[j]); });

  std::vector<double> found;
  bool all_fixed = !single;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (sup_norm(d[j]) <= options.tol)
      found.push_back(s[j]);
    else
      all_fixed = false;
  }

  FixedPointSearch out;
  if (all_fixed) {
    out.degenerate = true;
    out.warning = "every grid point is fixed; the map is degenerate on this line";
  } else {
    found.clear();
    for (std::size_t j = 0; j < s.size(); ++j)
      if (sup_norm(d[j]) == 0.0 || (single && sup_norm(d[j]) <= options.tol)) found.push_back(s[j]);
    for (int c = 0; c < n; ++c) {
      auto f = [&](double t) { return displacement(t)[c]; };
      for (std::size_t j = 0; j + 1 < s.size(); ++j) {
        const double f0 = d[j][c], f1 = d[j + 1][c];
        if (f0 * f1 < 0.0) {
          double a = s[j], b = s[j + 1], fa = f0;
          for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
            const double m = 0.5 * (a + b);
            const double fm = f(m);
            if (fm == 0.0) {
              a = b = m;
              break;
            }
            if ((fm < 0.0) == (fa < 0.0)) {
              a = m;
              fa = fm;
            } else {
              b = m;
            }
          }
          const double root = 0.5 * (a + b);
          if (sup_norm(displacement(root)) <= options.tol) found.push_back(root);
        }
        // Touching zero: |f| has a strict local minimum at an interior grid point.
        if (j >= 1) {
          const double fl = d[j - 1][c];
          if (f0 != 0.0 && fl * f0 > 0.0 && f0 * f1 > 0.0 && std::abs(f0) < std::abs(fl) &&
              std::abs(f0) <= std::abs(f1)) {
            const double sign = f0 > 0.0 ? 1.0 : -1.0;
            const double eta = 1e-7 * std::max(1.0, std::abs(s[j]));
            auto slope = [&](double t) { return sign * (f(t + eta) - f(t - eta)); };
            double a = s[j - 1], b = s[j + 1];
            for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
              const double m = 0.5 * (a + b);
              if (slope(m) < 0.0)
                a = m;
              else
                b = m;
            }
            const double root = 0.5 * (a + b);
            if (sup_norm(displacement(root)) <= options.tol) found.push_back(root);
          }
        }
      }
    }
  }

  // Merge duplicates (including across a periodic seam), keeping the point
  // with the smallest displacement.
  std::sort(found.begin(), found.end());
  std::vector<std::pair<double, double>> kept;  // (s, |d|)
  for (double t : found) {
    const double e = sup_norm(displacement(t));
    bool merged = false;
    for (auto& [ks, ke] : kept) {
      if (sys.domain.distance(point_at(ks), point_at(t)) <= 1e-7) {
        if (e < ke) {
          ks = t;
          ke = e;
        }
        merged = true;
        break;
      }
    }
    if (!merged) kept.emplace_back(t, e);
  }

  for (const auto& [t, e] : kept) {
    SymmetricPoint p;
    p.location = point_at(t);
    p.s = t;
    p.period = options.period;
    p.which_involution = "none";
    p.displacement = e;
    if (sys.dim <= 2) p.multipliers = multipliers_at(sys, p.location, options.period);
    out.points.push_back(std::move(p));
  }
  return out;
}

FixedPointSearch find_symmetric_fixed_points(const MapSystem& sys, const LineSearchOptions& options,
                                             std::optional<std::pair<double, double>> range) {
  if (!sys.involution) throw ConfigError("system '" + sys.name + "' has no involution");
  if (!sys.involution->fixed_line)
    throw ConfigError("involution '" + sys.involution->name + "' has no fixed-set line; search unsupported");
  FixedLine line = *sys.involution->fixed_line;
  if (range) {
    line.s_lo = std::max(line.s_lo, range->first);
    line.s_hi = std::min(line.s_hi, range->second);
    if (line.s_hi < line.s_lo) throw ConfigError("search range does not meet the fixed-set line");
  }
  FixedPointSearch out = find_fixed_points_on_line(sys, line, options);
  const auto& g = sys.involution->eval;
  for (auto& p : out.points) {
    p.which_involution = "g";
    p.fixed_by_fg = sys.domain.distance(sys.forward(g(p.location)), p.location) <= options.tol;
  }
  return out;
}

SpotCheck periodic_spot_check(int q, double theta, std::size_t samples) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (!(theta > 0.0 && theta < std::numbers::pi))
    throw ConfigError("theta must lie in (0, pi) for an elliptic rotation");
  for (int k = 1; k <= 10000; ++k) {
    const double turns = k * theta / two_pi;
    if (std::abs(turns - std::round(turns)) < 1e-9) return periodic_spot_check(q, theta, k, samples);
  }
  throw ConfigError("theta is not a rational multiple of 2 pi with denominator <= 10000");
}

SpotCheck periodic_spot_check(int q, double theta, int k, std::size_t samples) {
  if (q < 1) throw ConfigError("q must be at least 1");
  if (k < 1) throw ConfigError("k must be at least 1");
  SpotCheck out;
  out.q = q;
  out.theta = theta;
  out.epsilon = (1.0 - std::cos(theta)) / q;
  if (!(out.epsilon > 0.0 && out.epsilon < 2.0 / q)) throw ConfigError("epsilon outside (0, 2/q): not elliptic");
  const double tq = 2.0 * q;
  out.matrix = {1.0, tq, -out.epsilon, 1.0 - tq * out.epsilon};
  out.determinant = out.matrix[0] * out.matrix[3] - out.matrix[1] * out.matrix[2];
  out.k = k;

  std::array<double, 4> P = {1.0, 0.0, 0.0, 1.0};
  for (int i = 0; i < k; ++i) {
    const auto& M = out.matrix;
    P = {M[0] * P[0] + M[1] * P[2], M[0] * P[1] + M[1] * P[3], M[2] * P[0] + M[3] * P[2], M[2] * P[1] + M[3] * P[3]};
  }
  P[0] -= 1.0;
  P[3] -= 1.0;
  out.residual = std::sqrt(P[0] * P[0] + P[1] * P[1] + P[2] * P[2] + P[3] * P[3]);

  // Points around M = (0, 0), iterated with the affine map itself.
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(samples))));
  for (std::size_t i = 0; i < samples; ++i) {
    const double phi0 = -0.5 + (static_cast<double>(i % side) + 0.5) / static_cast<double>(side);
    const double z0 = -0.1 + 0.2 * (static_cast<double>(i / side) + 0.5) / static_cast<double>(side);
    double phi = phi0, z = z0;
    for (int it = 0; it < k; ++it) {
      const double nphi = phi + tq * z;
      const double nz = z * (1.0 - tq * out.epsilon) - out.epsilon * phi;
      phi = nphi;
      z = nz;
    }
    out.max_return_error = std::max(out.max_return_error, std::max(std::abs(phi - phi0), std::abs(z - z0)));
  }
  out.samples = samples;
  return out;
}

}  // namespace mixdyn
