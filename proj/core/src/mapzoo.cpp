#include "mixdyn/mapzoo.hpp"

#include <charconv>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>

#include "mixdyn/errors.hpp"
#include "mixdyn/flows.hpp"

namespace mixdyn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ParamSpec {
  const char* name;
  std::optional<double> fallback;  // nullopt: optional, no default
};

ParamSet resolve(const std::string& system, const ParamSet& given, std::initializer_list<ParamSpec> specs) {
  for (const auto& [name, value] : given.items()) {
    bool known = false;
    for (const auto& s : specs) known = known || name == s.name;
    if (!known) throw ConfigError("system '" + system + "' has no parameter '" + name + "'");
    if (!std::isfinite(value)) throw ConfigError("parameter '" + name + "' is not finite");
  }
  ParamSet out;
  for (const auto& s : specs) {
    if (given.has(s.name))
      out.set(s.name, given.get(s.name));
    else if (s.fallback)
      out.set(s.name, *s.fallback);
  }
  return out;
}

int integer_param(const ParamSet& ps, const std::string& name, int lo) {
  double v = ps.get(name);
  if (v != std::floor(v) || v < lo || v > 1e6)
    throw ConfigError("parameter '" + name + "' must be an integer >= " + std::to_string(lo));
  return static_cast<int>(v);
}

double positive_param(const ParamSet& ps, const std::string& name) {
  double v = ps.get(name);
  if (!(v > 0.0)) throw ConfigError("parameter '" + name + "' must be positive");
  return v;
}

std::array<double, kMaxDim> solve_linear(std::array<std::array<double, kMaxDim>, kMaxDim> a,
                                         std::array<double, kMaxDim> b, int n) {
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) throw NumericError("singular Jacobian in Newton inverse");
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (int r = c + 1; r < n; ++r) {
      double f = a[r][c] / a[c][c];
      for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::array<double, kMaxDim> x{};
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

MapSystem cat_map(const ParamSet& given) {
  MapSystem s;
  s.name = "cat_map";
  s.dim = 2;
  s.params = resolve(s.name, given, {});
  s.domain = Domain::rectangle(0.0, 1.0, 0.0, 1.0, true, true);
  Domain dom = s.domain;
  s.forward = [dom](const Point& p) { return dom.reduce(Point{2.0 * p[0] + p[1], p[0] + p[1]}); };
  s.inverse = [dom](const Point& p) { return dom.reduce(Point{p[0] - p[1], 2.0 * p[1] - p[0]}); };
  s.lipschitz_hint = 3.0;
  return s;
}

MapSystem circle_semistable(const ParamSet& given) {
  MapSystem s;
  s.name = "circle_semistable";
  s.dim = 1;
  s.params = resolve(s.name, given, {});
  s.domain = Domain::interval(0.0, kTwoPi, true);
  PointMap raw = [](const Point& p) {
    double h = std::sin(0.5 * p[0]);
    return Point{p[0] + h * h};
  };
  Domain dom = s.domain;
  s.forward = [raw, dom](const Point& p) { return dom.reduce(raw(p)); };
  s.inverse = newton_inverse(raw, dom);
  s.inverse_numeric = true;
  s.lipschitz_hint = 1.5;
  return s;
}

MapSystem cubic_interval(const ParamSet& given) {
  MapSystem s;
  s.name = "cubic_interval";
  s.dim = 1;
  s.params = resolve(s.name, given, {{"a", 0.25}});
  const double a = s.params.get("a");
  if (!(a > 0.0 && a < 0.5)) throw ConfigError("cubic_interval requires 0 < a < 0.5");
  s.domain = Domain::interval(-1.0, 1.0);
  PointMap raw = [a](const Point& p) { return Point{p[0] + a * p[0] * (1.0 - p[0] * p[0])}; };
  s.forward = raw;
  s.inverse = newton_inverse(raw, s.domain);
  s.inverse_numeric = true;
  s.lipschitz_hint = 1.0 + a;
  return s;
}

double ring_speed(double r) {
  if (r <= 1e-12) return 0.0;
  return r * r * std::sin(kPi / r);
}

MapSystem nested_rings(const ParamSet& given) {
  MapSystem s;
  s.name = "nested_rings";
  s.dim = 2;
  s.params = resolve(s.name, given, {{"time", 1.0}, {"step", 1e-2}});
  const double T = positive_param(s.params, "time");
  const double h = positive_param(s.params, "step");
  s.domain = Domain::rectangle(-1.25, 1.25, -1.25, 1.25);
  auto evolve = [T, h](const Point& p, double sign) {
    const double r = std::hypot(p[0], p[1]);
    const double th = std::atan2(p[1], p[0]) + sign * T;
    const double r1 = flows::flow_map([](double x) { return ring_speed(std::abs(x)); }, r, sign * T, h);
    return Point{r1 * std::cos(th), r1 * std::sin(th)};
  };
  s.forward = [evolve](const Point& p) { return evolve(p, 1.0); };
  s.inverse = [evolve](const Point& p) { return evolve(p, -1.0); };
  return s;
}

MapSystem nf_timeq(const ParamSet& given) {
  MapSystem s;
  s.name = "nf_timeq";
  s.dim = 2;
  s.params = resolve(s.name, given,
                     {{"p", 1.0},
                      {"q", 5.0},
                      {"mu", std::nullopt},
                      {"delta", std::nullopt},
                      {"B", 1.0},
                      {"C", -1.0},
                      {"omega1", 1.0},
                      {"omega2", std::nullopt},
                      {"omega3", std::nullopt},
                      {"rho0", 0.05},
                      {"D", std::nullopt},
                      {"radius", std::nullopt},
                      {"step", 1e-2},
                      {"power", 1.0}});
  flows::NormalFormParams nf;
  nf.p = integer_param(s.params, "p", 1);
  nf.q = integer_param(s.params, "q", 1);
  nf.B = s.params.get("B");
  nf.C = s.params.get("C");
  nf.omega_poly = {s.params.get("omega1")};
  if (s.params.has("omega2") || s.params.has("omega3")) {
    nf.omega_poly.push_back(s.params.get_or("omega2", 0.0));
    if (s.params.has("omega3")) nf.omega_poly.push_back(s.params.get("omega3"));
  }
  const double rho0 = positive_param(s.params, "rho0");
  if (s.params.has("D")) {
    if (s.params.has("mu") || s.params.has("delta"))
      throw ConfigError("nf_timeq: give either D (mu, delta derived from rho0) or mu/delta, not both");
    nf.validate();
    const auto r = flows::rescale(nf, rho0, s.params.get("D"));
    nf.mu = r.mu;
    nf.delta = r.delta;
  } else {
    nf.mu = s.params.get_or("mu", 0.0);
    nf.delta = s.params.get_or("delta", 0.0);
  }
  nf.validate();
  const double step = positive_param(s.params, "step");
  const int power = integer_param(s.params, "power", 1);
  const double half = s.params.has("radius") ? positive_param(s.params, "radius") : std::sqrt(4.0 * rho0);
  s.domain = Domain::rectangle(-half, half, -half, half);

  const double T = static_cast<double>(power);
  const flows::Complex turn = std::polar(1.0, T * nf.omega());
  auto field = [nf](const flows::Complex& z) { return flows::nf_field(z, nf); };
  s.forward = [=](const Point& p) {
    const flows::Complex z = flows::flow_map(field, flows::Complex(p[0], p[1]), T, step) * turn;
    return Point{z.real(), z.imag()};
  };
  s.inverse = [=](const Point& p) {
    const flows::Complex z = flows::flow_map(field, flows::Complex(p[0], p[1]) * std::conj(turn), -T, step);
    return Point{z.real(), z.imag()};
  };
  attach_involution(s, "conj");
  return s;
}

MapSystem periodic_spot(const ParamSet& given) {
  MapSystem s;
  s.name = "periodic_spot";
  s.dim = 2;
  s.params = resolve(s.name, given, {{"q", 3.0}, {"theta", std::nullopt}, {"eps", std::nullopt}, {"phistar", 0.0}});
  const double q = integer_param(s.params, "q", 1);
  double eps = 0.0;
  if (s.params.has("eps")) {
    if (s.params.has("theta")) throw ConfigError("periodic_spot: give theta or eps, not both");
    eps = s.params.get("eps");
  } else {
    const double theta = s.params.get_or("theta", kTwoPi / 5.0);
    eps = (1.0 - std::cos(theta)) / q;
  }
  const double ps = s.params.get("phistar");
  s.domain = Domain::rectangle(ps - 2.0, ps + 2.0, -0.5, 0.5);
  s.forward = [q, eps, ps](const Point& p) {
    return Point{p[0] + 2.0 * q * p[1], p[1] * (1.0 - 2.0 * q * eps) - eps * (p[0] - ps)};
  };
  // The matrix has determinant 1, so its inverse is the adjugate.
  s.inverse = [q, eps, ps](const Point& p) {
    const double u = p[0] - ps;
    return Point{ps + (1.0 - 2.0 * q * eps) * u - 2.0 * q * p[1], eps * u + p[1]};
  };
  s.lipschitz_hint = std::max(1.0 + 2.0 * q, std::abs(eps) + std::abs(1.0 - 2.0 * q * eps));
  return s;
}

MapSystem identity(const ParamSet& given) {
  MapSystem s;
  s.name = "identity";
  s.params = resolve(s.name, given, {{"dim", 2.0}});
  s.dim = integer_param(s.params, "dim", 1);
  if (s.dim > kMaxDim) throw ConfigError("identity: dim must be at most " + std::to_string(kMaxDim));
  s.domain.dim = s.dim;
  for (int i = 0; i < s.dim; ++i) {
    s.domain.lower[i] = 0.0;
    s.domain.upper[i] = 1.0;
  }
  s.forward = [](const Point& p) { return p; };
  s.inverse = [](const Point& p) { return p; };
  s.lipschitz_hint = 1.0;
  return s;
}

}  // namespace

Point FixedLine::at(double s) const {
  Point p(origin.dim);
  for (int i = 0; i < origin.dim; ++i) p[i] = origin[i] + s * direction[i];
  return p;
}

ParamSet::ParamSet(std::initializer_list<std::pair<std::string, double>> items) {
  for (const auto& [k, v] : items) set(k, v);
}

void ParamSet::set(const std::string& name, double value) {
  for (auto& [k, v] : items_)
    if (k == name) {
      v = value;
      return;
    }
  items_.emplace_back(name, value);
}

bool ParamSet::has(const std::string& name) const {
  for (const auto& kv : items_)
    if (kv.first == name) return true;
  return false;
}

double ParamSet::get(const std::string& name) const {
  for (const auto& kv : items_)
    if (kv.first == name) return kv.second;
  throw ConfigError("missing parameter '" + name + "'");
}

double ParamSet::get_or(const std::string& name, double fallback) const { return has(name) ? get(name) : fallback; }

std::pair<std::string, double> ParamSet::parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected name=value, got '" + text + "'");
  std::string name = text.substr(0, eq);
  std::string rhs = text.substr(eq + 1);
  double value = 0.0;
  const char* first = rhs.data();
  const char* last = rhs.data() + rhs.size();
  if (!rhs.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || rhs.empty())
    throw ConfigError("parameter '" + name + "' has non-numeric value '" + rhs + "'");
  return {name, value};
}

std::vector<std::string> builtin_system_names() {
  return {"cat_map", "circle_semistable", "cubic_interval", "nested_rings", "nf_timeq", "periodic_spot", "identity"};
}

MapSystem make_system(const std::string& name, const ParamSet& params) {
  MapSystem s;
  if (name == "cat_map")
    s = cat_map(params);
  else if (name == "circle_semistable")
    s = circle_semistable(params);
  else if (name == "cubic_interval")
    s = cubic_interval(params);
  else if (name == "nested_rings")
    s = nested_rings(params);
  else if (name == "nf_timeq")
    s = nf_timeq(params);
  else if (name == "periodic_spot")
    s = periodic_spot(params);
  else if (name == "identity")
    s = identity(params);
  else
    throw ConfigError("unknown system '" + name + "'");
  s.domain.validate();
  return s;
}

void attach_involution(MapSystem& sys, const std::string& name) {
  const Domain dom = sys.domain;
  InvolutionSpec inv;
  inv.name = name;
  if (name == "swap") {
    if (sys.dim != 2) throw ConfigError("involution 'swap' needs a 2-dimensional system");
    inv.eval = [dom](const Point& p) { return dom.reduce(Point{p[1], p[0]}); };
    const double lo = std::max(dom.lower[0], dom.lower[1]);
    const double hi = std::min(dom.upper[0], dom.upper[1]);
    if (lo <= hi) inv.fixed_line = FixedLine{Point{0.0, 0.0}, Point{1.0, 1.0}, lo, hi, "diagonal x = y"};
  } else if (name == "negate") {
    inv.eval = [dom](const Point& p) {
      Point q = p;
      for (int i = 0; i < p.dim; ++i) q[i] = -p[i];
      return dom.reduce(q);
    };
    Point zero(sys.dim);
    Point dir(sys.dim);
    dir[0] = 1.0;
    if (dom.contains(zero)) inv.fixed_line = FixedLine{zero, dir, 0.0, 0.0, "origin"};
  } else if (name == "conj") {
    if (sys.dim != 2) throw ConfigError("involution 'conj' needs a 2-dimensional system");
    inv.eval = [dom](const Point& p) { return dom.reduce(Point{p[0], -p[1]}); };
    if (dom.lower[1] <= 0.0 && 0.0 <= dom.upper[1])
      inv.fixed_line = FixedLine{Point{0.0, 0.0}, Point{1.0, 0.0}, dom.lower[0], dom.upper[0], "real axis y = 0"};
  } else {
    throw ConfigError("unknown involution '" + name + "' (expected swap, negate or conj)");
  }
  sys.involution = std::move(inv);
}

PointMap newton_inverse(PointMap raw_forward, Domain domain) {
  return [raw_forward = std::move(raw_forward), domain](const Point& target) {
    constexpr double tol = 1e-12;
    constexpr int max_iter = 50;
    constexpr double h = 1e-6;
    const int n = target.dim;
    Point y = target;
    for (int it = 0; it <= max_iter; ++it) {
      const Point fy = raw_forward(y);
      std::array<double, kMaxDim> r{};
      double res = 0.0;
      for (int i = 0; i < n; ++i) {
        r[i] = domain.axis_difference(fy, target, i);
        res = std::max(res, std::abs(r[i]));
      }
      if (!std::isfinite(res)) break;
      if (res <= tol) return domain.reduce(y);
      if (it == max_iter) break;
      std::array<std::array<double, kMaxDim>, kMaxDim> J{};
      for (int j = 0; j < n; ++j) {
        Point yp = y, ym = y;
        yp[j] += h;
        ym[j] -= h;
        const Point fp = raw_forward(yp), fm = raw_forward(ym);
        for (int i = 0; i < n; ++i) J[i][j] = domain.axis_difference(fp, fm, i) / (2.0 * h);
      }
      const auto dy = solve_linear(J, r, n);
      for (int i = 0; i < n; ++i) y[i] -= dy[i];
    }
    throw NumericError("Newton inverse did not converge");
  };
}

InverseReport check_inverse_consistency(const MapSystem& sys, std::span<const Point> samples, double tol) {
  if (!sys.has_inverse()) throw ConfigError("system '" + sys.name + "' has no inverse");
  InverseReport rep;
  rep.worst = Point(sys.dim);
  for (const Point& x : samples) {
    const double e = sys.domain.distance(sys.inverse(sys.forward(x)), x);
    if (!(e <= rep.max_error)) {
      rep.max_error = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
      rep.worst = x;
    }
  }
  rep.pass = rep.max_error < tol;
  return rep;
}

std::vector<Point> sample_grid(const Domain& domain, int n) {
  std::vector<Point> out;
  std::size_t total = 1;
  for (int i = 0; i < domain.dim; ++i) total *= static_cast<std::size_t>(n);
  out.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    Point p(domain.dim);
    std::size_t rem = k;
    for (int i = 0; i < domain.dim; ++i) {
      const auto c = static_cast<double>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
      p[i] = domain.lower[i] + (c + 0.5) * domain.extent(i) / n;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace mixdyn
