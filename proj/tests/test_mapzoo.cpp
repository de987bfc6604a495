#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mixdyn/errors.hpp"
#include "mixdyn/mapzoo.hpp"

using namespace mixdyn;

namespace {

constexpr double kPi = std::numbers::pi;

double derivative_1d(const MapSystem& s, double x, double h = 1e-6) {
  return (s.forward(Point{x + h})[0] - s.forward(Point{x - h})[0]) / (2 * h);
}

double radius_after(const MapSystem& s, double r) { return std::hypot(s.forward(Point{r, 0})[0], s.forward(Point{r, 0})[1]); }

}  // namespace

TEST_CASE("every builtin can be built with defaults") {
  for (const auto& name : builtin_system_names()) {
    CAPTURE(name);
    const MapSystem s = make_system(name);
    CHECK(s.name == name);
    CHECK(s.dim == s.domain.dim);
    CHECK(static_cast<bool>(s.forward));
    CHECK(s.has_inverse());
  }
}

TEST_CASE("parameter errors") {
  CHECK_THROWS_AS(make_system("no_such_map"), ConfigError);
  CHECK_THROWS_AS(make_system("cubic_interval", {{"b", 1.0}}), ConfigError);
  CHECK_THROWS_AS(make_system("cubic_interval", {{"a", NAN}}), ConfigError);
  CHECK_THROWS_AS(make_system("nf_timeq", {{"q", 2}}), ConfigError);
  CHECK_THROWS_AS(make_system("nf_timeq", {{"p", 2}, {"q", 4}}), ConfigError);
  CHECK_THROWS_AS(make_system("nf_timeq", {{"D", 0}, {"mu", 0.1}}), ConfigError);
  CHECK_THROWS_AS(make_system("periodic_spot", {{"eps", 0.1}, {"theta", 1.0}}), ConfigError);
  CHECK_THROWS_AS(ParamSet::parse_assignment("a"), ConfigError);
  CHECK_THROWS_AS(ParamSet::parse_assignment("a=x"), ConfigError);
  CHECK(ParamSet::parse_assignment("a=0.5") == std::pair<std::string, double>{"a", 0.5});
}

TEST_CASE("param set keeps order and replaces values") {
  ParamSet p{{"b", 1}, {"a", 2}};
  p.set("b", 3);
  CHECK(p.size() == 2);
  CHECK(p.items()[0].first == "b");
  CHECK(p.get("b") == 3);
  CHECK(p.get_or("c", 7) == 7);
  CHECK_THROWS_AS(p.get("c"), ConfigError);
}

TEST_CASE("cat map values, inverse and area") {
  const MapSystem s = make_system("cat_map");
  const Point y = s.forward(Point{0.25, 0.5});
  CHECK(y[0] == doctest::Approx(0.0));
  CHECK(y[1] == doctest::Approx(0.75));
  const auto samples = sample_grid(s.domain, 10);
  CHECK(samples.size() == 100);
  CHECK(check_inverse_consistency(s, samples, 1e-12).pass);
  // Jacobian [[2,1],[1,1]] has determinant 1.
  const double h = 1e-3;
  const Point c{0.3, 0.4};
  const Point fx = s.forward(Point{c[0] + h, c[1]}), fy = s.forward(Point{c[0], c[1] + h}), f0 = s.forward(c);
  const double det = ((fx[0] - f0[0]) * (fy[1] - f0[1]) - (fx[1] - f0[1]) * (fy[0] - f0[0])) / (h * h);
  CHECK(std::abs(det) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("circle map has its fixed point at zero") {
  const MapSystem s = make_system("circle_semistable");
  CHECK(s.forward(Point{0.0})[0] == 0.0);
  CHECK(s.forward(Point{1.0})[0] > 1.0);
  CHECK(check_inverse_consistency(s, sample_grid(s.domain, 50), 1e-10).pass);
}

TEST_CASE("cubic interval fixed points and multipliers") {
  const MapSystem s = make_system("cubic_interval");
  CHECK(s.forward(Point{1.0})[0] == doctest::Approx(1.0));
  CHECK(s.forward(Point{0.0})[0] == 0.0);
  CHECK(s.forward(Point{-1.0})[0] == doctest::Approx(-1.0));
  CHECK(derivative_1d(s, 0.0) == doctest::Approx(1.25).epsilon(1e-8));
  CHECK(derivative_1d(s, 1.0 - 1e-5) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(derivative_1d(s, -1.0 + 1e-5) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(check_inverse_consistency(s, sample_grid(s.domain, 100), 1e-10).pass);
}

TEST_CASE("nested rings: invariant circles alternate") {
  const MapSystem s = make_system("nested_rings");
  for (int n = 1; n <= 4; ++n) {
    CAPTURE(n);
    const double r = 1.0 / n;
    CHECK(std::abs(radius_after(s, r) - r) < 1e-9);
    const double h = 1e-4;
    const double slope = (radius_after(s, r + h) - radius_after(s, r - h)) / (2 * h);
    CHECK((slope < 1.0) == (n % 2 == 0));
  }
  // Integrating the radial equation from r = 1/2 +- 0.05 moves towards 1/2.
  MapSystem longer = make_system("nested_rings", {{"time", 20}});
  CHECK(std::abs(radius_after(longer, 0.55) - 0.5) < 0.05);
  CHECK(std::abs(radius_after(longer, 0.45) - 0.5) < 0.05);
}

TEST_CASE("inverse consistency of the flow maps") {
  const MapSystem nf = make_system("nf_timeq", {{"step", 1e-3}});
  CHECK(check_inverse_consistency(nf, sample_grid(nf.domain, 10), 1e-8).pass);
  const MapSystem rings = make_system("nested_rings");
  CHECK(check_inverse_consistency(rings, sample_grid(rings.domain, 10), 1e-8).pass);
  MapSystem bare = make_system("cubic_interval");
  bare.inverse = nullptr;
  CHECK_THROWS_AS(check_inverse_consistency(bare, sample_grid(bare.domain, 3), 1e-8), ConfigError);
}

TEST_CASE("involutions square to the identity and reverse the map") {
  for (const auto& name : builtin_system_names()) {
    const MapSystem s = make_system(name);
    if (!s.involution) continue;
    CAPTURE(name);
    double inv_err = 0.0, rev_err = 0.0;
    for (const Point& x : sample_grid(s.domain, 20)) {
      const auto& g = s.involution->eval;
      inv_err = std::max(inv_err, s.domain.distance(g(g(x)), x));
      rev_err = std::max(rev_err, s.domain.distance(s.inverse(x), g(s.forward(g(x)))));
    }
    CHECK(inv_err < 1e-12);
    CHECK(rev_err < 1e-8);
  }
}

TEST_CASE("forward keeps the domain for the self-mapping builtins") {
  // The remaining builtins (nested rings, nf_timeq, periodic_spot) live on a
  // rectangle around the dynamics of interest and do push some corners out.
  for (const char* name : {"cat_map", "circle_semistable", "cubic_interval", "identity"}) {
    CAPTURE(name);
    const MapSystem s = make_system(name);
    for (const Point& x : sample_grid(s.domain, 20)) CHECK(s.domain.contains(s.forward(x)));
  }
}

TEST_CASE("named involutions") {
  MapSystem s = make_system("periodic_spot");
  attach_involution(s, "conj");
  CHECK(s.involution->eval(Point{0.5, 0.25}) == Point{0.5, -0.25});
  attach_involution(s, "swap");
  CHECK(s.involution->eval(Point{0.5, 0.25}) == Point{0.25, 0.5});
  MapSystem c = make_system("circle_semistable");
  attach_involution(c, "negate");
  CHECK(c.involution->eval(Point{1.0})[0] == doctest::Approx(2 * kPi - 1.0));
  CHECK_THROWS_AS(attach_involution(c, "swap"), ConfigError);
  CHECK_THROWS_AS(attach_involution(c, "mirror"), ConfigError);
}

TEST_CASE("Newton inverse inverts a monotone map and reports failure") {
  const Domain d = Domain::interval(-2, 2);
  const PointMap inv = newton_inverse([](const Point& p) { return Point{p[0] + 0.3 * std::sin(p[0])}; }, d);
  for (double x : {-1.5, -0.2, 0.0, 0.7, 1.9}) {
    const double y = x + 0.3 * std::sin(x);
    CHECK(inv(Point{y})[0] == doctest::Approx(x).epsilon(1e-12));
  }
  const PointMap flat = newton_inverse([](const Point&) { return Point{0.0}; }, d);
  CHECK_THROWS_AS(flat(Point{1.0}), NumericError);
}
