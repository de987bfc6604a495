#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mixdyn/errors.hpp"
#include "mixdyn/revcore.hpp"

using namespace mixdyn;

namespace {

constexpr double kPi = std::numbers::pi;

MapSystem linear(double a, double b, double c, double d) {
  MapSystem s;
  s.name = "linear";
  s.dim = 2;
  s.domain = Domain::rectangle(-1, 1, -1, 1);
  s.forward = [=](const Point& p) { return Point{a * p[0] + b * p[1], c * p[0] + d * p[1]}; };
  return s;
}

}  // namespace

TEST_CASE("2x2 eigenvalues") {
  const auto ev = eigenvalues_2x2(2, 0, 0, 0.5);
  CHECK(ev[0].real() == doctest::Approx(0.5));
  CHECK(ev[1].real() == doctest::Approx(2));
  const auto rot = eigenvalues_2x2(0, -1, 1, 0);
  CHECK(rot[0] == Complex(0, -1));
  CHECK(rot[1] == Complex(0, 1));
}

TEST_CASE("multipliers of linear and builtin maps") {
  SUBCASE("hyperbolic diagonal map") {
    const Multipliers m = multipliers_at(linear(2, 0, 0, 0.5), Point{0, 0}, 1);
    CHECK(m.type == PointType::Hyperbolic);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].pairing_error < 1e-9);
    CHECK(std::abs(m.eigenvalues[0] - Complex(0.5, 0)) < 1e-8);
    CHECK(std::abs(m.eigenvalues[1] - Complex(2, 0)) < 1e-8);
  }
  SUBCASE("normal form map is elliptic at the origin") {
    const Multipliers m = multipliers_at(make_system("nf_timeq"), Point{0, 0}, 1);
    CHECK(m.type == PointType::Elliptic);
    for (const Complex& l : m.eigenvalues) CHECK(std::abs(std::abs(l) - 1.0) < 1e-6);
  }
  SUBCASE("cubic interval repeller") {
    const Multipliers m = multipliers_at(make_system("cubic_interval"), Point{0.0}, 1);
    REQUIRE(m.eigenvalues.size() == 1);
    CHECK(m.eigenvalues[0].real() == doctest::Approx(1.25).epsilon(1e-8));
    CHECK(m.pairs.empty());
  }
  SUBCASE("not a periodic point") {
    CHECK_THROWS_AS(multipliers_at(make_system("cubic_interval"), Point{0.5}, 1), NumericError);
  }
}

TEST_CASE("reversibility checks") {
  const MapSystem nf = make_system("nf_timeq");
  const auto samples = sample_grid(nf.domain, 10);
  const ReversibilityReport ok = verify_reversibility(nf, samples, 1e-8);
  CHECK(ok.pass);
  CHECK(ok.involution_residual < 1e-15);
  CHECK(check_involution(nf).pass);

  MapSystem cat = make_system("cat_map");
  CHECK_THROWS_AS(verify_reversibility(cat, samples, 1e-8), ConfigError);
  attach_involution(cat, "swap");
  const ReversibilityReport bad = verify_reversibility(cat, sample_grid(cat.domain, 10), 1e-8);
  CHECK_FALSE(bad.pass);
  CHECK(bad.max_residual > 0.1);
}

TEST_CASE("symmetric fixed points") {
  SUBCASE("normal form map: the origin lies on Fix(g)") {
    const MapSystem nf = make_system("nf_timeq", {{"D", 0}});
    const FixedPointSearch fp = find_symmetric_fixed_points(nf, {}, std::make_pair(-0.1, 0.1));
    bool origin = false;
    for (const auto& p : fp.points) origin = origin || std::abs(p.location[0]) < 1e-8;
    CHECK(origin);
  }
  SUBCASE("identity is degenerate") {
    const MapSystem id = make_system("identity", {{"dim", 2}});
    const FixedLine diag{Point{0, 0}, Point{1, 1}, 0, 1, "diagonal"};
    const FixedPointSearch fp = find_fixed_points_on_line(id, diag);
    CHECK(fp.degenerate);
    CHECK_FALSE(fp.warning.empty());
  }
  SUBCASE("no involution") {
    CHECK_THROWS_AS(find_symmetric_fixed_points(make_system("cubic_interval")), ConfigError);
  }
}

TEST_CASE("periodic spot") {
  const SpotCheck sc = periodic_spot_check(1, kPi / 2);
  CHECK(sc.epsilon == doctest::Approx(1.0));
  CHECK(sc.k == 4);
  CHECK(sc.determinant == doctest::Approx(1.0));
  CHECK(sc.residual < 1e-12);
  CHECK(sc.max_return_error < 1e-12);
  const SpotCheck five = periodic_spot_check(3, 2 * kPi / 5);
  CHECK(five.k == 5);
  CHECK(five.residual < 1e-12);
  CHECK_THROWS_AS(periodic_spot_check(3, 4.0), ConfigError);
  CHECK_THROWS_AS(periodic_spot_check(3, 0.0), ConfigError);
}

TEST_CASE("negation commutes with the odd cubic map instead of reversing it") {
  // g f g = f here, which differs from the inverse away from the fixed points.
  MapSystem s = make_system("cubic_interval");
  attach_involution(s, "negate");
  const ReversibilityReport r = verify_reversibility(s, sample_grid(s.domain, 20), 1e-8);
  CHECK_FALSE(r.pass);
  CHECK(r.involution_residual == 0.0);
  const FixedPointSearch fp = find_symmetric_fixed_points(s);
  bool zero = false;
  for (const auto& p : fp.points)
    if (std::abs(p.location[0]) < 1e-10) {
      zero = true;
      CHECK(p.multipliers.type == PointType::Hyperbolic);
    }
  CHECK(zero);
}
