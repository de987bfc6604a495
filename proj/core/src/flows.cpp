#include "mixdyn/flows.hpp"

#include <numbers>
#include <numeric>

#include "mixdyn/errors.hpp"

namespace mixdyn::flows {

namespace {

constexpr double kPi = std::numbers::pi;

Complex ipow(Complex z, int n) {
  Complex r{1.0, 0.0};
  Complex b = z;
  while (n > 0) {
    if (n & 1) r *= b;
    b *= b;
    n >>= 1;
  }
  return r;
}

double normalize_angle(double phi) {
  double r = std::remainder(phi, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

EquilibriumType classify_eigen(const std::array<Complex, 2>& ev) {
  constexpr double tol = 1e-9;
  auto sign = [](double re) { return re > tol ? 1 : (re < -tol ? -1 : 0); };
  int s0 = sign(ev[0].real());
  int s1 = sign(ev[1].real());
  if (s0 < 0 && s1 < 0) return EquilibriumType::Sink;
  if (s0 > 0 && s1 > 0) return EquilibriumType::Source;
  if (s0 * s1 < 0) return EquilibriumType::Saddle;
  if (s0 == 0 && s1 == 0 && std::abs(ev[0].imag()) > tol) return EquilibriumType::Center;
  return EquilibriumType::Degenerate;
}

std::array<Complex, 2> eigenvalues_2x2(const std::array<double, 4>& m) {
  double tr = m[0] + m[3];
  double det = m[0] * m[3] - m[1] * m[2];
  Complex disc = std::sqrt(Complex(tr * tr / 4.0 - det, 0.0));
  Complex l1 = tr / 2.0 - disc;
  Complex l2 = tr / 2.0 + disc;
  if (l1.real() > l2.real()) std::swap(l1, l2);
  return {l1, l2};
}

}  // namespace

double NormalFormParams::omega() const { return 2.0 * kPi * p / q; }

double NormalFormParams::Omega(double Z) const {
  double acc = 0.0;
  for (auto it = omega_poly.rbegin(); it != omega_poly.rend(); ++it) acc = (acc + *it) * Z;
  return acc;
}

double NormalFormParams::Omega_prime(double Z) const {
  double acc = 0.0;
  for (std::size_t k = omega_poly.size(); k-- > 0;) acc = acc * Z + static_cast<double>(k + 1) * omega_poly[k];
  return acc;
}

void NormalFormParams::validate() const {
  if (q < 3) throw ConfigError("normal form requires q >= 3, got q = " + std::to_string(q));
  if (p <= 0 || std::gcd(p, q) != 1)
    throw ConfigError("normal form requires co-prime p > 0 and q, got p = " + std::to_string(p));
  for (double v : {mu, delta, B, C})
    if (!std::isfinite(v)) throw ConfigError("normal form coefficient is not finite");
  for (double v : omega_poly)
    if (!std::isfinite(v)) throw ConfigError("Omega coefficient is not finite");
}

Complex nf_field(Complex z, const NormalFormParams& params) {
  const Complex I{0.0, 1.0};
  const Complex zc = std::conj(z);
  const double Z = std::norm(z);
  const int q = params.q;
  return -I * params.mu * z + I * params.Omega(Z) * z + I * params.delta * ipow(zc, q - 1) +
         I * params.B * ipow(z, q + 1) + I * params.C * z * ipow(zc, q);
}

Vec2 polar_field(double rho, double phi, const NormalFormParams& params) {
  const double q = params.q;
  const double rho_dot = 2.0 * std::pow(rho, q / 2.0) * (params.delta - (params.B - params.C) * rho) * std::sin(phi);
  const double phi_dot = q * (params.Omega(rho) - params.mu) +
                         q * std::pow(rho, (q - 2.0) / 2.0) * (params.delta + (params.B + params.C) * rho) * std::cos(phi);
  return {rho_dot, phi_dot};
}

RescaleResult rescale(const NormalFormParams& params, double rho0, double D) {
  if (!(rho0 > 0.0)) throw ConfigError("rescale requires rho0 > 0");
  if (params.B == params.C) throw ConfigError("rescale requires B != C (beta undefined)");
  const double omega1 = params.Omega1();
  if (omega1 == 0.0) throw ConfigError("rescale requires Omega1 = Omega'(0) != 0");
  const double q = params.q;
  const double rq = std::pow(rho0, q / 2.0);
  RescaleResult r;
  r.mu = params.Omega(rho0);
  r.delta = (params.B - params.C) * rho0 + (2.0 * params.B / omega1) * (params.B - params.C) * rq * D;
  r.time_scale = 2.0 * (params.C - params.B) * rq;
  r.beta = q * params.B / (params.B - params.C);
  return r;
}

NormalFormParams rescaled_params(const NormalFormParams& params, double rho0, double D) {
  RescaleResult r = rescale(params, rho0, D);
  NormalFormParams out = params;
  out.mu = r.mu;
  out.delta = r.delta;
  return out;
}

Vec2 rescaled_field(double V, double phi, const NormalFormParams& params, double rho0, double D) {
  const NormalFormParams nf = rescaled_params(params, rho0, D);
  const RescaleResult r = rescale(params, rho0, D);
  const double rq = std::pow(rho0, params.q / 2.0);
  const double scale = rq * 2.0 * params.B / params.Omega1();  // rho = rho0 - scale * V
  const double rho = rho0 - scale * V;
  if (rho < 0.0) throw NumericError("rescaled coordinate V maps outside rho >= 0");
  const Vec2 polar = polar_field(rho, phi, nf);
  return {-polar.a / scale / r.time_scale, polar.b / r.time_scale};
}

Vec2 limit_field(double V, double phi, double D, double beta) {
  return {(D + V) * std::sin(phi), beta * (V - std::cos(phi))};
}

double first_integral_K(double V, double phi, double D, double beta, double singular_floor) {
  const double u = D + V;
  if (std::abs(u) < singular_floor) throw NumericError("first integral is singular on the line V = -D");
  if (std::abs(beta - 1.0) < 1e-12) return (std::cos(phi) + D + u * std::log(std::abs(u))) / u;
  return (std::cos(phi) + D - u * beta / (beta - 1.0)) / std::pow(std::abs(u), beta);
}

std::string to_string(EquilibriumType type) {
  switch (type) {
    case EquilibriumType::Saddle: return "saddle";
    case EquilibriumType::Sink: return "sink";
    case EquilibriumType::Source: return "source";
    case EquilibriumType::Center: return "center";
    case EquilibriumType::Degenerate: return "degenerate";
  }
  return "degenerate";
}

std::array<double, 4> limit_jacobian(double V, double phi, double D, double beta) {
  return {std::sin(phi), (D + V) * std::cos(phi), beta, beta * std::sin(phi)};
}

std::vector<Equilibrium> equilibria(double D, double beta) {
  if (beta == 0.0 || !std::isfinite(beta) || !std::isfinite(D))
    throw ConfigError("equilibria require finite D and beta != 0");
  std::vector<Equilibrium> out;
  auto add = [&](std::string name, double V, double phi) {
    Equilibrium e;
    e.name = std::move(name);
    e.V = V;
    e.phi = normalize_angle(phi);
    if (e.phi == -kPi) e.phi = kPi;
    e.eigenvalues = eigenvalues_2x2(limit_jacobian(e.V, e.phi, D, beta));
    e.type = classify_eigen(e.eigenvalues);
    out.push_back(std::move(e));
  };
  add("O+", 1.0, 0.0);
  add("O-", -1.0, kPi);
  if (std::abs(D) < 1.0) {
    const double a = std::acos(-D);  // in (0, pi)
    add("M_a", -D, -a);
    add("M_r", -D, a);
  }
  return out;
}

}  // namespace mixdyn::flows
