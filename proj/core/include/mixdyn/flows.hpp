#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace mixdyn::flows {

using Complex = std::complex<double>;

// Planar state used by the polar, rescaled and limit systems. The first
// component is the radial-type coordinate (rho or V), the second the angle.
struct Vec2 {
  double a = 0.0;
  double b = 0.0;

  friend Vec2 operator+(Vec2 u, Vec2 v) { return {u.a + v.a, u.b + v.b}; }
  friend Vec2 operator-(Vec2 u, Vec2 v) { return {u.a - v.a, u.b - v.b}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.a, s * v.b}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }
inline bool is_finite(const Vec2& v) { return std::isfinite(v.a) && std::isfinite(v.b); }

// Coefficients of the truncated reversible normal form
//   z' = -i mu z + i Omega(|z|^2) z + i delta (z*)^(q-1) + i B z^(q+1) + i C z (z*)^q
// near an elliptic point with multipliers exp(+-2 pi i p/q).
struct NormalFormParams {
  int p = 1;
  int q = 5;
  double mu = 0.0;
  double delta = 0.0;
  double B = 0.0;
  double C = 0.0;
  // Omega(Z) = sum_k omega_poly[k] * Z^(k+1); Omega(0) = 0 by construction.
  std::vector<double> omega_poly{1.0};

  double omega() const;              // 2 pi p / q
  double Omega(double Z) const;
  double Omega_prime(double Z) const;
  double Omega1() const { return Omega_prime(0.0); }

  // Throws ConfigError unless q >= 3, gcd(p, q) = 1 and all coefficients are finite.
  void validate() const;
};

// Right-hand side of the complex normal form, exactly as written above.
Complex nf_field(Complex z, const NormalFormParams& params);

// The same system in the coordinates z = sqrt(rho) exp(i phi / q):
//   rho' = 2 rho^(q/2) (delta - (B - C) rho) sin(phi)
//   phi' = q (Omega(rho) - mu) + q rho^((q-2)/2) (delta + (B + C) rho) cos(phi)
// Returned as {rho', phi'}. rho must be non-negative.
Vec2 polar_field(double rho, double phi, const NormalFormParams& params);

struct RescaleResult {
  double mu = 0.0;
  double delta = 0.0;
  double time_scale = 0.0;  // s = time_scale * t, time_scale = 2 (C - B) rho0^(q/2)
  double beta = 0.0;        // q B / (B - C)
};

// Parameter choice that zooms onto the circle rho = rho0:
//   mu = Omega(rho0),
//   delta = (B - C) rho0 + (2B / Omega1) (B - C) rho0^(q/2) D.
// Only p, q, B, C and omega_poly of `params` are used.
RescaleResult rescale(const NormalFormParams& params, double rho0, double D);

// Parameters with mu and delta replaced by the rescale() choice.
NormalFormParams rescaled_params(const NormalFormParams& params, double rho0, double D);

// Exact vector field of the polar system after the substitution
//   rho = rho0 - rho0^(q/2) (2B / Omega1) V,  s = 2 (C - B) rho0^(q/2) t
// with mu, delta from rescale(). Returned as {dV/ds, dphi/ds}. Its distance to
// limit_field() is O(rho0^((q-2)/2)).
Vec2 rescaled_field(double V, double phi, const NormalFormParams& params, double rho0, double D);

// Limit system on the cylinder: V' = (D + V) sin(phi), phi' = beta (V - cos(phi)).
Vec2 limit_field(double V, double phi, double D, double beta);

// Constant K of the phase curve through (V, phi):
//   beta != 1: cos(phi) + D = (D + V) beta / (beta - 1) + K |D + V|^beta
//   beta == 1: cos(phi) + D = K (D + V) - (D + V) ln|D + V|
// Throws NumericError when |D + V| < singular_floor.
double first_integral_K(double V, double phi, double D, double beta, double singular_floor = 1e-12);

enum class EquilibriumType { Saddle, Sink, Source, Center, Degenerate };

std::string to_string(EquilibriumType type);

struct Equilibrium {
  std::string name;  // "O+", "O-", "M_a", "M_r"
  double V = 0.0;
  double phi = 0.0;  // in (-pi, pi]
  EquilibriumType type = EquilibriumType::Degenerate;
  std::array<Complex, 2> eigenvalues{};
};

// Jacobian of limit_field at (V, phi), row-major.
std::array<double, 4> limit_jacobian(double V, double phi, double D, double beta);

// Equilibria of the limit system: the symmetric pair O+ = (1, 0), O- = (-1, pi)
// and, for |D| < 1, M_a = (-D, phi_a) with sin(phi_a) < 0 and M_r = (-D, phi_r)
// with sin(phi_r) > 0. Types come from the Jacobian eigenvalues with a 1e-9
// tolerance on real parts. Throws ConfigError for beta == 0.
std::vector<Equilibrium> equilibria(double D, double beta);

// --- fixed-step classical Runge-Kutta -------------------------------------

template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  double step = 0.0;
  bool blew_up = false;
};

// Number of uniform steps used to cover |T| with steps no longer than `step`.
inline long steps_for(double T, double step) {
  double n = std::ceil(std::abs(T) / step - 1e-9);
  return n < 1.0 ? 1L : static_cast<long>(n);
}

template <class State, class Field>
State rk4_step(Field&& field, const State& x, double h) {
  const State k1 = field(x);
  const State k2 = field(x + (0.5 * h) * k1);
  const State k3 = field(x + (0.5 * h) * k2);
  const State k4 = field(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Integrates x' = field(x) from x0 over time T (negative T runs backward) with
// ceil(|T| / step) uniform steps. The trajectory stores the initial state and
// every step; on a non-finite state it stops and sets blew_up.
template <class State, class Field>
Trajectory<State> integrate(Field&& field, const State& x0, double T, double step) {
  Trajectory<State> traj;
  const long n = steps_for(T, step);
  const double h = T / static_cast<double>(n);
  traj.step = std::abs(h);
  traj.times.reserve(static_cast<std::size_t>(n) + 1);
  traj.states.reserve(static_cast<std::size_t>(n) + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  State x = x0;
  for (long i = 1; i <= n; ++i) {
    x = rk4_step(field, x, h);
    if (!is_finite(x)) {
      traj.blew_up = true;
      break;
    }
    traj.times.push_back(h * static_cast<double>(i));
    traj.states.push_back(x);
  }
  return traj;
}

// Final state of integrate() without storing the path. Returns a non-finite
// state if the integration blew up.
template <class State, class Field>
State flow_map(Field&& field, const State& x0, double T, double step) {
  const long n = steps_for(T, step);
  const double h = T / static_cast<double>(n);
  State x = x0;
  for (long i = 0; i < n; ++i) {
    x = rk4_step(field, x, h);
    if (!is_finite(x)) return x;
  }
  return x;
}

}  // namespace mixdyn::flows
