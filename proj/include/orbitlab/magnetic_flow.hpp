#pragma once

// Exact magnetic geodesics of (S^3, round metric, epsilon * d alpha).
//
// A magnetic geodesic solves  g'' - i eps g' + (c^2 - eps delta) g = 0  in C^2
// with c = |g'| and delta = Re<i g, g'> conserved.  Its closed form is
//   g(s) = exp(i th+ s) p+ + exp(i th- s) p-,
//   th+- = (eps +- sqrt(eps^2 + 4(c^2 - eps delta))) / 2,
//   p+-  = -+(th-+ x + i v) / (th+ - th-).

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "orbitlab/geometry.hpp"

namespace orbitlab {

struct ClosedFormOrbit {
  double theta_plus = 0.0;
  double theta_minus = 0.0;
  C2 p_plus;
  C2 p_minus;
  double c = 0.0;
  double delta = 0.0;
  double a = 0.0;
  double epsilon = 0.0;

  C2 position(double s) const;
  C2 velocity(double s) const;
  C2 acceleration(double s) const;
};

ClosedFormOrbit solve_closed_form(const TangentVector& t, const MagneticParams& m);

TangentVector evaluate(const ClosedFormOrbit& orbit, double s);

// |g'' - i eps g' + (c^2 - eps delta) g| at time s.
double ode_residual(const ClosedFormOrbit& orbit, double s);

// exp(i eps s / 2) exp(J a s) x, with exp(J a s) = cos(as) I + sin(as) J.
SpherePoint evaluate_quaternionic(const TangentVector& t, const MagneticParams& m, double s);

// Continued-fraction acceptance for rational frequency ratios.
inline constexpr long long kMaxDenominator = 1000000;
inline constexpr double kRationalTol = 1e-9;

struct Rational {
  long long num = 0;
  long long den = 1;
};

// Best approximant of x with denominator <= q_max satisfying
// |x - num/den| < tol / den^2, if any.
std::optional<Rational> rational_approximation(double x, long long q_max = kMaxDenominator,
                                               double tol = kRationalTol);

// Minimal period of the orbit in S^3; nullopt when the frequency ratio is
// irrational at the configured tolerance or the orbit is constant.
std::optional<double> minimal_period(const ClosedFormOrbit& orbit);

enum class PeriodBranch { kFast, kSlow };

struct PeriodBound {
  double bound = 0.0;
  PeriodBranch branch = PeriodBranch::kFast;
};

// 2 pi / c for c >= eps, 2 pi / eps for c <= eps.
PeriodBound period_lower_bound(double c, const MagneticParams& m);

// Euclidean radius of the Hopf projection of a magnetic geodesic on S^2(1/2).
double hopf_radius(double c, double delta, const MagneticParams& m);

// Unit axis n of the rotation of S^2 induced by exp(J a s), with
// J = i (n . sigma) in terms of Pauli matrices.
Eigen::Vector3d rotation_axis(const ClosedFormOrbit& orbit);

// Smallest T in (t_min, t_max] with state(T) = g state(0), g a unitary
// 2x2 matrix commuting with the flow (diagonal unitaries, -1, ...).  Solved
// exactly from the eigen-structure of p+ and p- under g.
std::optional<double> first_return_time(const ClosedFormOrbit& orbit, const Eigen::Matrix2cd& g,
                                        double t_min, double t_max);

C2 act(const Eigen::Matrix2cd& g, const C2& v);

// Distance between (x(T), v(T)/c) and g (x(0), v(0)/c).
double closure_defect(const ClosedFormOrbit& orbit, const Eigen::Matrix2cd& g, double T);

}  // namespace orbitlab
