#pragma once

// Hopf-coordinate form of the magnetic system with a cap potential.
//
//   z1 = e^{i phi1} sin(theta),  z2 = e^{i phi2} cos(theta)
//   L = 1/2 (theta'^2 + s^2 phi1'^2 + C^2 phi2'^2) + eps (s^2 phi1' + C^2 phi2') - V(theta)
//
// with s = sin(theta), C = cos(theta).  phi1 and phi2 are cyclic, so
// c1 = s^2 (phi1' + eps) and c2 = C^2 (phi2' + eps) are conserved and theta
// moves in the effective potential W below.
//
// The coupling eps in L is the coefficient of Re<ix, dx> = 2 alpha.  The
// resulting flow is the ambient magnetic flow of strength -2 eps; use
// ambient_strength() / coupling_for_ambient() to move between the two.

#include <optional>
#include <vector>

#include "orbitlab/geometry.hpp"
#include "orbitlab/ode.hpp"

namespace orbitlab {

struct ReducedState {
  double theta = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double theta_dot = 0.0;
  double phi1_dot = 0.0;
  double phi2_dot = 0.0;

  double speed() const;
  Vec6 as_vector() const;
  static ReducedState from_vector(const Vec6& y);
};

struct ConservedSet {
  double c1 = 0.0;
  double c2 = 0.0;
  double energy = 0.0;  // kinetic energy plus V(theta)
  double delta = 0.0;
};

enum class PotentialProfile { kNone, kPolynomialBarrier };

// V(theta) = B ((w - d)_+ / (d - (w - w^k)))^2 with d = min(theta, pi/2 - theta).
struct PotentialSpec {
  double epsilon = 0.0;
  double wall = 0.0;
  double sharpness = 4.0;
  double barrier = 1.0;
  PotentialProfile profile = PotentialProfile::kNone;

  static PotentialSpec none(double epsilon = 0.0);
  static PotentialSpec polynomial_barrier(double epsilon, double k = 4.0, double b = 1.0);
  // Distance from the poles at which the potential becomes infinite.
  double inner_wall() const;
};

double ambient_strength(double coupling);
double coupling_for_ambient(double ambient_epsilon);

ReducedState to_reduced(const TangentVector& t);
TangentVector from_reduced(const ReducedState& r);

ConservedSet conserved_set(const ReducedState& r, const MagneticParams& m, const PotentialSpec& v);

double potential_value(const PotentialSpec& v, double theta);
double potential_derivative(const PotentialSpec& v, double theta);

double effective_potential(const ConservedSet& cs, const MagneticParams& m, const PotentialSpec& v,
                           double theta);

double effective_potential_derivative(const ConservedSet& cs, const MagneticParams& m,
                                     const PotentialSpec& v, double theta);

// Roots of energy - W on (0, pi/2), ascending.
std::vector<double> turning_points(const ConservedSet& cs, const MagneticParams& m,
                                   const PotentialSpec& v);

// Libration period of theta.  With several allowed wells, theta_hint picks
// the one containing it; otherwise the first well is used.
double quadrature_period(const ConservedSet& cs, const MagneticParams& m, const PotentialSpec& v,
                         std::optional<double> theta_hint = std::nullopt);

enum class Termination { kCompleted, kChartExit, kStepUnderflow };

struct ReducedTrajectory {
  std::vector<double> times;
  std::vector<ReducedState> states;
  // Times at which theta reaches a local maximum, resolved inside steps.
  std::vector<double> theta_maxima;
  Termination termination = Termination::kCompleted;
  double end_time = 0.0;
};

// Distance to the poles at which the integration hands back a chart exit.
inline constexpr double kChartMargin = 1e-6;

ReducedTrajectory integrate(const ReducedState& r0, const MagneticParams& m, const PotentialSpec& v,
                            double t_end, double dt, const OdeOptions& options = {});

}  // namespace orbitlab
