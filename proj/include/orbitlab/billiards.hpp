#pragma once

// Magnetic billiards on S^3 with two caps around the Hopf link removed.
//
// The south cap is {theta < w} around (0, e^{it}); the north cap is
// {theta > pi/2 - w} around (e^{it}, 0).  Between bounces the motion is an
// exact magnetic geodesic; at the wall the theta-component of the velocity is
// reversed, which keeps c, delta, c1 and c2.
//
// A wall co-latitude of 0 selects the ideal table S^3 minus the Hopf link: an
// arc meeting (e^{it}, 0) leaves with its contact-plane component reversed,
// v -> diag(1, -1) v, and symmetrically at (0, e^{it}).  Delta is kept.

#include <optional>
#include <vector>

#include "orbitlab/magnetic_flow.hpp"

namespace orbitlab {

enum class CapSide { kNorth, kSouth };

struct CapGeometry {
  double wall_colatitude = 0.0;
  double r = 0.0;  // radius 1/2 sin(2w) of the wall circle on S^2(1/2); 0 for the ideal cap
  CapSide which = CapSide::kNorth;

  static CapGeometry make(double wall, CapSide which);
};

struct BounceEvent {
  double time = 0.0;
  TangentVector state_in;
  TangentVector state_out;
  CapGeometry cap;
};

struct BounceArc {
  ClosedFormOrbit orbit;  // local time 0 at the arc start
  double start = 0.0;
  double duration = 0.0;
};

struct BounceOrbit {
  std::vector<BounceArc> arcs;
  std::vector<BounceEvent> events;
  int type = 1;  // 1: no bounce, 2: one cap, 3: both caps
  int grazing_skipped = 0;
  double end_time = 0.0;

  TangentVector state_at(double t) const;
  TangentVector final_state() const { return state_at(end_time); }
};

// Unit vector along d/dtheta at x (requires z1, z2 != 0).
C2 theta_direction(const SpherePoint& x);
// Rate of change of theta, g(e_theta, v).
double theta_rate(const TangentVector& t);

// Reverses the theta-component of the velocity.  The base point has to lie on
// the wall within 1e-9 and the velocity must not point out of the cap.
TangentVector reflect(const TangentVector& t, const CapGeometry& cap);

inline constexpr double kGrazingTolerance = 1e-10;
// An arc counts as passing through a pole fibre of the ideal table when the
// extreme of |z1|^2 is within this of 1 (or 0).
inline constexpr double kPoleTolerance = 1e-12;

// Traces from t0 (outside both caps) until t_end.  max_events guards against
// runaway loops; tracing stops early once it is reached.
BounceOrbit trace_billiard(const TangentVector& t0, const MagneticParams& m, double wall,
                           double t_end, int max_events = 100000);

struct ShootingOptions {
  int max_iter = 200;
  double tolerance = 1e-9;  // closure defect
  // Close up to the lens-space shift: final = zp_action(initial, zp_order, zp_power).
  int zp_order = 1;
  int zp_power = 0;
};

struct PeriodicBounce {
  BounceOrbit orbit;
  double period = 0.0;
  double defect = 0.0;
  int iterations = 0;
};

// Closure defect |x(T) - x(0)| + |v(T) - v(0)| / c of the traced orbit.
double bounce_defect(const TangentVector& t0, const MagneticParams& m, double wall, double T);

// Levenberg-Marquardt on the return map in (theta, phi1, phi2, theta', phi1', T)
// with phi2' fixed by the speed.  Without a period guess, the first near
// return of the traced seed is used.
std::optional<PeriodicBounce> find_periodic_bounce(const TangentVector& seed,
                                                   const MagneticParams& m, double wall,
                                                   std::optional<double> period_guess = std::nullopt,
                                                   const ShootingOptions& options = {});

// Period predicted for the bounce orbit obtained from a smooth orbit through
// the Hopf link by mirroring it at each passage through a pole fibre, in the
// limit of vanishing caps.  A passage through (e^{it}, 0) multiplies by
// diag(1, -1), one through (0, e^{it}) by diag(-1, 1).
std::optional<double> mirror_extended_period(const ClosedFormOrbit& smooth, double t_max);

// Half-angle, seen from the centre of a projected orbit circle of radius R,
// of the arc inside a cap of radius r whose centre is at distance d.
double cap_entry_angle(double R, double d, double r);

// The same angle read off a smooth orbit: entry and exit times of the cap
// around its deepest point, located by root finding on |z1|^2, times the
// angular rate a of the projected circle.  nullopt when the orbit misses the
// cap.
struct CapPassage {
  double entry = 0.0;
  double exit = 0.0;
  double alpha = 0.0;
};
std::optional<CapPassage> measured_cap_passage(const ClosedFormOrbit& orbit, const CapGeometry& cap);

}  // namespace orbitlab
