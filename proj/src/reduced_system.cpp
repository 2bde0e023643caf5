#include "orbitlab/reduced_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace orbitlab {

namespace {

constexpr double kHalfPi = 0.5 * kPi;
constexpr int kScanPoints = 40000;

double pole_distance(double theta) { return std::min(theta, kHalfPi - theta); }

void check_chart(double theta, const char* what) {
  if (!(theta > 0.0 && theta < kHalfPi)) {
    throw Error(ErrorKind::kChartDomain, "reduced_system",
                std::string(what) + ": theta outside (0, pi/2), chart is singular");
  }
}

}  // namespace

double ReducedState::speed() const {
  const double s = std::sin(theta), C = std::cos(theta);
  return std::sqrt(theta_dot * theta_dot + s * s * phi1_dot * phi1_dot +
                   C * C * phi2_dot * phi2_dot);
}

Vec6 ReducedState::as_vector() const {
  Vec6 y;
  y << theta, phi1, phi2, theta_dot, phi1_dot, phi2_dot;
  return y;
}

ReducedState ReducedState::from_vector(const Vec6& y) {
  return {y[0], y[1], y[2], y[3], y[4], y[5]};
}

PotentialSpec PotentialSpec::none(double epsilon) {
  PotentialSpec v;
  v.epsilon = epsilon;
  v.wall = epsilon;
  return v;
}

PotentialSpec PotentialSpec::polynomial_barrier(double epsilon, double k, double b) {
  if (!(epsilon > 0.0 && epsilon < 0.5) || !(k > 1.0) || !(b > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "reduced_system",
                "barrier needs 0 < eps < 1/2, k > 1, B > 0");
  }
  PotentialSpec v;
  v.epsilon = epsilon;
  v.wall = epsilon;
  v.sharpness = k;
  v.barrier = b;
  v.profile = PotentialProfile::kPolynomialBarrier;
  return v;
}

double PotentialSpec::inner_wall() const {
  if (profile == PotentialProfile::kNone) return 0.0;
  return wall - std::pow(wall, sharpness);
}

double ambient_strength(double coupling) { return -2.0 * coupling; }
double coupling_for_ambient(double ambient_epsilon) { return -0.5 * ambient_epsilon; }

ReducedState to_reduced(const TangentVector& t) {
  const C2& x = t.base().coords();
  const C2& v = t.vec();
  const HopfCoords h = to_hopf(t.base());
  const double s = std::sin(h.theta), C = std::cos(h.theta);
  if (s < kTolAlg || C < kTolAlg) {
    throw Error(ErrorKind::kChartDomain, "reduced_system",
                "base point lies on a Hopf fibre theta in {0, pi/2}");
  }
  const cplx u1 = v.z1 * std::conj(x.z1) / std::abs(x.z1);  // C theta' + i s phi1'
  const cplx u2 = v.z2 * std::conj(x.z2) / std::abs(x.z2);  // -s theta' + i C phi2'
  ReducedState r;
  r.theta = h.theta;
  r.phi1 = h.phi1;
  r.phi2 = h.phi2;
  r.theta_dot = C * u1.real() - s * u2.real();
  r.phi1_dot = u1.imag() / s;
  r.phi2_dot = u2.imag() / C;
  return r;
}

TangentVector from_reduced(const ReducedState& r) {
  check_chart(r.theta, "from_reduced");
  const double s = std::sin(r.theta), C = std::cos(r.theta);
  const cplx e1 = std::polar(1.0, r.phi1), e2 = std::polar(1.0, r.phi2);
  const C2 x{s * e1, C * e2};
  const C2 v{e1 * cplx(C * r.theta_dot, s * r.phi1_dot), e2 * cplx(-s * r.theta_dot, C * r.phi2_dot)};
  return TangentVector::make(SpherePoint::make(x), v);
}

double potential_value(const PotentialSpec& v, double theta) {
  if (v.profile == PotentialProfile::kNone) return 0.0;
  const double d = pole_distance(theta);
  if (d >= v.wall) return 0.0;
  const double w0 = v.inner_wall();
  if (d <= w0) {
    throw Error(ErrorKind::kInfinitePotential, "reduced_system", "theta beyond the inner wall");
  }
  const double u = (v.wall - d) / (d - w0);
  return v.barrier * u * u;
}

double potential_derivative(const PotentialSpec& v, double theta) {
  if (v.profile == PotentialProfile::kNone) return 0.0;
  const double d = pole_distance(theta);
  if (d >= v.wall) return 0.0;
  const double w0 = v.inner_wall();
  if (d <= w0) {
    throw Error(ErrorKind::kInfinitePotential, "reduced_system", "theta beyond the inner wall");
  }
  const double u = (v.wall - d) / (d - w0);
  const double du_dd = -(v.wall - w0) / ((d - w0) * (d - w0));
  const double dv_dd = 2.0 * v.barrier * u * du_dd;
  return theta <= kHalfPi - theta ? dv_dd : -dv_dd;
}

ConservedSet conserved_set(const ReducedState& r, const MagneticParams& m, const PotentialSpec& v) {
  const double s = std::sin(r.theta), C = std::cos(r.theta);
  const double eps = m.epsilon;
  ConservedSet cs;
  cs.c1 = s * s * (r.phi1_dot + eps);
  cs.c2 = C * C * (r.phi2_dot + eps);
  const double speed = r.speed();
  cs.energy = 0.5 * speed * speed + potential_value(v, r.theta);
  cs.delta = cs.c1 + cs.c2 - eps;
  return cs;
}

double effective_potential(const ConservedSet& cs, const MagneticParams& m, const PotentialSpec& v,
                           double theta) {
  check_chart(theta, "effective_potential");
  const double s2 = std::sin(theta) * std::sin(theta);
  const double C2v = std::cos(theta) * std::cos(theta);
  const double eps = m.epsilon;
  const double a = cs.c1 / s2 - eps;
  const double b = cs.c2 / C2v - eps;
  return potential_value(v, theta) + 0.5 * s2 * a * a + 0.5 * C2v * b * b;
}

double effective_potential_derivative(const ConservedSet& cs, const MagneticParams&,
                                     const PotentialSpec& v, double theta) {
  check_chart(theta, "effective_potential_derivative");
  const double s = std::sin(theta), C = std::cos(theta);
  // The eps^2 s^2 and eps^2 C^2 terms cancel in the derivative.
  return potential_derivative(v, theta) - cs.c1 * cs.c1 * C / (s * s * s) +
         cs.c2 * cs.c2 * s / (C * C * C);
}

namespace {

// energy - W, with -inf where V is infinite.
double allowed(const ConservedSet& cs, const MagneticParams& m, const PotentialSpec& v,
               double theta) {
  try {
    return cs.energy - effective_potential(cs, m, v, theta);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInfinitePotential) return -std::numeric_limits<double>::infinity();
    throw;
  }
}

double bisect_root(const ConservedSet& cs, const MagneticParams& m, const PotentialSpec& v,
                   double lo, double hi) {
  const bool lo_pos = allowed(cs, m, v, lo) > 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if ((allowed(cs, m, v, mid) > 0.0) == lo_pos) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> turning_points(const ConservedSet& cs, const MagneticParams& m,
                                   const PotentialSpec& v) {
  if (!std::isfinite(cs.energy)) {
    throw Error(ErrorKind::kInvalidParameter, "reduced_system", "energy must be finite");
  }
  const double lo = std::max(v.inner_wall(), 0.0);
  const double hi = kHalfPi - lo;
  std::vector<double> roots;
  double prev_theta = lo + (hi - lo) * 0.5 / kScanPoints;
  double prev = allowed(cs, m, v, prev_theta);
  for (int i = 1; i < kScanPoints; ++i) {
    const double th = lo + (hi - lo) * (i + 0.5) / kScanPoints;
    const double f = allowed(cs, m, v, th);
    if ((prev > 0.0) != (f > 0.0)) roots.push_back(bisect_root(cs, m, v, prev_theta, th));
    prev = f;
    prev_theta = th;
  }
  return roots;
}

double quadrature_period(const ConservedSet& cs, const MagneticParams& m, const PotentialSpec& v,
                         std::optional<double> theta_hint) {
  const std::vector<double> roots = turning_points(cs, m, v);
  std::optional<std::pair<double, double>> well;
  for (std::size_t i = 0; i + 1 < roots.size(); ++i) {
    const double mid = 0.5 * (roots[i] + roots[i + 1]);
    if (allowed(cs, m, v, mid) <= 0.0) continue;
    if (theta_hint && !(*theta_hint >= roots[i] && *theta_hint <= roots[i + 1])) continue;
    well = {roots[i], roots[i + 1]};
    break;
  }
  if (!well) {
    throw Error(ErrorKind::kNotLibrating, "reduced_system",
                "theta does not librate between two turning points");
  }
  const double mid = 0.5 * (well->first + well->second);
  const double half = 0.5 * (well->second - well->first);
  const double slope_lo = -effective_potential_derivative(cs, m, v, well->first);
  const double slope_hi = effective_potential_derivative(cs, m, v, well->second);
  // theta = mid + half sin(u) removes the inverse square-root endpoint
  // singularities.  Within a thin layer at each end, energy - W is dominated
  // by rounding, so the integrand takes its linearized form there.
  constexpr double kLayer = 1e-3;
  auto integrand = [&](double u) {
    const double cu = std::cos(u);
    if (cu < kLayer) {
      const double slope = u < 0 ? slope_lo : slope_hi;
      return std::sqrt(half * (1.0 + std::abs(std::sin(u))) / (2.0 * slope));
    }
    const double th = mid + half * std::sin(u);
    const double f = allowed(cs, m, v, th);
    if (!(f > 0.0)) return 0.0;
    return half * cu / std::sqrt(2.0 * f);
  };
  // W is only C^1 where the potential switches on, so integrate piecewise
  // between those points.
  std::vector<double> cuts{-0.5 * kPi};
  if (v.profile != PotentialProfile::kNone) {
    for (double edge : {v.wall, kHalfPi - v.wall}) {
      if (edge > well->first && edge < well->second) cuts.push_back(std::asin((edge - mid) / half));
    }
  }
  cuts.push_back(0.5 * kPi);
  std::sort(cuts.begin(), cuts.end());
  boost::math::quadrature::tanh_sinh<double> integrator;
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    integral += integrator.integrate(integrand, cuts[i], cuts[i + 1], 1e-13);
  }
  return 2.0 * integral;
}

namespace {

void equations_of_motion(const MagneticParams& m, const PotentialSpec& v, const Vec6& y, Vec6& dy) {
  const double th = y[0];
  const double s = std::sin(th), C = std::cos(th);
  const double td = y[3], p1 = y[4], p2 = y[5];
  const double eps = m.epsilon;
  dy[0] = td;
  dy[1] = p1;
  dy[2] = p2;
  double dv = 0.0;
  if (v.profile != PotentialProfile::kNone && pole_distance(th) > v.inner_wall()) {
    dv = potential_derivative(v, th);
  } else if (v.profile != PotentialProfile::kNone) {
    dv = std::numeric_limits<double>::quiet_NaN();  // forces step rejection
  }
  dy[3] = s * C * (p1 * p1 - p2 * p2 + 2.0 * eps * p1 - 2.0 * eps * p2) - dv;
  dy[4] = -2.0 * (C / s) * td * (p1 + eps);
  dy[5] = 2.0 * (s / C) * td * (p2 + eps);
}

}  // namespace

ReducedTrajectory integrate(const ReducedState& r0, const MagneticParams& m, const PotentialSpec& v,
                            double t_end, double dt, const OdeOptions& options) {
  check_chart(r0.theta, "integrate");
  if (!(dt > 0.0) || !(t_end >= 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "reduced_system", "need dt > 0 and t_end >= 0");
  }
  const Dopri5 solver(
      [&](double, const Vec6& y, Vec6& dy) { equations_of_motion(m, v, y, dy); }, options);

  ReducedTrajectory out;
  out.times.push_back(0.0);
  out.states.push_back(r0);
  long long next_sample = 1;
  const bool free_motion = v.profile == PotentialProfile::kNone;

  auto observer = [&](double t0, const Vec6& y0, double t1, const Vec6& y1) {
    while (static_cast<double>(next_sample) * dt <= t1 + 1e-15) {
      const double ts = static_cast<double>(next_sample) * dt;
      if (ts > t_end + 1e-15) break;
      const Vec6 ys = ts >= t1 ? y1 : solver.step(t0, y0, ts - t0);
      out.times.push_back(ts);
      out.states.push_back(ReducedState::from_vector(ys));
      ++next_sample;
    }
    if (y0[3] > 0.0 && y1[3] <= 0.0) {
      // Secant refinement on theta' using exact sub-steps from t0.
      double a = 0.0, b = t1 - t0, fa = y0[3], fb = y1[3];
      for (int it = 0; it < 60 && b - a > 1e-15 * std::max(1.0, t1); ++it) {
        double c = b - fb * (b - a) / (fb - fa);
        if (!(c > a && c < b)) c = 0.5 * (a + b);
        const double fc = solver.step(t0, y0, c)[3];
        if (fc > 0.0) { a = c; fa = fc; } else { b = c; fb = fc; }
        if (fc == 0.0) { a = b = c; break; }
      }
      out.theta_maxima.push_back(t0 + 0.5 * (a + b));
    }
    out.end_time = t1;
    if (free_motion && pole_distance(y1[0]) < kChartMargin) {
      out.termination = Termination::kChartExit;
      return false;
    }
    return true;
  };
  const OdeStatus status = solver.integrate(0.0, r0.as_vector(), t_end, observer);
  if (status == OdeStatus::kStepUnderflow) out.termination = Termination::kStepUnderflow;
  return out;
}

}  // namespace orbitlab
