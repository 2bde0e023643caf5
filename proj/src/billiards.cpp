#include "orbitlab/billiards.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "orbitlab/reduced_system.hpp"

namespace orbitlab {

CapGeometry CapGeometry::make(double wall, CapSide which) {
  if (!(wall >= 0.0 && wall < 0.25 * kPi)) {
    throw Error(ErrorKind::kInvalidParameter, "billiards", "wall co-latitude must lie in [0, pi/4)");
  }
  return CapGeometry{wall, 0.5 * std::sin(2.0 * wall), which};
}

C2 theta_direction(const SpherePoint& x) {
  const double r1 = std::abs(x.z1()), r2 = std::abs(x.z2());
  if (r1 == 0.0 || r2 == 0.0) {
    throw Error(ErrorKind::kChartDomain, "billiards", "theta direction undefined on the Hopf link");
  }
  return {x.z1() * (r2 / r1), -x.z2() * (r1 / r2)};
}

double theta_rate(const TangentVector& t) { return re_dot(theta_direction(t.base()), t.vec()); }

namespace {

// Signed distance from the wall, positive outside the cap.
double wall_offset(const SpherePoint& x, const CapGeometry& cap) {
  const double theta = std::atan2(std::abs(x.z1()), std::abs(x.z2()));
  return cap.which == CapSide::kNorth ? (0.5 * kPi - cap.wall_colatitude) - theta
                                      : theta - cap.wall_colatitude;
}

}  // namespace

TangentVector reflect(const TangentVector& t, const CapGeometry& cap) {
  if (cap.wall_colatitude == 0.0) {
    const C2& x = t.base().coords();
    const C2& v = t.vec();
    const bool north = cap.which == CapSide::kNorth;
    if (std::abs(north ? x.z2 : x.z1) > 1e-9) {
      throw Error(ErrorKind::kGeometry, "billiards", "reflect: base point is not on the pole fibre");
    }
    const SpherePoint on = north ? SpherePoint::make(x.z1, 0.0) : SpherePoint::make(0.0, x.z2);
    return TangentVector::make(on, north ? C2{v.z1, -v.z2} : C2{-v.z1, v.z2});
  }
  if (std::abs(wall_offset(t.base(), cap)) > 1e-9) {
    throw Error(ErrorKind::kGeometry, "billiards", "reflect: base point is not on the wall");
  }
  const C2 e = theta_direction(t.base());
  const double rate = re_dot(e, t.vec());
  const double inward = cap.which == CapSide::kNorth ? rate : -rate;
  if (inward < -kGrazingTolerance) {
    throw Error(ErrorKind::kGeometry, "billiards", "reflect: velocity points out of the cap");
  }
  return TangentVector::make(t.base(), t.vec() - (2.0 * rate) * e);
}

namespace {

// |z1(s)|^2 = A + B cos(2 a s - psi) along a closed-form arc.
struct Sinusoid {
  double A = 0.0;
  double B = 0.0;
  double psi = 0.0;
  double two_a = 0.0;
};

Sinusoid z1_profile(const ClosedFormOrbit& o) {
  const cplx P = std::conj(o.p_plus.z1) * o.p_minus.z1;
  return {std::norm(o.p_plus.z1) + std::norm(o.p_minus.z1), 2.0 * std::abs(P), std::arg(P),
          2.0 * o.a};
}

struct Crossing {
  double s = 0.0;
  bool grazing = false;
};

// Next time after s_from at which the arc enters the cap.  The candidate is
// located on the sinusoid, then polished by TOMS748 on the exact position
// within the monotone half-period that contains it.
std::optional<Crossing> next_entry(const ClosedFormOrbit& o, const CapGeometry& cap, double s_from,
                                   int skip) {
  const Sinusoid g = z1_profile(o);
  if (g.B < 1e-300 || g.two_a <= 0.0) return std::nullopt;
  const double w = cap.wall_colatitude;
  const bool north = cap.which == CapSide::kNorth;
  const double level = north ? std::cos(w) * std::cos(w) : std::sin(w) * std::sin(w);
  const double kappa = (level - g.A) / g.B;
  if (north ? kappa >= 1.0 : kappa <= -1.0) return std::nullopt;
  if (north ? kappa <= -1.0 : kappa >= 1.0) {
    throw Error(ErrorKind::kGeometry, "billiards", "arc lies entirely inside a cap");
  }
  // Rising crossing (north) at phase -acos(kappa); falling (south) at +acos(kappa).
  const double phase = north ? -std::acos(kappa) : std::acos(kappa);
  const double seg_lo_phase = north ? -kPi : 0.0;
  const double seg_hi_phase = north ? 0.0 : kPi;
  const double period = kTwoPi / g.two_a;
  const double s_first = (phase + g.psi) / g.two_a;
  double n = std::ceil((s_from - s_first) / period);
  double s_star = s_first + n * period;
  if (s_star <= s_from + 1e-13 * std::max(1.0, s_from)) {
    n += 1.0;
    s_star += period;
  }
  n += skip;
  s_star = s_first + n * period;

  auto f = [&](double s) {
    const C2 x = o.position(s);
    return north ? std::norm(x.z2) - std::sin(w) * std::sin(w)
                 : std::norm(x.z1) - std::sin(w) * std::sin(w);
  };
  double lo = (seg_lo_phase + g.psi) / g.two_a + n * period;
  double hi = (seg_hi_phase + g.psi) / g.two_a + n * period;
  lo = std::max(lo, s_from);
  double flo = f(lo), fhi = f(hi);
  Crossing out;
  if (!(flo > 0.0 && fhi < 0.0)) {
    // Tangential contact: the sinusoid barely reaches the wall level.
    out.s = s_star;
    out.grazing = true;
    return out;
  }
  std::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
  out.s = 0.5 * (root.first + root.second);
  return out;
}

// First passage after s = 0 through the pole fibre of an ideal cap.  Only
// arcs whose |z1|^2 reaches 1 (north) or 0 (south) within kPoleTolerance meet
// the fibre.
std::optional<double> next_pole_passage(const ClosedFormOrbit& o, CapSide side) {
  const Sinusoid g = z1_profile(o);
  if (g.two_a <= 0.0) return std::nullopt;
  const bool north = side == CapSide::kNorth;
  const double gap = north ? 1.0 - (g.A + g.B) : g.A - g.B;
  if (gap > kPoleTolerance) return std::nullopt;
  const double period = kTwoPi / g.two_a;
  double s = ((north ? 0.0 : kPi) + g.psi) / g.two_a;
  s -= std::floor(s / period) * period;
  if (s < 1e-9 * period) s += period;
  return s;
}

}  // namespace

TangentVector BounceOrbit::state_at(double t) const {
  if (arcs.empty()) throw Error(ErrorKind::kInvalidParameter, "billiards", "empty bounce orbit");
  auto it = std::upper_bound(arcs.begin(), arcs.end(), t,
                             [](double v, const BounceArc& a) { return v < a.start; });
  const BounceArc& arc = it == arcs.begin() ? arcs.front() : *(it - 1);
  return evaluate(arc.orbit, t - arc.start);
}

BounceOrbit trace_billiard(const TangentVector& t0, const MagneticParams& m, double wall,
                           double t_end, int max_events) {
  const CapGeometry north = CapGeometry::make(wall, CapSide::kNorth);
  const CapGeometry south = CapGeometry::make(wall, CapSide::kSouth);
  const bool ideal = wall == 0.0;
  if (!ideal && (wall_offset(t0.base(), north) < -1e-12 || wall_offset(t0.base(), south) < -1e-12)) {
    throw Error(ErrorKind::kGeometry, "billiards", "trace_billiard: start point lies inside a cap");
  }
  BounceOrbit out;
  bool hit_north = false, hit_south = false;
  TangentVector state = t0;
  double t = 0.0;

  // A start on the wall heading inward bounces immediately.
  for (const CapGeometry* cap : {&north, &south}) {
    if (!ideal && std::abs(wall_offset(state.base(), *cap)) < 1e-12) {
      const double rate = theta_rate(state);
      const double inward = cap->which == CapSide::kNorth ? rate : -rate;
      if (inward > kGrazingTolerance) {
        const TangentVector after = reflect(state, *cap);
        out.events.push_back({0.0, state, after, *cap});
        (cap->which == CapSide::kNorth ? hit_north : hit_south) = true;
        state = after;
      }
    }
  }

  while (t < t_end) {
    const ClosedFormOrbit orbit = solve_closed_form(state, m);
    std::optional<double> best;
    const CapGeometry* best_cap = nullptr;
    for (const CapGeometry* cap : {&north, &south}) {
      if (ideal) {
        const auto s = next_pole_passage(orbit, cap->which);
        if (s && *s <= t_end - t && (!best || *s < *best)) {
          best = s;
          best_cap = cap;
        }
        continue;
      }
      for (int skip = 0; skip < 1000; ++skip) {
        const auto c = next_entry(orbit, *cap, 0.0, skip);
        if (!c) break;
        if (best && c->s >= *best) break;
        if (c->s > t_end - t) break;
        if (c->grazing) {
          ++out.grazing_skipped;
          continue;
        }
        const double rate = theta_rate(evaluate(orbit, c->s));
        if (std::abs(rate) < kGrazingTolerance) {
          ++out.grazing_skipped;
          continue;
        }
        best = c->s;
        best_cap = cap;
        break;
      }
    }
    if (!best || static_cast<int>(out.events.size()) >= max_events) {
      out.arcs.push_back({orbit, t, t_end - t});
      t = t_end;
      break;
    }
    out.arcs.push_back({orbit, t, *best});
    const TangentVector in = evaluate(orbit, *best);
    const TangentVector after = reflect(in, *best_cap);
    t += *best;
    out.events.push_back({t, in, after, *best_cap});
    (best_cap->which == CapSide::kNorth ? hit_north : hit_south) = true;
    state = after;
  }
  if (out.arcs.empty()) out.arcs.push_back({solve_closed_form(state, m), t, 0.0});
  out.end_time = t;
  out.type = 1 + (hit_north ? 1 : 0) + (hit_south ? 1 : 0);
  return out;
}

double bounce_defect(const TangentVector& t0, const MagneticParams& m, double wall, double T) {
  const BounceOrbit b = trace_billiard(t0, m, wall, T);
  const TangentVector end = b.final_state();
  const double c = t0.speed() > 0 ? t0.speed() : 1.0;
  return std::sqrt(norm2(end.base().coords() - t0.base().coords()) +
                   norm2(end.vec() - t0.vec()) / (c * c));
}

namespace {

// Shooting unknowns: the reduced position (theta, phi1, phi2), the velocity
// components that are neither pinned nor fixed by the speed, and T.  A
// momentum c_i that vanishes on the seed (the orbit meets a pole fibre) is
// pinned at zero; otherwise finite differences push the orbit past a small cap
// and the residual stops being smooth.  The speed is then left free, since
// the two phase closures cannot both be met at fixed speed for a finite cap.
struct ShootingFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  MagneticParams m;
  double wall = 0.0;
  double speed = 0.0;
  int zp_order = 1;
  int zp_power = 0;
  // Velocity slots 0..2 = theta', phi1', phi2'.
  std::array<bool, 3> pinned{false, false, false};
  std::array<double, 3> pinned_value{0.0, 0.0, 0.0};
  int solved = 2;  // -1: speed is free
  double solved_sign = 1.0;

  int free_velocities() const {
    return 3 - static_cast<int>(pinned[1]) - static_cast<int>(pinned[2]) - static_cast<int>(solved >= 0);
  }
  int inputs() const { return 4 + free_velocities(); }
  int values() const { return 8; }

  Eigen::VectorXd pack(const ReducedState& r, double T) const {
    Eigen::VectorXd x(inputs());
    const double vel[3] = {r.theta_dot, r.phi1_dot, r.phi2_dot};
    int k = 0;
    x[k++] = r.theta;
    x[k++] = r.phi1;
    x[k++] = r.phi2;
    for (int i = 0; i < 3; ++i) {
      if (!pinned[i] && i != solved) x[k++] = vel[i];
    }
    x[k] = T;
    return x;
  }

  double period(const Eigen::VectorXd& x) const { return x[inputs() - 1]; }

  std::optional<TangentVector> start(const Eigen::VectorXd& x) const {
    const double theta = x[0];
    if (!(theta > wall && theta < 0.5 * kPi - wall)) return std::nullopt;
    const double s = std::sin(theta), C = std::cos(theta);
    const double weight[3] = {1.0, s * s, C * C};
    double vel[3] = {0.0, 0.0, 0.0};
    int k = 3;
    double rest = speed * speed;
    for (int i = 0; i < 3; ++i) {
      if (i == solved) continue;
      vel[i] = pinned[i] ? pinned_value[i] : x[k++];
      rest -= weight[i] * vel[i] * vel[i];
    }
    if (solved >= 0) vel[solved] = solved_sign * std::sqrt(std::max(rest, 0.0) / weight[solved]);
    ReducedState r;
    r.theta = theta;
    r.phi1 = x[1];
    r.phi2 = x[2];
    r.theta_dot = vel[0];
    r.phi1_dot = vel[1];
    r.phi2_dot = vel[2];
    return from_reduced(r);
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    fvec.resize(8);
    const auto t0 = start(x);
    if (!t0 || !(period(x) > 0.0)) {
      fvec.setConstant(10.0);
      return 0;
    }
    try {
      const BounceOrbit b = trace_billiard(*t0, m, wall, period(x));
      const TangentVector end = b.final_state();
      const TangentVector target = zp_action(*t0, zp_order, zp_power);
      const Eigen::Vector4d dx = to_real(end.base().coords() - target.base().coords());
      const Eigen::Vector4d dv = to_real(end.vec() - target.vec()) / speed;
      fvec << dx, dv;
    } catch (const Error&) {
      fvec.setConstant(10.0);
    }
    return 0;
  }
};

double first_near_return(const TangentVector& seed, const MagneticParams& m, double wall) {
  const double c = seed.speed();
  const double horizon = 40.0 * kPi / std::max(c, std::abs(m.epsilon));
  const BounceOrbit b = trace_billiard(seed, m, wall, horizon);
  const int n = 20000;
  auto defect = [&](double t) {
    const TangentVector s = b.state_at(t);
    return std::sqrt(norm2(s.base().coords() - seed.base().coords()) +
                     norm2(s.vec() - seed.vec()) / (c * c));
  };
  double prev2 = defect(0.0), prev1 = defect(horizon / n);
  bool left_start = false;
  for (int k = 2; k <= n; ++k) {
    const double t = horizon * k / n;
    const double d = defect(t);
    if (prev1 > 0.2) left_start = true;
    if (left_start && prev1 <= prev2 && prev1 <= d && prev1 < 0.1) return horizon * (k - 1) / n;
    prev2 = prev1;
    prev1 = d;
  }
  return -1.0;
}

}  // namespace

std::optional<PeriodicBounce> find_periodic_bounce(const TangentVector& seed,
                                                   const MagneticParams& m, double wall,
                                                   std::optional<double> period_guess,
                                                   const ShootingOptions& options) {
  const double T0 = period_guess ? *period_guess : first_near_return(seed, m, wall);
  if (!(T0 > 0.0)) return std::nullopt;
  ShootingFunctor f;
  f.m = m;
  f.wall = wall;
  f.speed = seed.speed();
  f.zp_order = options.zp_order;
  f.zp_power = options.zp_power;
  const ReducedState r = to_reduced(seed);
  // Reduced coupling of the ambient strength; c_i = 0 means phi_i' = -coupling.
  const double coupling = coupling_for_ambient(m.epsilon);
  const ConservedSet cs = conserved_set(r, MagneticParams{coupling}, PotentialSpec::none());
  const double pin_tol = 1e-10 * f.speed * f.speed;
  f.pinned[1] = std::abs(cs.c1) < pin_tol;
  f.pinned[2] = std::abs(cs.c2) < pin_tol;
  f.pinned_value[1] = f.pinned_value[2] = -coupling;
  f.solved = f.pinned[1] || f.pinned[2] ? -1 : 2;
  f.solved_sign = r.phi2_dot >= 0.0 ? 1.0 : -1.0;
  Eigen::VectorXd x = f.pack(r, T0);

  Eigen::VectorXd fvec(8);
  f(x, fvec);
  int iterations = 0;
  if (fvec.norm() >= options.tolerance) {
    Eigen::NumericalDiff<ShootingFunctor, Eigen::Central> diff(f);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ShootingFunctor, Eigen::Central>> lm(diff);
    lm.parameters.maxfev = options.max_iter * 2 * (f.inputs() + 1);
    lm.parameters.xtol = 1e-15;
    lm.parameters.ftol = 1e-15;
    lm.minimize(x);
    iterations = static_cast<int>(lm.iter);
    f(x, fvec);
  }
  if (!(fvec.norm() < options.tolerance)) return std::nullopt;
  const auto t0 = f.start(x);
  if (!t0) return std::nullopt;
  PeriodicBounce out;
  out.period = f.period(x);
  out.orbit = trace_billiard(*t0, m, wall, out.period);
  out.defect = fvec.norm();
  out.iterations = iterations;
  return out;
}

std::optional<double> mirror_extended_period(const ClosedFormOrbit& smooth, double t_max) {
  const Sinusoid g = z1_profile(smooth);
  const bool through_north = 1.0 - (g.A + g.B) <= kPoleTolerance;
  const bool through_south = g.A - g.B <= kPoleTolerance;
  struct Passage {
    double time;
    Eigen::Matrix2cd mirror;
  };
  std::vector<Passage> passages;
  Eigen::Matrix2cd dn = Eigen::Matrix2cd::Identity();
  dn(1, 1) = -1.0;
  const Eigen::Matrix2cd ds = -dn;
  if (g.two_a > 0.0) {
    const double period = kTwoPi / g.two_a;
    auto add = [&](double phase, const Eigen::Matrix2cd& mirror) {
      double s = (phase + g.psi) / g.two_a;
      s -= std::floor(s / period) * period;
      for (; s <= t_max; s += period) {
        if (s > 0.0) passages.push_back({s, mirror});
      }
    };
    if (through_north) add(0.0, dn);
    if (through_south) add(kPi, ds);
  }
  std::sort(passages.begin(), passages.end(),
            [](const Passage& a, const Passage& b) { return a.time < b.time; });
  Eigen::Matrix2cd acc = Eigen::Matrix2cd::Identity();
  double prev = 0.0;
  for (const Passage& p : passages) {
    // Mirrors are diagonal involutions, so acc is its own inverse.
    if (const auto T = first_return_time(smooth, acc, prev, p.time)) return T;
    acc = p.mirror * acc;
    prev = p.time;
  }
  return first_return_time(smooth, acc, prev, t_max);
}

double cap_entry_angle(double R, double d, double r) {
  if (!(R > 0.0 && d > 0.0 && r >= 0.0) || d < std::abs(R - r) || d > R + r) {
    throw Error(ErrorKind::kNoIntersection, "billiards",
                "cap_entry_angle: circles do not intersect (|R - r| <= d <= R + r fails)");
  }
  const double c = (d * d - r * r + R * R) / (2.0 * d * R);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

std::optional<CapPassage> measured_cap_passage(const ClosedFormOrbit& orbit, const CapGeometry& cap) {
  if (!(orbit.a > 0.0) || cap.wall_colatitude <= 0.0) return std::nullopt;
  const double level = std::pow(std::cos(cap.wall_colatitude), 2);
  const bool north = cap.which == CapSide::kNorth;
  // Positive inside the cap.
  auto depth = [&](double s) {
    const double q = std::norm(orbit.position(s).z1);
    return north ? q - level : (1.0 - level) - q;
  };
  const double span = kPi / orbit.a;  // |z1|^2 has this period
  const int n = 512;
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double v = depth(span * i / n);
    if (v > best_val) best_val = v, best = i;
  }
  const double h = span / n;
  const auto peak = boost::math::tools::brent_find_minima([&](double s) { return -depth(s); },
                                                          h * (best - 1), h * (best + 1), 52);
  const double s0 = peak.first;
  if (!(depth(s0) > 0.0)) return std::nullopt;
  const double lo = s0 - 0.5 * span, hi = s0 + 0.5 * span;
  if (!(depth(lo) < 0.0)) return std::nullopt;  // never leaves the cap
  auto tol = boost::math::tools::eps_tolerance<double>(50);
  std::uintmax_t it = 200;
  const auto in = boost::math::tools::toms748_solve(depth, lo, s0, tol, it);
  it = 200;
  const auto out = boost::math::tools::toms748_solve(depth, s0, hi, tol, it);
  CapPassage p;
  p.entry = 0.5 * (in.first + in.second);
  p.exit = 0.5 * (out.first + out.second);
  p.alpha = orbit.a * (p.exit - p.entry);
  return p;
}

}  // namespace orbitlab
