#include "orbitlab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "orbitlab/billiards.hpp"
#include "orbitlab/capacity.hpp"
#include "orbitlab/error.hpp"
#include "orbitlab/magnetic_flow.hpp"
#include "orbitlab/reduced_system.hpp"
#include "orbitlab/sampling.hpp"

namespace orbitlab {

namespace {

using Outcome = std::pair<bool, std::string>;

Outcome check_closed_form(const VerifyOptions& o) {
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    Rng rng(o.seed, 1000000 + n);
    const MagneticParams m{rng.uniform(0.0, 0.3)};
    const ClosedFormOrbit orbit = solve_closed_form(random_tangent(rng, rng.uniform(0.01, 1.0)), m);
    for (int k = 0; k < 64; ++k) worst = std::max(worst, ode_residual(orbit, rng.uniform(0.0, 100.0)));
  }
  return {worst <= 1e-10, fmt::format("max ODE residual {:.3e} over 1000 x 64", worst)};
}

Outcome check_quaternionic(const VerifyOptions& o) {
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    Rng rng(o.seed, 2000000 + n);
    const MagneticParams m{rng.uniform(0.0, 0.3)};
    const TangentVector t = random_tangent(rng, rng.uniform(0.01, 1.0));
    const ClosedFormOrbit orbit = solve_closed_form(t, m);
    for (int k = 0; k < 32; ++k) {
      const double s = rng.uniform(0.0, 100.0);
      worst = std::max(worst, norm(evaluate_quaternionic(t, m, s).coords() - orbit.position(s)));
    }
  }
  return {worst <= 1e-9, fmt::format("max |quaternionic - exponential| {:.3e} over 1000 x 32", worst)};
}

Outcome check_conservation(const VerifyOptions& o) {
  double drift = 0.0, identity = 0.0;
  int failed = 0;
  for (int n = 0; n < 50; ++n) {
    Rng rng(o.seed, 3000000 + n);
    const double eps = rng.uniform(0.05, 0.3);
    const MagneticParams m{eps};
    const PotentialSpec v = PotentialSpec::polynomial_barrier(eps);
    const double c = rng.uniform(0.3, 1.0);
    ReducedState r0;
    r0.theta = rng.uniform(eps + 0.01, 0.5 * kPi - eps - 0.01);
    r0.phi1 = rng.uniform(0.0, kTwoPi);
    r0.phi2 = rng.uniform(0.0, kTwoPi);
    double u[3] = {rng.normal(), rng.normal(), rng.normal()};
    const double un = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    r0.theta_dot = c * u[0] / un;
    r0.phi1_dot = c * u[1] / un / std::sin(r0.theta);
    r0.phi2_dot = c * u[2] / un / std::cos(r0.theta);
    const ConservedSet c0 = conserved_set(r0, m, v);
    const ReducedTrajectory tr = integrate(r0, m, v, 100.0, 1.0);
    if (tr.termination != Termination::kCompleted) {
      ++failed;
      continue;
    }
    const double scale = c * c;
    for (const ReducedState& r : tr.states) {
      const ConservedSet cs = conserved_set(r, m, v);
      drift = std::max({drift, std::abs(cs.energy - c0.energy) / std::max(std::abs(c0.energy), scale),
                        std::abs(cs.c1 - c0.c1) / std::max(std::abs(c0.c1), scale),
                        std::abs(cs.c2 - c0.c2) / std::max(std::abs(c0.c2), scale)});
      identity = std::max(identity, std::abs(from_reduced(r).reeb_component() - (cs.c1 + cs.c2 - eps)));
    }
  }
  return {failed == 0 && drift <= 1e-8 && identity <= 1e-10,
          fmt::format("max relative drift {:.3e}, identity residual {:.3e}, {} runs aborted", drift, identity,
                      failed)};
}

Outcome check_closing(const VerifyOptions& o) {
  double worst_j = 0.0, worst_generic = 0.0;
  for (int p : {3, 5, 7}) {
    const LensSpace L = LensSpace::make(p);
    for (int n = 0; n < 1000; ++n) {
      Rng rng(o.seed, 4000000 + 10000 * p + n);
      const SpherePoint x = random_point(rng);
      if (n < 100) {
        const double sign = n % 2 == 0 ? 1.0 : -1.0;
        const TangentVector jx = TangentVector::make(x, sign * mul_j(x.coords()));
        worst_j = std::max(worst_j, std::abs(geodesic_closing_time(jx, L) - kTwoPi / p));
      }
      worst_generic =
          std::max(worst_generic, std::abs(geodesic_closing_time(random_tangent(rng, x, 1.0), L) - kTwoPi));
    }
  }
  return {worst_j <= 1e-9 && worst_generic <= 1e-9,
          fmt::format("jx launches off by {:.3e} from 2pi/p, random directions off by {:.3e} from 2pi", worst_j,
                      worst_generic)};
}

Outcome check_bound(const VerifyOptions& o) {
  int periodic = 0, violations = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (int n = 0; n < 10000; ++n) {
    Rng rng(o.seed, 5000000 + n);
    const double eps = rng.uniform(0.01, 0.3);
    const MagneticParams m{eps};
    TangentVector t = random_tangent(rng, rng.uniform(0.01, 1.0));
    if (n % 2 == 0) {
      // Rational frequency ratio theta+ / theta- = r, so the orbit closes.
      const int P = rng.integer(1, 12), Q = rng.integer(1, 12);
      const double r = (rng.uniform() < 0.5 ? -1.0 : 1.0) * P / Q;
      const double tp = eps * r / (1 + r), tm = eps / (1 + r);
      const double lo = std::min(std::abs(tp), std::abs(tm)), hi = std::max(std::abs(tp), std::abs(tm));
      const double c = rng.uniform(lo, hi);
      const double delta = (c * c + tp * tm) / eps;
      if (P != Q && std::abs(delta) <= c && c > 1e-3 && c <= 2.0) {
        t = tangent_with_invariants(random_point(rng), c, delta, rng.uniform(0.0, kTwoPi));
      }
    }
    const ClosedFormOrbit orbit = solve_closed_form(t, m);
    const auto T = minimal_period(orbit);
    if (!T || closure_defect(orbit, Eigen::Matrix2cd::Identity(), *T) > 1e-8) continue;
    ++periodic;
    const double bound = period_lower_bound(t.speed(), m).bound;
    worst_ratio = std::min(worst_ratio, *T / bound);
    if (*T < bound * (1 - 1e-8)) ++violations;
  }
  return {periodic > 0 && violations == 0,
          fmt::format("{} periodic orbits in 10000 seeds, {} below the bound, min T / bound {:.12f}", periodic,
                      violations, worst_ratio)};
}

Outcome check_dichotomy(const VerifyOptions& o) {
  bool ok = true;
  std::string detail;
  for (int p : {3, 5}) {
    for (double eps : {0.1, 0.2}) {
      const LensSpace L = LensSpace::make(p);
      const MagneticParams m{eps};
      ScanGrid grid;
      grid.samples = 256;
      grid.speeds = {0.05, 0.1, 0.2, 0.45, 1.0};
      grid.seed = o.seed;
      const auto records = lens_short_orbit_scan(L, m, grid, o.exec);
      int below = 0, stray = 0;
      bool north = false, south = false;
      for (const CensusRecord& r : records) {
        if (!r.below_bound) continue;
        ++below;
        if (!r.reeb_axis) {
          ++stray;
          continue;
        }
        (std::abs(r.x0.z1) > 0.5 ? north : south) = true;
      }
      // The eps = 0 short orbits along jx, followed with the magnetic term.
      double min_identity = std::numeric_limits<double>::infinity();
      double min_defect = std::numeric_limits<double>::infinity();
      int closed_early = 0;
      for (int n = 0; n < 200; ++n) {
        Rng rng(o.seed, 6000000 + 1000 * p + static_cast<int>(100 * eps) * 10000 + n);
        const SpherePoint x = random_point(rng);
        const double c = grid.speeds[n % grid.speeds.size()];
        const TangentVector t = TangentVector::make(x, c * mul_j(x.coords()));
        const ClosedFormOrbit orbit = solve_closed_form(t, m);
        const double TL = kTwoPi / (p * c);
        const cplx zz = x.z1() * x.z2();
        min_identity = std::min(min_identity, std::abs(std::polar(1.0, eps * TL) * zz - zz) / std::abs(zz));
        for (int k = 1; k < p; ++k) {
          min_defect = std::min(min_defect, closure_defect(orbit, L.generator_power(k), TL));
        }
        const auto lp = lens_period(orbit, L, lens_period_bound(c, m) * (1 - 1e-8));
        if (lp) ++closed_early;
      }
      const bool pass = stray == 0 && north && south && min_identity > 1e-8 && min_defect > 1e-6 && closed_early == 0;
      ok = ok && pass;
      detail += fmt::format("[p={} eps={}: {} below bound, {} off the Hopf link, both Reeb orbits {}, "
                            "min identity residual {:.3e}, min closure defect {:.3e}, {} early returns] ",
                            p, eps, below, stray, north && south ? "found" : "missing", min_identity, min_defect,
                            closed_early);
    }
  }
  return {ok, detail};
}

std::optional<ClosedFormOrbit> pole_orbit(double eps, int P, int Q, double delta, bool north, double phi,
                                          double dir) {
  // theta+ : theta- = P : Q through a pole fibre with Reeb component delta.
  const double a = eps * (P + Q) / (2.0 * (P - Q));
  const double c2 = a * a - 0.25 * eps * eps + eps * delta;
  if (!(c2 > delta * delta)) return std::nullopt;
  const double h = std::sqrt(c2 - delta * delta);
  const cplx i(0, 1);
  const cplx u = std::polar(1.0, phi), e = std::polar(1.0, dir);
  const SpherePoint x = north ? SpherePoint::make(u, 0.0) : SpherePoint::make(0.0, u);
  const C2 v = north ? C2{i * delta * u, h * e} : C2{h * e, i * delta * u};
  return solve_closed_form(TangentVector::make(x, v), MagneticParams{eps});
}

Outcome check_bounce(const VerifyOptions&) {
  struct Case {
    double eps;
    int P, Q;
    double delta;
    bool north;
  };
  const Case cases[] = {{0.2, 11, 9, 0.05, true}, {0.3, 7, 5, -0.1, true},  {0.2, 11, 9, 0.05, false},
                        {0.3, 5, 3, 0.0, false},  {0.2, 7, 3, 0.02, true},  {0.2, 11, 9, 0.1, true},
                        {0.3, 7, 5, 0.15, true},  {0.3, 5, 3, 0.15, false}};
  int type2 = 0, type3 = 0;
  double worst = 0.0;
  for (const Case& c : cases) {
    const auto orbit = pole_orbit(c.eps, c.P, c.Q, c.delta, c.north, 0.4, 1.3);
    if (!orbit) continue;
    const MagneticParams m{c.eps};
    const TangentVector seed = evaluate(*orbit, 0.37 * kPi / orbit->a);
    const auto guess = mirror_extended_period(solve_closed_form(seed, m), 1000.0);
    if (!guess) continue;
    // Start off the family so that the shooting has to converge.
    ReducedState r = to_reduced(seed);
    r.theta_dot *= 1.001;
    const auto pb = find_periodic_bounce(from_reduced(r), m, 0.0, *guess);
    if (!pb) continue;
    const auto T = mirror_extended_period(solve_closed_form(pb->orbit.state_at(0.0), m), 2 * pb->period);
    if (!T) continue;
    const double rel = std::abs(pb->period - *T) / *T;
    if (rel > 1e-6) {
      worst = std::max(worst, rel);
      continue;
    }
    worst = std::max(worst, rel);
    if (pb->orbit.type == 2) ++type2;
    if (pb->orbit.type == 3) ++type3;
  }
  return {type2 >= 5 && type3 >= 3 && worst <= 1e-6,
          fmt::format("{} type-2 and {} type-3 orbits on the ideal table, max relative period gap {:.3e}", type2,
                      type3, worst)};
}

Outcome check_hopf(const VerifyOptions& o) {
  double worst = 0.0, worst_degenerate = 0.0;
  for (int n = 0; n < 200; ++n) {
    Rng rng(o.seed, 8000000 + n);
    const MagneticParams m{rng.uniform(0.0, 0.3)};
    const TangentVector t = random_tangent(rng, rng.uniform(0.05, 1.0));
    const ClosedFormOrbit orbit = solve_closed_form(t, m);
    const double R = hopf_radius(orbit.c, orbit.delta, m);
    // Uniform samples over one revolution: their mean is the circle centre.
    const int k = 64;
    const double span = kPi / orbit.a;
    std::vector<Eigen::Vector3d> pts;
    Eigen::Vector3d centre = Eigen::Vector3d::Zero();
    for (int i = 0; i < k; ++i) {
      pts.push_back(hopf_project(orbit.position(span * i / k)));
      centre += pts.back() / k;
    }
    for (const auto& q : pts) worst = std::max(worst, std::abs((q - centre).norm() - R));

    // delta = +-c: the orbit is a Reeb fibre and projects to a point.
    const double c = t.speed();
    const SpherePoint x = t.base();
    const TangentVector reeb = TangentVector::make(x, (n % 2 ? c : -c) * mul_i(x.coords()));
    const ClosedFormOrbit fibre = solve_closed_form(reeb, m);
    worst_degenerate = std::max(worst_degenerate, hopf_radius(c, n % 2 ? c : -c, m));
    const Eigen::Vector3d p0 = hopf_project(fibre.position(0.0));
    for (int i = 1; i < 16; ++i) {
      worst_degenerate = std::max(worst_degenerate, (hopf_project(fibre.position(0.7 * i)) - p0).norm());
    }
  }
  return {worst <= 1e-8 && worst_degenerate <= 1e-8,
          fmt::format("max |projected radius - R| {:.3e}; delta = +-c spread {:.3e}", worst, worst_degenerate)};
}

Outcome check_heps(const VerifyOptions& o) {
  double jump = 0.0, djump = 0.0;
  for (int n = 0; n < 100; ++n) {
    Rng rng(o.seed, 9000000 + n);
    const double eps = rng.uniform(1e-4, 0.5 - 1e-4);
    const double y = 0.5 * eps, r = std::sqrt(eps);
    // Branch formulas evaluated at the junction and the function just above it.
    jump = std::max({jump, std::abs(kTwoPi * (y / r + 0.5 * r) - kTwoPi * std::sqrt(2 * y)),
                     std::abs(h_eps(y, eps) - h_eps(std::nextafter(y, 1.0), eps))});
    djump = std::max({djump, std::abs(kTwoPi / r - kTwoPi / std::sqrt(2 * y)),
                      std::abs(h_eps_derivative(y, eps) - h_eps_derivative(std::nextafter(y, 1.0), eps))});
  }
  const auto curve = heps_curve(0.1, 1.0, 2000);
  bool monotone = true;
  for (std::size_t i = 1; i < curve.size(); ++i) monotone = monotone && curve[i].h > curve[i - 1].h;
  return {jump <= 1e-12 && djump <= 1e-12 * kTwoPi / std::sqrt(1e-4) && monotone,
          fmt::format("value jump {:.3e}, derivative jump {:.3e}, figure data at eps = 0.1 {}", jump, djump,
                      monotone ? "increasing" : "NOT increasing")};
}

Outcome check_capacity(const VerifyOptions& o) {
  const std::vector<double> eps_list{0.1, 0.05, 0.02};
  bool all_pass = true, extrapolation = true;
  std::string detail;
  CapacityOptions copt;
  copt.seed = o.seed;
  copt.exec = o.exec;
  for (int p : {1, 3, 5}) {
    std::vector<double> osc;
    for (double eps : eps_list) {
      const CapacityEstimate est = certify_lower_bound(LensSpace::make(p), eps, o.capacity_budget, copt);
      osc.push_back(est.oscillation);
      all_pass = all_pass && est.pass;
      detail += fmt::format("[p={} eps={} osc={:.6f} minT={:.4f} pass={}", p, eps, est.oscillation,
                            est.min_period_found, est.pass);
      if (!est.pass && est.witness) {
        const CensusRecord& w = est.witness->record;
        detail += fmt::format(" witness={} c={:.4f} T={:.6f} shift={}", to_string(w.kind), w.c, w.period, w.shift);
      }
      detail += "] ";
    }
    const double intercept = linear_extrapolation(eps_list, osc);
    const double gap = std::abs(intercept - kTwoPi) / kTwoPi;
    extrapolation = extrapolation && gap <= 0.01;
    detail += fmt::format("[p={} intercept {:.6f}, {:.2f}% from 2pi] ", p, intercept, 100 * gap);
  }
  bool control = true;
  for (int p : {3, 5}) {
    const CapacityEstimate est = certify_lower_bound(LensSpace::make(p), 0.0, o.capacity_budget, copt);
    const bool ok = !est.pass && est.witness &&
                    std::abs(est.witness->record.period * est.witness->record.c - kTwoPi / p) < 1e-9;
    control = control && ok;
    detail += fmt::format("[control p={} eps=0: pass={}, witness c*T={:.9f}] ", p, est.pass,
                          est.witness ? est.witness->record.period * est.witness->record.c : 0.0);
  }
  return {all_pass && extrapolation && control, detail};
}

Outcome check_capangle(const VerifyOptions& o) {
  const std::vector<double> eps_list{0.3, 0.2, 0.1, 0.05};
  std::vector<double> alpha_max;
  std::string detail;
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    const double eps = eps_list[e];
    const MagneticParams m{eps};
    const CapGeometry caps[2] = {CapGeometry::make(eps, CapSide::kNorth), CapGeometry::make(eps, CapSide::kSouth)};
    double amax = 0.0;
    int used = 0;
    for (int n = 0; n < 4000; ++n) {
      Rng rng(o.seed, 11000000 + 100000 * e + n);
      const ClosedFormOrbit orbit = solve_closed_form(random_tangent(rng, rng.uniform(0.05, 1.0)), m);
      const auto north = measured_cap_passage(orbit, caps[0]);
      const auto south = measured_cap_passage(orbit, caps[1]);
      if (static_cast<bool>(north) == static_cast<bool>(south)) continue;
      // Not trapped: the orbit leaves the sqrt(eps) collar of its cap.
      double far = 0.0;
      for (int i = 0; i < 256; ++i) {
        const double q = std::norm(orbit.position(kPi / orbit.a * i / 256).z1);
        const double theta = std::asin(std::sqrt(std::clamp(q, 0.0, 1.0)));
        far = std::max(far, north ? 0.5 * kPi - theta : theta);
      }
      if (far <= eps + std::sqrt(eps)) continue;
      amax = std::max(amax, (north ? north : south)->alpha);
      ++used;
    }
    alpha_max.push_back(amax);
    detail += fmt::format("[eps={} alpha_max={:.6f} over {} orbits] ", eps, amax, used);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < alpha_max.size(); ++i) decreasing = decreasing && alpha_max[i] < alpha_max[i - 1];
  // Slope of log alpha against log eps.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(eps_list.size());
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double x = std::log(eps_list[i]), y = std::log(std::max(alpha_max[i], 1e-300));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  detail += fmt::format("fitted exponent {:.4f}", exponent);
  return {decreasing && exponent > 0.0, detail};
}

struct Entry {
  const char* name;
  Outcome (*run)(const VerifyOptions&);
};

const Entry kChecks[] = {
    {"closed-form", check_closed_form}, {"quaternionic", check_quaternionic}, {"conservation", check_conservation},
    {"closing", check_closing},         {"bound", check_bound},               {"dichotomy", check_dichotomy},
    {"bounce", check_bounce},           {"hopf", check_hopf},                 {"heps", check_heps},
    {"capacity", check_capacity},       {"capangle", check_capangle},
};

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const Entry& e : kChecks) v.emplace_back(e.name);
    return v;
  }();
  return names;
}

CheckResult run_check(const std::string& name, const VerifyOptions& options) {
  for (std::size_t i = 0; i < std::size(kChecks); ++i) {
    if (name != kChecks[i].name) continue;
    CheckResult r;
    r.id = static_cast<int>(i) + 1;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      std::tie(r.pass, r.detail) = kChecks[i].run(options);
    } catch (const Error& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }
  throw Error(ErrorKind::kInvalidParameter, "verify", "unknown check '" + name + "'");
}

std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& options) {
  std::vector<CheckResult> out;
  if (suite == "all") {
    for (const std::string& name : check_names()) out.push_back(run_check(name, options));
  } else {
    out.push_back(run_check(suite, options));
  }
  return out;
}

}  // namespace orbitlab
