#include "orbitlab/capacity.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "orbitlab/error.hpp"
#include "orbitlab/reduced_system.hpp"

namespace orbitlab {

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw Error(ErrorKind::kInvalidParameter, "capacity", "epsilon must lie in [0, 1/2)");
  }
}

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double smooth_step_integral(double t) {
  if (t <= 0.0) return 0.0;
  const double head = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      smooth_step, 0.0, std::min(t, 1.0), 3, 1e-13);
  return head + std::max(t - 1.0, 0.0);
}

}  // namespace

double h_eps(double y, double epsilon) {
  check_epsilon(epsilon);
  if (y < 0.0) throw Error(ErrorKind::kInvalidParameter, "capacity", "h_eps needs y >= 0");
  const double r = std::sqrt(epsilon);
  if (y <= 0.5 * epsilon && epsilon > 0.0) return kTwoPi * (y / r + 0.5 * r);
  return kTwoPi * std::sqrt(2.0 * y);
}

double h_eps_derivative(double y, double epsilon) {
  check_epsilon(epsilon);
  if (y < 0.0) throw Error(ErrorKind::kInvalidParameter, "capacity", "h_eps needs y >= 0");
  if (y <= 0.5 * epsilon && epsilon > 0.0) return kTwoPi / std::sqrt(epsilon);
  return kTwoPi / std::sqrt(2.0 * y);
}

double h_eps_inverse(double u, double epsilon) {
  check_epsilon(epsilon);
  const double r = std::sqrt(epsilon);
  if (u < kPi * r) throw Error(ErrorKind::kInvalidParameter, "capacity", "value below h_eps(0)");
  if (u <= kTwoPi * r && epsilon > 0.0) return (u / kTwoPi - 0.5 * r) * r;
  const double q = u / kTwoPi;
  return 0.5 * q * q;
}

double h_eps_mollified_derivative(double y, double epsilon, double width) {
  check_epsilon(epsilon);
  if (!(epsilon > 0.0 && width > 0.0 && width < epsilon)) {
    throw Error(ErrorKind::kInvalidParameter, "capacity", "mollifier width must lie in (0, eps)");
  }
  // h' = 2 pi / sqrt(2 max(y, eps / 2)); the max is replaced by a smooth upper
  // envelope that agrees with it outside |y - eps / 2| < width / 2.
  const double x = (y - 0.5 * epsilon) / width;
  const double smooth_max = 0.5 * epsilon + width * smooth_step_integral(x + 0.5);
  return kTwoPi / std::sqrt(2.0 * smooth_max);
}

double h_eps_mollified(double y, double epsilon, double width) {
  if (y < 0.0) throw Error(ErrorKind::kInvalidParameter, "capacity", "h_eps needs y >= 0");
  auto d = [&](double t) { return h_eps_mollified_derivative(t, epsilon, width); };
  const double knot = 0.5 * (epsilon - width);
  double out = kPi * std::sqrt(epsilon) + kTwoPi / std::sqrt(epsilon) * std::min(y, knot);
  if (y > knot) {
    out += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(d, knot, y, 4, 1e-12);
  }
  return out;
}

std::vector<HepsSample> heps_curve(double epsilon, double y_max, int n) {
  if (!(y_max > 0.0) || n < 1) throw Error(ErrorKind::kInvalidParameter, "capacity", "empty h_eps grid");
  std::vector<HepsSample> out;
  out.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double y = y_max * i / n;
    out.push_back({y, h_eps(y, epsilon), h_eps_derivative(y, epsilon)});
  }
  return out;
}

double reparam_period(double T_base, double y, double epsilon) { return T_base / h_eps_derivative(y, epsilon); }

double AdmissibilityProfile::value(double u) const {
  const double w = margin;
  if (u <= lo + w) return 0.0;
  if (u >= hi - w) return oscillation;
  if (u <= lo + 2 * w) return slope * w * smooth_step_integral((u - lo - w) / w);
  const double up = slope * 0.5 * w;
  if (u <= hi - 2 * w) return up + slope * (u - lo - 2 * w);
  const double t = (u - hi + 2 * w) / w;
  return up + slope * (hi - lo - 4 * w) + slope * w * (t - smooth_step_integral(t));
}

double AdmissibilityProfile::derivative(double u) const {
  const double w = margin;
  if (u <= lo + w || u >= hi - w) return 0.0;
  if (u <= lo + 2 * w) return slope * smooth_step((u - lo - w) / w);
  if (u <= hi - 2 * w) return slope;
  return slope * smooth_step((hi - w - u) / w);
}

AdmissibilityProfile build_admissible(double epsilon, double margin) {
  check_epsilon(epsilon);
  AdmissibilityProfile f;
  f.epsilon = epsilon;
  f.margin = margin;
  f.lo = kPi * std::sqrt(epsilon);
  f.hi = kTwoPi * (1.0 - 2.0 * epsilon);
  if (!(margin > 0.0 && margin < 1.0 / 3.0) || !(f.hi - f.lo - 4.0 * margin > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "capacity", "margin leaves no room for the ramps");
  }
  f.slope = 1.0 - 3.0 * margin;
  // Each ramp integrates to half its width.
  f.oscillation = f.slope * (f.hi - f.lo - 3.0 * margin);
  return f;
}

double linear_extrapolation(const std::vector<double>& eps, const std::vector<double>& values) {
  if (eps.size() != values.size() || eps.size() < 2) {
    throw Error(ErrorKind::kInvalidParameter, "capacity", "need at least two points to extrapolate");
  }
  const double n = static_cast<double>(eps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    sx += eps[i];
    sy += values[i];
    sxx += eps[i] * eps[i];
    sxy += eps[i] * values[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return (sy - slope * sx) / n;
}

CapacityEstimate certify_lower_bound(const LensSpace& L, double epsilon, std::uint64_t search_budget,
                                     const CapacityOptions& options) {
  check_epsilon(epsilon);
  if (!(kTwoPi * (1.0 - 2.0 * epsilon) > kPi)) {
    throw Error(ErrorKind::kInvalidParameter, "capacity", "epsilon must be below 1/4");
  }
  if (search_budget == 0 || options.speed_levels < 1) {
    throw Error(ErrorKind::kInvalidParameter, "capacity", "empty search budget");
  }
  CapacityEstimate est;
  est.epsilon = epsilon;
  est.p = L.p;
  est.budget = search_budget;
  est.margin = options.margin.value_or(epsilon > 0.0 ? epsilon : 0.01);
  const AdmissibilityProfile f = build_admissible(epsilon, est.margin);
  est.oscillation = f.value(f.hi) - f.value(f.lo);

  // Speeds spread over the window where f' > 0, with V = 0.
  const double u0 = f.lo + f.margin, u1 = f.hi - f.margin;
  for (int i = 0; i < options.speed_levels; ++i) {
    const double u = u0 + (u1 - u0) * (i + 0.5) / options.speed_levels;
    est.speeds.push_back(std::sqrt(2.0 * h_eps_inverse(u, epsilon)));
  }

  const MagneticParams m{epsilon};
  const double wall = epsilon;
  const int per_base = options.speed_levels * 5;
  const bool bounces = epsilon > 0.0 && L.p > 1;
  const double share = bounces ? std::clamp(options.bounce_share, 0.0, 1.0) : 0.0;

  ScanGrid grid;
  grid.speeds = est.speeds;
  grid.wall = wall;
  grid.horizon_factor = options.horizon_factor;
  grid.seed = options.seed;
  grid.samples = std::max<std::uint64_t>(1, static_cast<std::uint64_t>((1.0 - share) * search_budget) / per_base);

  std::vector<CensusRecord> records = lens_short_orbit_scan(L, m, grid, options.exec);
  est.seeds_used = scan_seeds(grid, epsilon).size();
  if (bounces) {
    ScanGrid bgrid = grid;
    bgrid.samples = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(share * search_budget) / per_base);
    const auto b = zp_symmetric_bounce_scan(L, m, wall, bgrid, options.exec);
    records.insert(records.end(), b.begin(), b.end());
    est.seeds_used += scan_seeds(bgrid, epsilon).size();
  }
  const bool barrier = epsilon > 0.0;
  const PotentialSpec V = barrier ? PotentialSpec::polynomial_barrier(epsilon) : PotentialSpec::none();
  if (barrier) {
    const auto t = trapped_torus_scan(L, m, V, est.speeds);
    records.insert(records.end(), t.begin(), t.end());
  }

  for (const CensusRecord& r : records) {
    double y = 0.5 * r.c * r.c;
    if (barrier) y += potential_value(V, std::atan2(std::abs(r.x0.z1), std::abs(r.x0.z2)));
    const double u = h_eps(y, epsilon);
    if (u > f.hi) continue;  // outside the sublevel set
    ++est.orbits_examined;
    const double TH = reparam_period(r.period, y, epsilon);
    est.min_reparam_period = std::min(est.min_reparam_period, TH);
    const double fp = f.derivative(u);
    if (fp <= 0.0) continue;
    const double TF = TH / fp;
    if (TF < est.min_period_found) {
      est.min_period_found = TF;
      est.witness = CapacityWitness{r, y, TH, TF};
    }
  }
  if (epsilon > 0.0 && std::isfinite(est.min_reparam_period)) {
    est.fitted_constant = (1.0 - est.min_reparam_period) / epsilon;
  }
  est.pass = est.min_period_found > 1.0 && est.oscillation <= est.reference_upper;
  return est;
}

}  // namespace orbitlab
