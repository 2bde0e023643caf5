#include "orbitlab/lens_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/tools/toms748_solve.hpp>
#include <boost/random/sobol.hpp>

#include "orbitlab/error.hpp"
#include "orbitlab/sampling.hpp"

namespace orbitlab {

LensSpace LensSpace::make(int p) {
  if (p < 1 || p % 2 == 0) {
    throw Error(ErrorKind::kInvalidParameter, "lens_space", "p must be an odd integer >= 1");
  }
  return LensSpace{p};
}

Eigen::Matrix2cd LensSpace::generator_power(int k) const {
  const double angle = kTwoPi * static_cast<double>(k) / static_cast<double>(p);
  Eigen::Matrix2cd g = Eigen::Matrix2cd::Zero();
  g(0, 0) = std::polar(1.0, angle);
  g(1, 1) = std::polar(1.0, -angle);
  return g;
}

double geodesic_closing_time(const TangentVector& t, const LensSpace& L) {
  const C2& x = t.base().coords();
  const C2 v = (1.0 / t.speed()) * t.vec();
  double best = kTwoPi;
  // The great circle lies in the real plane span(x, v); a shifted copy of x
  // is hit exactly when it lies in that plane.
  for (int k = 1; k < L.p; ++k) {
    const C2 y = zp_action(x, L.p, k);
    const double a = re_dot(x, y), b = re_dot(v, y);
    if (norm(y - a * x - b * v) > 1e-9) continue;
    double s = std::atan2(b, a);
    if (s <= 0.0) s += kTwoPi;
    best = std::min(best, s);
  }
  return best;
}

bool is_zp_invariant(const std::function<C2(double)>& position, const LensSpace& L, double T) {
  if (L.p == 1) return true;
  const double shift = T / L.p;
  const double span = T - shift;
  for (int k = 1; k < L.p; ++k) {
    const Eigen::Matrix2cd g = L.generator_power(k);
    bool ok = true;
    for (int i = 0; i < kInvarianceGrid && ok; ++i) {
      const double s = span * i / (kInvarianceGrid - 1);
      ok = norm(act(g, position(s)) - position(s + shift)) <= kTolAlg;
    }
    if (ok) return true;
  }
  return false;
}

bool is_zp_invariant(const ClosedFormOrbit& orbit, const LensSpace& L, double T) {
  return is_zp_invariant([&](double s) { return orbit.position(s); }, L, T);
}

bool is_zp_invariant(const BounceOrbit& orbit, const LensSpace& L, double T) {
  return is_zp_invariant([&](double s) { return orbit.state_at(s).base().coords(); }, L, T);
}

std::string to_string(OrbitKind kind) {
  switch (kind) {
    case OrbitKind::kGeodesic: return "geodesic";
    case OrbitKind::kMagnetic: return "magnetic";
    case OrbitKind::kBounce: return "bounce";
    case OrbitKind::kTrapped: return "trapped";
  }
  return "unknown";
}

std::vector<ScanSeed> scan_seeds(const ScanGrid& grid, double epsilon) {
  if (grid.speeds.empty() || !(grid.wall >= 0.0 && grid.wall < 0.25 * kPi)) {
    throw Error(ErrorKind::kInvalidParameter, "lens_space", "scan grid needs speeds and a wall in [0, pi/4)");
  }
  const double w = grid.wall;
  const double collar = std::min(std::max(std::sqrt(std::abs(epsilon)), 0.05), 0.25 * kPi - w);
  const double cf = std::clamp(grid.collar_fraction, 0.0, 1.0);

  std::vector<SpherePoint> bases;
  std::vector<std::array<double, 2>> directions;  // (delta / c, angle)
  boost::random::sobol qrng(4);
  qrng.discard(4 * (grid.seed % 1024));  // fixed offset per seed, keeps the set deterministic
  const double scale = 1.0 / (static_cast<double>(qrng.max()) + 1.0);
  for (std::size_t i = 0; i < grid.samples; ++i) {
    double u[4];
    for (double& ui : u) ui = static_cast<double>(qrng()) * scale;
    double theta;
    if (u[0] < cf) {
      const double v = u[0] / cf;
      const double depth = collar * std::max(std::abs(2.0 * v - 1.0), 1e-6);
      theta = v < 0.5 ? w + depth : 0.5 * kPi - w - depth;
    } else {
      const double v = (u[0] - cf) / (1.0 - cf);
      theta = w + (0.5 * kPi - 2.0 * w) * std::max(v, 1e-6);
    }
    bases.push_back(from_hopf({theta, kTwoPi * u[1], 0.0}));
    directions.push_back({2.0 * u[2] - 1.0, kTwoPi * u[3]});
  }
  if (w == 0.0) {
    bases.push_back(SpherePoint::make(1.0, 0.0));
    directions.push_back({0.0, 0.0});
    bases.push_back(SpherePoint::make(0.0, 1.0));
    directions.push_back({0.0, 0.0});
  }

  std::vector<ScanSeed> seeds;
  std::uint64_t index = 0;
  for (std::size_t b = 0; b < bases.size(); ++b) {
    const SpherePoint& x = bases[b];
    for (double c : grid.speeds) {
      seeds.push_back({index++, tangent_with_invariants(x, c, directions[b][0] * c, directions[b][1])});
      if (!grid.special_directions) continue;
      const C2 ix = mul_i(x.coords()), jx = mul_j(x.coords());
      for (const C2& d : {ix, -ix, jx, -jx}) seeds.push_back({index++, TangentVector::make(x, c * d)});
    }
  }
  return seeds;
}

double lens_period_bound(double c, const MagneticParams& m) { return period_lower_bound(c, m).bound; }

std::optional<LensPeriod> lens_period(const ClosedFormOrbit& orbit, const LensSpace& L, double t_max) {
  std::optional<LensPeriod> best;
  for (int k = 0; k < L.p; ++k) {
    const auto T = first_return_time(orbit, L.generator_power(k), 0.0, t_max);
    if (T && (!best || *T < best->period)) best = LensPeriod{*T, k};
  }
  return best;
}

namespace {

// |z1|^2 along a closed-form orbit oscillates in [A - B, A + B].
std::array<double, 2> z1_range(const ClosedFormOrbit& o) {
  const double A = std::norm(o.p_plus.z1) + std::norm(o.p_minus.z1);
  const double B = 2.0 * std::abs(std::conj(o.p_plus.z1) * o.p_minus.z1);
  return {A - B, A + B};
}

bool on_hopf_link(const ClosedFormOrbit& o) {
  const auto r = z1_range(o);
  return (r[1] - r[0]) < 1e-12 && (r[0] > 1.0 - 1e-12 || r[1] < 1e-12);
}

double lift_period(const CensusRecord& r) {
  if (r.shift == 0) return r.period;
  return r.period * r.p / std::gcd(r.shift, r.p);
}

void fill_common(CensusRecord& r, const TangentVector& t, const MagneticParams& m, const LensSpace& L,
                 const ScanGrid& grid, std::uint64_t index) {
  r.epsilon = m.epsilon;
  r.p = L.p;
  r.c = t.speed();
  r.delta = t.reeb_component();
  r.seed = grid.seed;
  r.index = index;
  r.x0 = t.base().coords();
  r.v0 = t.vec();
  r.bound = lens_period_bound(r.c, m);
  const cplx zz = r.x0.z1 * r.x0.z2;
  r.identity_residual = std::abs(std::polar(1.0, m.epsilon * r.period) * zz - zz);
  r.below_bound = r.period < r.bound * (1.0 - 1e-8);
}

std::optional<CensusRecord> scan_one(const ScanSeed& seed, const LensSpace& L, const MagneticParams& m,
                                     const ScanGrid& grid) {
  const ClosedFormOrbit orbit = solve_closed_form(seed.state, m);
  if (grid.wall > 0.0) {
    const auto r = z1_range(orbit);
    const double s = std::sin(grid.wall);
    if (r[0] < s * s || r[1] > 1.0 - s * s) return std::nullopt;
  }
  const double bound = lens_period_bound(seed.state.speed(), m);
  const auto lp = lens_period(orbit, L, grid.horizon_factor * bound);
  if (!lp) return std::nullopt;
  CensusRecord r;
  r.kind = m.epsilon == 0.0 ? OrbitKind::kGeodesic : OrbitKind::kMagnetic;
  r.period = lp->period;
  r.shift = lp->shift;
  fill_common(r, seed.state, m, L, grid, seed.index);
  r.defect = closure_defect(orbit, L.generator_power(r.shift), r.period);
  r.reeb_axis = on_hopf_link(orbit);
  r.zp_invariant = r.shift != 0 && is_zp_invariant(orbit, L, lift_period(r));
  return r;
}

template <class F>
std::vector<CensusRecord> run_scan(const std::vector<ScanSeed>& seeds, Execution exec, F&& one) {
  std::vector<std::optional<CensusRecord>> slots(seeds.size());
  const long n = static_cast<long>(seeds.size());
#pragma omp parallel for schedule(dynamic, 4) if (exec == Execution::kParallel)
  for (long i = 0; i < n; ++i) {
    try {
      slots[i] = one(seeds[i]);
    } catch (const Error&) {
      slots[i].reset();
    }
  }
  std::vector<CensusRecord> out;
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  return out;
}

// Degree of exp(i (phi1 + phi2) / 2) along the orbit over [0, T].
double fibre_winding(const std::function<C2(double)>& position, double T) {
  const int n = 4096;
  auto phase = [&](double s) {
    const C2 x = position(s);
    return std::arg(x.z1) + std::arg(x.z2);
  };
  double total = 0.0;
  double prev = phase(0.0);
  for (int i = 1; i <= n; ++i) {
    const double cur = phase(T * i / n);
    double d = cur - prev;
    d -= kTwoPi * std::round(d / kTwoPi);
    total += d;
    prev = cur;
  }
  return std::abs(0.5 * total) / kTwoPi;
}

std::optional<CensusRecord> bounce_one(const ScanSeed& seed, const LensSpace& L, const MagneticParams& m,
                                       double wall, const ScanGrid& grid) {
  const TangentVector& t = seed.state;
  const double c = t.speed();
  const double bound = lens_period_bound(c, m);
  const double horizon = grid.horizon_factor * bound;
  const BounceOrbit b = trace_billiard(t, m, wall, horizon);
  const int n = 512;
  const int k_lo = L.p == 1 ? 0 : 1;
  std::optional<PeriodicBounce> best;
  int best_k = 0;
  for (int k = k_lo; k < std::max(L.p, 1); ++k) {
    const TangentVector target = zp_action(t, L.p, k);
    auto defect = [&](double s) {
      const TangentVector st = b.state_at(s);
      return std::sqrt(norm2(st.base().coords() - target.base().coords()) +
                       norm2(st.vec() - target.vec()) / (c * c));
    };
    std::vector<double> d(n + 1);
    for (int i = 0; i <= n; ++i) d[i] = defect(horizon * i / n);
    for (int i = 1; i < n; ++i) {
      if (!(d[i] <= d[i - 1] && d[i] <= d[i + 1] && d[i] < 0.05)) continue;
      const double guess = horizon * i / n;
      if (best && guess >= best->period) break;
      ShootingOptions opt;
      opt.zp_order = L.p;
      opt.zp_power = k;
      const auto pb = find_periodic_bounce(t, m, wall, guess, opt);
      if (pb && pb->period <= horizon && (!best || pb->period < best->period)) {
        best = pb;
        best_k = k;
        break;
      }
    }
  }
  if (!best) return std::nullopt;

  const TangentVector start = best->orbit.state_at(0.0);
  CensusRecord r;
  r.period = best->period;
  r.shift = best_k;
  fill_common(r, start, m, L, grid, seed.index);
  r.defect = best->defect;
  const double T = lift_period(r);
  const BounceOrbit lifted = trace_billiard(start, m, wall, T * (1.0 + 1.0 / L.p));
  r.bounces = static_cast<int>(best->orbit.events.size());
  r.zp_invariant = r.shift != 0 && is_zp_invariant(lifted, L, T);

  if (lifted.events.empty()) {
    r.kind = m.epsilon == 0.0 ? OrbitKind::kGeodesic : OrbitKind::kMagnetic;
    return r;
  }
  const CapSide first = lifted.events.front().cap.which;
  const bool single = std::all_of(lifted.events.begin(), lifted.events.end(),
                                  [&](const BounceEvent& e) { return e.cap.which == first; });
  double far = 0.0;
  const bool north = first == CapSide::kNorth;
  for (int i = 0; i <= 256; ++i) {
    const HopfCoords h = to_hopf(lifted.state_at(T * i / 256).base());
    far = std::max(far, north ? 0.5 * kPi - h.theta : h.theta);
  }
  const bool trapped = single && far <= wall + std::sqrt(std::abs(m.epsilon));
  r.kind = trapped ? OrbitKind::kTrapped : OrbitKind::kBounce;
  if (trapped) r.reeb_winding = fibre_winding([&](double s) { return lifted.state_at(s).base().coords(); }, T);
  return r;
}

}  // namespace

std::vector<CensusRecord> lens_short_orbit_scan(const LensSpace& L, const MagneticParams& m,
                                                const ScanGrid& grid, Execution exec) {
  const auto seeds = scan_seeds(grid, m.epsilon);
  return run_scan(seeds, exec, [&](const ScanSeed& s) { return scan_one(s, L, m, grid); });
}

std::vector<CensusRecord> bound_violations(const std::vector<CensusRecord>& records) {
  std::vector<CensusRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const CensusRecord& r) { return r.below_bound && !r.reeb_axis; });
  return out;
}

std::vector<CensusRecord> zp_symmetric_bounce_scan(const LensSpace& L, const MagneticParams& m,
                                                   double wall, const ScanGrid& grid, Execution exec) {
  ScanGrid g = grid;
  g.wall = wall;
  const auto seeds = scan_seeds(g, m.epsilon);
  return run_scan(seeds, exec, [&](const ScanSeed& s) { return bounce_one(s, L, m, wall, g); });
}

std::vector<CensusRecord> trapped_torus_scan(const LensSpace& L, const MagneticParams& m,
                                             const PotentialSpec& V, const std::vector<double>& speeds) {
  std::vector<CensusRecord> out;
  if (m.epsilon == 0.0 || V.profile == PotentialProfile::kNone) return out;
  const double coupling = coupling_for_ambient(m.epsilon);
  std::uint64_t index = 0;
  for (double c : speeds) {
    for (const bool north : {true, false}) {
      const std::uint64_t idx = index++;
      // theta'' = 4 coupling omega sin cos - V'; V' > 0 in the north collar.
      const double omega = (north ? 1.0 : -1.0) * (coupling > 0 ? 1.0 : -1.0) * c;
      auto balance = [&](double th) {
        return potential_derivative(V, th) - 4.0 * coupling * omega * std::sin(th) * std::cos(th);
      };
      const double outer = north ? 0.5 * kPi - V.wall : V.wall;
      const double inner = north ? 0.5 * kPi - V.inner_wall() : V.inner_wall();
      double lo = std::min(outer, inner), hi = std::max(outer, inner);
      const double pad = 1e-9 * (hi - lo);
      north ? hi -= pad : lo += pad;
      const double flo = balance(lo), fhi = balance(hi);
      if (!(flo * fhi < 0.0)) continue;
      std::uintmax_t iters = 200;
      const auto root = boost::math::tools::toms748_solve(
          balance, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
      ReducedState r0;
      r0.theta = 0.5 * (root.first + root.second);
      r0.phi1_dot = omega;
      r0.phi2_dot = -omega;
      const int k = L.p == 1 ? 0 : (omega > 0 ? 1 : L.p - 1);
      const double T_lens = kTwoPi / (L.p * c);
      // Every balance point gives the exact orbit exp(j omega s) x0, and one
      // lies inside the final bracket, so its width bounds the distance of
      // the stored start from a true periodic orbit.
      const double defect = root.second - root.first;
      if (!(defect < 1e-8)) continue;
      const TangentVector t0 = from_reduced(r0);

      CensusRecord rec;
      rec.kind = OrbitKind::kTrapped;
      rec.period = T_lens;
      rec.shift = k;
      ScanGrid meta;
      meta.seed = 0;
      fill_common(rec, t0, m, L, meta, idx);
      rec.defect = defect;
      const double T = lift_period(rec);
      // The torus orbit is exp(j omega s) x0 exactly.
      const C2 x0 = t0.base().coords();
      auto position = [&](double s) {
        return C2{std::polar(1.0, omega * s) * x0.z1, std::polar(1.0, -omega * s) * x0.z2};
      };
      rec.zp_invariant = k != 0 && is_zp_invariant(position, L, T);
      rec.reeb_winding = fibre_winding(position, T);
      out.push_back(rec);
    }
  }
  return out;
}

bool revalidate(const CensusRecord& record, double wall) {
  const LensSpace L = LensSpace::make(record.p);
  const MagneticParams m{record.epsilon};
  const TangentVector t = TangentVector::make(SpherePoint::make(record.x0.z1, record.x0.z2), record.v0);
  const Eigen::Matrix2cd g = L.generator_power(record.shift);
  const double T = lift_period(record);
  if (record.kind == OrbitKind::kBounce || record.kind == OrbitKind::kTrapped) {
    const BounceOrbit b = trace_billiard(t, m, wall, T * (1.0 + 1.0 / L.p));
    const TangentVector end = b.state_at(record.period);
    const TangentVector target = zp_action(t, L.p, record.shift);
    const double d = std::sqrt(norm2(end.base().coords() - target.base().coords()) +
                               norm2(end.vec() - target.vec()) / (record.c * record.c));
    const bool inv = record.shift != 0 && is_zp_invariant(b, L, T);
    return d < 1e-8 && inv == record.zp_invariant;
  }
  const ClosedFormOrbit orbit = solve_closed_form(t, m);
  const auto lp = lens_period(orbit, L, record.period * (1.0 + 1e-6));
  if (!lp) return false;
  const bool inv = lp->shift != 0 && is_zp_invariant(orbit, L, T);
  return std::abs(lp->period - record.period) <= 1e-9 * record.period && lp->shift == record.shift &&
         inv == record.zp_invariant && closure_defect(orbit, g, record.period) < 1e-8;
}

}  // namespace orbitlab
