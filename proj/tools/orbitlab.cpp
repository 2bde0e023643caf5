// orbitlab: command line front end.  Every output starts with a header that
// records the arguments it was produced from; `orbitlab replay FILE` reruns
// them.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "orbitlab/billiards.hpp"
#include "orbitlab/capacity.hpp"
#include "orbitlab/error.hpp"
#include "orbitlab/lens_space.hpp"
#include "orbitlab/magnetic_flow.hpp"
#include "orbitlab/reduced_system.hpp"
#include "orbitlab/sampling.hpp"
#include "orbitlab/verify.hpp"

using json = nlohmann::json;
using namespace orbitlab;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kFailed = 1, kUsage = 2 };

std::string num(double x) { return fmt::format("{:.17g}", x); }

struct Sink {
  std::ostringstream body;
  bool ok = true;
};

json c2_json(const C2& v) { return json::array({v.z1.real(), v.z1.imag(), v.z2.real(), v.z2.imag()}); }

// ---------------------------------------------------------------- orbit

struct OrbitArgs {
  double epsilon = 0.0;
  double speed = 1.0;
  bool unit_speed = false;
  std::optional<double> delta;
  bool reeb = false;
  double t_end = 4 * kPi;
  int samples = 1024;
  std::uint64_t seed = 1;

  json config() const {
    return {{"epsilon", epsilon}, {"speed", unit_speed ? 1.0 : speed}, {"delta", delta ? json(*delta) : json()},
            {"reeb", reeb},       {"t_end", t_end},                    {"samples", samples},
            {"seed", seed}};
  }
};

// Base point on the standard Clifford torus carrying the orbit with
// invariants (c, delta): the theta+ mode on z1 and the theta- mode on z2.
TangentVector torus_launch(double c, double delta, const MagneticParams& m, Rng& rng) {
  const double root = std::sqrt(m.epsilon * m.epsilon + 4 * (c * c - m.epsilon * delta));
  const double tp = 0.5 * (m.epsilon + root), tm = 0.5 * (m.epsilon - root);
  const double s2 = (delta - tm) / (tp - tm);
  if (!(s2 >= -1e-15 && s2 <= 1 + 1e-15)) {
    throw Error(ErrorKind::kInvalidParameter, "cli",
                fmt::format("no Clifford torus carries c = {} and delta = {} at epsilon = {}", c, delta, m.epsilon));
  }
  const double s = std::sqrt(std::clamp(s2, 0.0, 1.0)), co = std::sqrt(std::clamp(1 - s2, 0.0, 1.0));
  const cplx z1 = std::polar(s, rng.uniform(0.0, kTwoPi)), z2 = std::polar(co, rng.uniform(0.0, kTwoPi));
  const cplx i(0, 1);
  return TangentVector::make(SpherePoint::make(z1, z2), C2{i * tp * z1, i * tm * z2});
}

int cmd_orbit(const OrbitArgs& a, Sink& out) {
  const MagneticParams m = MagneticParams::make(a.epsilon);
  const double c = a.unit_speed ? 1.0 : a.speed;
  if (!(c > 0.0)) throw Error(ErrorKind::kInvalidParameter, "cli", "speed must be positive");
  if (a.samples < 1 || !(a.t_end > 0.0)) throw Error(ErrorKind::kInvalidParameter, "cli", "empty time grid");
  Rng rng(a.seed);
  TangentVector t0 = random_tangent(rng, c);
  if (a.reeb) {
    const SpherePoint x = SpherePoint::make(1.0, 0.0);
    t0 = TangentVector::make(x, c * mul_i(x.coords()));
  } else if (a.delta) {
    if (std::abs(*a.delta) > c) throw Error(ErrorKind::kInvalidParameter, "cli", "|delta| must not exceed the speed");
    t0 = torus_launch(c, *a.delta, m, rng);
  }
  const ClosedFormOrbit orbit = solve_closed_form(t0, m);
  const double coupling = coupling_for_ambient(a.epsilon);
  out.body << "t,x0,x1,x2,x3,v0,v1,v2,v3,theta,phi1,phi2,hopf_x,hopf_y,hopf_z,c,delta,c1,c2\n";
  for (int k = 0; k <= a.samples; ++k) {
    const double s = a.t_end * k / a.samples;
    const TangentVector st = evaluate(orbit, s);
    const C2& x = st.base().coords();
    const C2& v = st.vec();
    const Eigen::Vector3d h = hopf_project(x);
    // Momenta of phi1, phi2 in the reduced convention, written without angles
    // so that they stay defined on the Hopf link.
    const double c1 = (std::conj(x.z1) * v.z1).imag() + coupling * std::norm(x.z1);
    const double c2 = (std::conj(x.z2) * v.z2).imag() + coupling * std::norm(x.z2);
    const double cols[] = {s,
                           x.z1.real(),
                           x.z1.imag(),
                           x.z2.real(),
                           x.z2.imag(),
                           v.z1.real(),
                           v.z1.imag(),
                           v.z2.real(),
                           v.z2.imag(),
                           std::atan2(std::abs(x.z1), std::abs(x.z2)),
                           std::arg(x.z1),
                           std::arg(x.z2),
                           h.x(),
                           h.y(),
                           h.z(),
                           st.speed(),
                           st.reeb_component(),
                           c1,
                           c2};
    for (std::size_t i = 0; i < std::size(cols); ++i) out.body << (i ? "," : "") << num(cols[i]);
    out.body << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- billiard

struct BilliardArgs {
  double epsilon = 0.2;
  std::optional<double> wall;
  double speed = 1.0;
  double t_end = 20.0;
  int samples = 1000;
  int max_events = 10000;
  std::uint64_t seed = 1;

  double wall_value() const { return wall.value_or(epsilon); }
  json config() const {
    return {{"epsilon", epsilon}, {"wall", wall_value()}, {"speed", speed},          {"t_end", t_end},
            {"samples", samples}, {"seed", seed},         {"max_events", max_events}};
  }
};

// Random launch at least 1e-3 away from both walls.
TangentVector launch_outside(Rng& rng, double wall, double speed) {
  for (int tries = 0; tries < 100000; ++tries) {
    const TangentVector t = random_tangent(rng, speed);
    const double theta = std::atan2(std::abs(t.base().z1()), std::abs(t.base().z2()));
    if (theta > wall + 1e-3 && theta < 0.5 * kPi - wall - 1e-3) return t;
  }
  throw Error(ErrorKind::kInvalidParameter, "cli", "caps leave no room to launch");
}

void state_row(Sink& out, const char* kind, int arc, double t, const TangentVector& st) {
  const C2& x = st.base().coords();
  const C2& v = st.vec();
  const Eigen::Vector3d h = hopf_project(x);
  out.body << kind << "," << arc;
  for (double c : {t, x.z1.real(), x.z1.imag(), x.z2.real(), x.z2.imag(), v.z1.real(), v.z1.imag(), v.z2.real(),
                   v.z2.imag(), std::atan2(std::abs(x.z1), std::abs(x.z2)), h.x(), h.y(), h.z()}) {
    out.body << "," << num(c);
  }
  out.body << "\n";
}

int arc_at(const BounceOrbit& b, double t) {
  int arc = 0;
  for (std::size_t k = 0; k < b.arcs.size(); ++k) {
    if (b.arcs[k].start <= t) arc = static_cast<int>(k);
  }
  return arc;
}

int cmd_billiard(const BilliardArgs& a, Sink& out) {
  const MagneticParams m = MagneticParams::make(a.epsilon);
  if (!(a.speed > 0.0) || a.samples < 1 || !(a.t_end > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "cli", "speed, samples and t_end must be positive");
  }
  Rng rng(a.seed);
  const TangentVector t0 = launch_outside(rng, a.wall_value(), a.speed);
  const BounceOrbit b = trace_billiard(t0, m, a.wall_value(), a.t_end, a.max_events);
  out.body << "kind,arc,t,x0,x1,x2,x3,v0,v1,v2,v3,theta,hopf_x,hopf_y,hopf_z\n";
  for (int k = 0; k <= a.samples; ++k) {
    const double t = b.end_time * k / a.samples;
    state_row(out, "sample", arc_at(b, t), t, b.state_at(t));
  }
  for (std::size_t k = 0; k < b.events.size(); ++k) {
    state_row(out, "bounce", static_cast<int>(k), b.events[k].time, b.events[k].state_out);
  }
  return kOk;
}

// ---------------------------------------------------------------- census

struct CensusArgs {
  int p = 3;
  double epsilon = 0.1;
  std::size_t samples = 256;
  std::vector<double> speeds{0.1, 0.5, 1.0};
  double wall = 0.0;
  double horizon = 2.0;
  bool bounces = false;
  bool tori = false;
  std::uint64_t seed = 1;

  json config() const {
    return {{"p", p},         {"epsilon", epsilon}, {"samples", samples}, {"speeds", speeds}, {"wall", wall},
            {"horizon", horizon}, {"bounces", bounces}, {"tori", tori},     {"seed", seed}};
  }
};

json record_json(const CensusRecord& r) {
  return {{"epsilon", r.epsilon},
          {"p", r.p},
          {"kind", to_string(r.kind)},
          {"c", r.c},
          {"delta", r.delta},
          {"seed", r.seed},
          {"index", r.index},
          {"period", r.period},
          {"shift", r.shift},
          {"zp_invariant", r.zp_invariant},
          {"defect", r.defect},
          {"bound", r.bound},
          {"below_bound", r.below_bound},
          {"reeb_axis", r.reeb_axis},
          {"identity_residual", r.identity_residual},
          {"reeb_winding", r.reeb_winding},
          {"bounces", r.bounces},
          {"x0", c2_json(r.x0)},
          {"v0", c2_json(r.v0)}};
}

int cmd_census(const CensusArgs& a, Sink& out) {
  const LensSpace L = LensSpace::make(a.p);
  const MagneticParams m = MagneticParams::make(a.epsilon);
  if (a.samples == 0 || a.speeds.empty()) throw Error(ErrorKind::kInvalidParameter, "cli", "empty scan grid");
  ScanGrid grid;
  grid.samples = a.samples;
  grid.speeds = a.speeds;
  grid.wall = a.wall;
  grid.horizon_factor = a.horizon;
  grid.seed = a.seed;
  std::vector<CensusRecord> records = lens_short_orbit_scan(L, m, grid);
  if (a.bounces) {
    if (!(a.wall > 0.0)) throw Error(ErrorKind::kInvalidParameter, "cli", "--bounces needs --wall > 0");
    const auto b = zp_symmetric_bounce_scan(L, m, a.wall, grid);
    records.insert(records.end(), b.begin(), b.end());
  }
  if (a.tori) {
    if (!(a.epsilon > 0.0)) throw Error(ErrorKind::kInvalidParameter, "cli", "--tori needs epsilon > 0");
    const auto t = trapped_torus_scan(L, m, PotentialSpec::polynomial_barrier(a.epsilon), a.speeds);
    records.insert(records.end(), t.begin(), t.end());
  }
  for (const CensusRecord& r : records) out.body << record_json(r).dump() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t seed = 1;
  std::uint64_t capacity_budget = 20000;

  json config() const { return {{"suite", suite}, {"seed", seed}, {"capacity_budget", capacity_budget}}; }
};

int cmd_verify(const VerifyArgs& a, Sink& out) {
  VerifyOptions o;
  o.seed = a.seed;
  o.capacity_budget = a.capacity_budget;
  int failures = 0;
  for (const CheckResult& r : run_suite(a.suite, o)) {
    out.body << fmt::format("{} {:2d} {}: {}\n", r.pass ? "PASS" : "FAIL", r.id, r.name, r.detail);
    // Timings vary from run to run, so they stay out of the output.
    std::cerr << fmt::format("{} took {:.2f} s\n", r.name, r.seconds);
    if (!r.pass) ++failures;
  }
  return failures ? kFailed : kOk;
}

// ---------------------------------------------------------------- capacity

struct CapacityArgs {
  int p = 1;
  double epsilon = 0.1;
  std::uint64_t budget = 20000;
  std::optional<double> margin;
  int speed_levels = 8;
  double bounce_share = 0.25;
  std::uint64_t seed = 1;

  json config() const {
    return {{"p", p},
            {"epsilon", epsilon},
            {"budget", budget},
            {"margin", margin ? json(*margin) : json()},
            {"speed_levels", speed_levels},
            {"bounce_share", bounce_share},
            {"seed", seed}};
  }
};

int cmd_capacity(const CapacityArgs& a, Sink& out) {
  CapacityOptions o;
  o.margin = a.margin;
  o.speed_levels = a.speed_levels;
  o.bounce_share = a.bounce_share;
  o.seed = a.seed;
  const CapacityEstimate e = certify_lower_bound(LensSpace::make(a.p), a.epsilon, a.budget, o);
  json j = {{"epsilon", e.epsilon},
            {"p", e.p},
            {"oscillation", e.oscillation},
            {"min_period_found", std::isfinite(e.min_period_found) ? json(e.min_period_found) : json()},
            {"reference_upper", e.reference_upper},
            {"pass", e.pass},
            {"budget", e.budget},
            {"seeds_used", e.seeds_used},
            {"orbits_examined", e.orbits_examined},
            {"margin", e.margin},
            {"speeds", e.speeds},
            {"min_reparam_period", std::isfinite(e.min_reparam_period) ? json(e.min_reparam_period) : json()},
            {"fitted_constant", e.fitted_constant}};
  if (e.witness) {
    j["witness"] = {{"record", record_json(e.witness->record)},
                    {"energy", e.witness->energy},
                    {"reparam_period", e.witness->reparam_period},
                    {"final_period", e.witness->final_period}};
  }
  out.body << j.dump() << "\n";
  if (e.pass) {
    out.body << "lower ≥ " << num(e.oscillation) << ", reference upper = 2π\n";
    return kOk;
  }
  out.body << "no certified lower bound: an orbit of period " << num(e.min_period_found)
           << " <= 1 was found (oscillation " << num(e.oscillation) << ", reference upper = 2π)\n";
  return kFailed;
}

// ---------------------------------------------------------------- plotdata

struct PlotArgs {
  std::string figure;
  double epsilon = 0.1;
  int p = 3;
  int samples = 256;
  std::uint64_t seed = 1;

  json config() const {
    return {{"figure", figure}, {"epsilon", epsilon}, {"p", p}, {"samples", samples}, {"seed", seed}};
  }
};

void csv_row(Sink& out, std::initializer_list<double> cols) {
  bool first = true;
  for (double c : cols) {
    out.body << (first ? "" : ",") << num(c);
    first = false;
  }
  out.body << "\n";
}

// Poles, then a family of projected orbit circles at speed 1 with the Reeb
// component running from -c to c.
void plot_hopf(const PlotArgs& a, Sink& out) {
  const MagneticParams m = MagneticParams::make(a.epsilon);
  out.body << "series,delta,radius,t,hopf_x,hopf_y,hopf_z\n";
  const Eigen::Vector3d N = hopf_project(SpherePoint::make(1.0, 0.0)), S = hopf_project(SpherePoint::make(0.0, 1.0));
  out.body << "-1,0,0,0," << num(N.x()) << "," << num(N.y()) << "," << num(N.z()) << "\n";
  out.body << "-2,0,0,0," << num(S.x()) << "," << num(S.y()) << "," << num(S.z()) << "\n";
  Rng rng(a.seed);
  const SpherePoint x = random_point(rng);
  const int family = 9;
  for (int f = 0; f < family; ++f) {
    const double delta = -1.0 + 2.0 * f / (family - 1);
    const ClosedFormOrbit o = solve_closed_form(tangent_with_invariants(x, 1.0, delta, 0.0), m);
    const double R = hopf_radius(1.0, delta, m);
    for (int k = 0; k <= a.samples; ++k) {
      const double t = kPi / o.a * k / a.samples;
      const Eigen::Vector3d h = hopf_project(o.position(t));
      csv_row(out, {double(f), delta, R, t, h.x(), h.y(), h.z()});
    }
  }
}

// Arc polylines of a bounce orbit with event markers (arc = -1 rows).
void plot_bounce(const PlotArgs& a, Sink& out) {
  const MagneticParams m = MagneticParams::make(a.epsilon);
  Rng rng(a.seed);
  const TangentVector t0 = launch_outside(rng, a.epsilon, 1.0);
  const BounceOrbit b = trace_billiard(t0, m, a.epsilon, 30.0);
  out.body << "arc,t,hopf_x,hopf_y,hopf_z,theta\n";
  for (std::size_t k = 0; k < b.arcs.size(); ++k) {
    const BounceArc& arc = b.arcs[k];
    for (int i = 0; i <= a.samples; ++i) {
      const double s = arc.duration * i / a.samples;
      const C2 x = arc.orbit.position(s);
      const Eigen::Vector3d h = hopf_project(x);
      csv_row(out, {double(k), arc.start + s, h.x(), h.y(), h.z(), std::atan2(std::abs(x.z1), std::abs(x.z2))});
    }
  }
  for (const BounceEvent& e : b.events) {
    const C2& x = e.state_out.base().coords();
    const Eigen::Vector3d h = hopf_project(x);
    csv_row(out, {-1.0, e.time, h.x(), h.y(), h.z(), std::atan2(std::abs(x.z1), std::abs(x.z2))});
  }
}

// A jx geodesic and its Z_p images in Hopf angles: the arc of length 2 pi / p
// is a fundamental domain of the closed orbit downstairs.
void plot_zp(const PlotArgs& a, Sink& out) {
  const LensSpace L = LensSpace::make(a.p);
  Rng rng(a.seed);
  const SpherePoint x = random_point(rng);
  const ClosedFormOrbit o = solve_closed_form(TangentVector::make(x, mul_j(x.coords())), MagneticParams{0.0});
  out.body << "copy,t,theta,phi1,phi2,x0,x1,x2,x3\n";
  for (int k = 0; k < L.p; ++k) {
    for (int i = 0; i <= a.samples; ++i) {
      const double t = kTwoPi / L.p * i / a.samples;
      const C2 y = act(L.generator_power(k), o.position(t));
      csv_row(out, {double(k), t, std::atan2(std::abs(y.z1), std::abs(y.z2)), std::arg(y.z1), std::arg(y.z2),
                    y.z1.real(), y.z1.imag(), y.z2.real(), y.z2.imag()});
    }
  }
}

void plot_heps(const PlotArgs& a, Sink& out) {
  out.body << "y,h,dh\n";
  for (const HepsSample& s : heps_curve(a.epsilon, 1.0, std::max(a.samples, 1))) csv_row(out, {s.y, s.h, s.dh});
}

// Quantities of the cap-angle construction for orbits meeting one cap.
void plot_capangle(const PlotArgs& a, Sink& out) {
  const MagneticParams m = MagneticParams::make(a.epsilon);
  out.body << "epsilon,R,r,d,alpha_measured,alpha_chord\n";
  int found = 0;
  for (std::uint64_t n = 0; n < 100000 && found < a.samples; ++n) {
    Rng rng(a.seed, n);
    const ClosedFormOrbit o = solve_closed_form(random_tangent(rng, rng.uniform(0.05, 1.0)), m);
    for (const CapSide side : {CapSide::kNorth, CapSide::kSouth}) {
      const CapGeometry cap = CapGeometry::make(a.epsilon, side);
      const auto passage = measured_cap_passage(o, cap);
      if (!passage) continue;
      const Eigen::Vector3d pole =
          hopf_project(side == CapSide::kNorth ? SpherePoint::make(1.0, 0.0) : SpherePoint::make(0.0, 1.0));
      Eigen::Vector3d centre = Eigen::Vector3d::Zero();
      for (int k = 0; k < 64; ++k) centre += hopf_project(o.position(kPi / o.a * k / 64)) / 64;
      const double R = hopf_radius(o.c, o.delta, m);
      const Eigen::Vector3d wall_centre = pole * std::cos(2 * a.epsilon);
      const double chord = (hopf_project(o.position(passage->exit)) - hopf_project(o.position(passage->entry))).norm();
      csv_row(out, {a.epsilon, R, cap.r, (centre - wall_centre).norm(), passage->alpha,
                    std::asin(std::min(1.0, 0.5 * chord / R))});
      ++found;
    }
  }
}

int cmd_plotdata(const PlotArgs& a, Sink& out) {
  if (a.samples < 1) throw Error(ErrorKind::kInvalidParameter, "cli", "samples must be positive");
  if (a.figure == "hopf") plot_hopf(a, out);
  else if (a.figure == "bounce") plot_bounce(a, out);
  else if (a.figure == "zp") plot_zp(a, out);
  else if (a.figure == "heps") plot_heps(a, out);
  else if (a.figure == "capangle") plot_capangle(a, out);
  else throw Error(ErrorKind::kInvalidParameter, "cli", "unknown figure '" + a.figure + "'");
  return kOk;
}

// ---------------------------------------------------------------- driver

int configure_threads() {
  const char* env = std::getenv("ORBITLAB_THREADS");
  if (!env || !*env) return kOk;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) {
    std::cerr << "orbitlab: ORBITLAB_THREADS must be a positive integer\n";
    return kUsage;
  }
  omp_set_num_threads(static_cast<int>(n));
  return kOk;
}

// Arguments with the output destination removed: they identify the content.
std::vector<std::string> content_args(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "-o" || args[i] == "--output") {
      ++i;
      continue;
    }
    if (args[i].rfind("--output=", 0) == 0) continue;
    out.push_back(args[i]);
  }
  return out;
}

int run(const std::vector<std::string>& args);

int replay(const std::string& path, const std::optional<std::string>& output) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) {
    std::cerr << "orbitlab: cannot read " << path << "\n";
    return kUsage;
  }
  json header;
  try {
    if (line.rfind("# ", 0) == 0) {
      header = json::parse(line.substr(2));
    } else {
      header = json::parse(line).at("header");
    }
  } catch (const json::exception&) {
    std::cerr << "orbitlab: " << path << " has no orbitlab header\n";
    return kUsage;
  }
  std::vector<std::string> args = header.at("argv").get<std::vector<std::string>>();
  if (output) {
    args.push_back("-o");
    args.push_back(*output);
  }
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Magnetic geodesics on S^3 and L(p;1): orbits, billiards, census, capacity estimates"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string output;
  bool timestamp = false;
  app.add_option("-o,--output", output, "Write to this file instead of stdout");
  app.add_flag("--timestamp", timestamp, "Add the wall-clock time to the header (output is then not reproducible)");

  OrbitArgs oa;
  auto* orbit = app.add_subcommand("orbit", "Sample one magnetic geodesic on S^3 (CSV)");
  orbit->add_option("--epsilon", oa.epsilon, "Magnetic strength");
  orbit->add_option("--speed,--c", oa.speed, "Speed c");
  orbit->add_flag("--unit-speed", oa.unit_speed, "Use c = 1");
  orbit->add_option("--delta", oa.delta, "Reeb component; launches on the standard Clifford torus");
  orbit->add_flag("--reeb", oa.reeb, "Launch along ix from (1, 0): the Reeb orbit gamma+");
  orbit->add_option("--t-end", oa.t_end, "Final time");
  orbit->add_option("--samples", oa.samples, "Number of time steps");
  orbit->add_option("--seed", oa.seed, "Seed for the initial condition");

  BilliardArgs ba;
  auto* billiard = app.add_subcommand("billiard", "Trace a magnetic billiard outside the polar caps (CSV)");
  billiard->add_option("--epsilon", ba.epsilon, "Magnetic strength");
  billiard->add_option("--wall", ba.wall, "Cap co-latitude (default: epsilon)");
  billiard->add_option("--speed,--c", ba.speed, "Speed c");
  billiard->add_option("--t-end", ba.t_end, "Final time");
  billiard->add_option("--samples", ba.samples, "Number of sample rows");
  billiard->add_option("--max-events", ba.max_events, "Stop after this many bounces");
  billiard->add_option("--seed", ba.seed, "Seed for the initial condition");

  CensusArgs ca;
  auto* census = app.add_subcommand("census", "Short closed orbits on L(p;1) (JSON lines)");
  census->add_option("--p", ca.p, "Order of the lens space (odd)");
  census->add_option("--epsilon", ca.epsilon, "Magnetic strength");
  census->add_option("--samples", ca.samples, "Base points");
  census->add_option("--speeds", ca.speeds, "Speed levels")->delimiter(',');
  census->add_option("--wall", ca.wall, "Cap co-latitude; 0 scans the whole sphere");
  census->add_option("--horizon", ca.horizon, "Report periods up to this multiple of the bound");
  census->add_flag("--bounces", ca.bounces, "Add Z_p-symmetric bounce orbits (needs --wall)");
  census->add_flag("--tori", ca.tori, "Add the barrier tori of the confining potential");
  census->add_option("--seed", ca.seed, "Seed of the sampling");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run the numbered checks; exit 1 on failure");
  verify->add_option("--suite", va.suite, "all or one check name")->check(CLI::IsMember([] {
    std::vector<std::string> v{"all"};
    for (const auto& n : check_names()) v.push_back(n);
    return v;
  }()));
  verify->add_option("--seed", va.seed, "Seed");
  verify->add_option("--capacity-budget", va.capacity_budget, "Seed budget of each capacity run");

  CapacityArgs pa;
  auto* capacity = app.add_subcommand("capacity", "Certify a capacity lower bound; exit 1 if it fails");
  capacity->add_option("--p", pa.p, "Order of the lens space (odd)");
  capacity->add_option("--epsilon", pa.epsilon, "Magnetic strength, below 1/4");
  capacity->add_option("--budget", pa.budget, "Number of seeds");
  capacity->add_option("--margin", pa.margin, "Plateau width of f (default: epsilon, or 0.01 at 0)");
  capacity->add_option("--speed-levels", pa.speed_levels, "Energy levels scanned");
  capacity->add_option("--bounce-share", pa.bounce_share, "Part of the budget spent on bounce orbits");
  capacity->add_option("--seed", pa.seed, "Seed of the sampling");

  PlotArgs ga;
  auto* plot = app.add_subcommand("plotdata", "Datasets for the figures (CSV)");
  plot->add_option("--figure", ga.figure, "hopf, bounce, zp, heps or capangle")->required();
  plot->add_option("--epsilon", ga.epsilon, "Magnetic strength");
  plot->add_option("--p", ga.p, "Order of the lens space for the zp figure");
  plot->add_option("--samples", ga.samples, "Points per curve or number of orbits");
  plot->add_option("--seed", ga.seed, "Seed");

  std::string replay_file;
  auto* rep = app.add_subcommand("replay", "Rerun the command recorded in an output header");
  rep->add_option("file", replay_file, "File written by orbitlab")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (*rep) return replay(replay_file, output.empty() ? std::nullopt : std::optional<std::string>(output));

  Sink sink;
  json header = {{"tool", "orbitlab"}, {"version", kVersion}, {"argv", content_args(args)}};
  if (timestamp) {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    header["wall_clock"] = buf;
  }
  int code = kOk;
  try {
    if (*orbit) {
      header["command"] = "orbit", header["config"] = oa.config();
      code = cmd_orbit(oa, sink);
    } else if (*billiard) {
      header["command"] = "billiard", header["config"] = ba.config();
      code = cmd_billiard(ba, sink);
    } else if (*census) {
      header["command"] = "census", header["config"] = ca.config();
      code = cmd_census(ca, sink);
    } else if (*verify) {
      header["command"] = "verify", header["config"] = va.config();
      code = cmd_verify(va, sink);
    } else if (*capacity) {
      header["command"] = "capacity", header["config"] = pa.config();
      code = cmd_capacity(pa, sink);
    } else if (*plot) {
      header["command"] = "plotdata", header["config"] = ga.config();
      code = cmd_plotdata(ga, sink);
    }
  } catch (const Error& e) {
    std::cerr << "orbitlab " << header.value("command", "") << ": " << e.what() << " (" << to_string(e.kind())
              << "; config " << header.value("config", json::object()).dump() << ")\n";
    return kUsage;
  }

  // JSON-lines streams carry the header as their first record.
  const std::string head =
      header["command"] == "census" ? json{{"header", header}}.dump() : "# " + header.dump();
  if (output.empty()) {
    std::cout << head << "\n" << sink.body.str();
    std::cout.flush();
  } else {
    std::ofstream f(output, std::ios::binary);
    if (!f) {
      std::cerr << "orbitlab: cannot write " << output << "\n";
      return kUsage;
    }
    f << head << "\n" << sink.body.str();
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  if (const int t = configure_threads(); t != kOk) return t;
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}
