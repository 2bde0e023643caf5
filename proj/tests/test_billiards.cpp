#include <cmath>

#include "doctest.h"
#include "orbitlab/billiards.hpp"
#include "orbitlab/reduced_system.hpp"
#include "orbitlab/sampling.hpp"
#include "oracles.hpp"

using namespace orbitlab;

namespace {

TangentVector meridian_start(double theta, double speed) {
  const SpherePoint x = from_hopf({theta, 0.0, 0.0});
  return TangentVector::make(x, speed * theta_direction(x));
}

// Seed off the rational family: theta' scaled, so the shooting has to move.
TangentVector perturbed(const TangentVector& t, double factor) {
  ReducedState r = to_reduced(t);
  r.theta_dot *= factor;
  return from_reduced(r);
}

}  // namespace

TEST_CASE("cap geometry") {
  const CapGeometry cap = CapGeometry::make(0.2, CapSide::kNorth);
  CHECK(cap.r == doctest::Approx(0.5 * std::sin(0.4)));
  CHECK_THROWS_AS(CapGeometry::make(-0.1, CapSide::kSouth), Error);
  CHECK_THROWS_AS(CapGeometry::make(1.0, CapSide::kSouth), Error);
}

TEST_CASE("reflection law") {
  const double w = 0.2;
  const CapGeometry north = CapGeometry::make(w, CapSide::kNorth);
  const CapGeometry south = CapGeometry::make(w, CapSide::kSouth);

  // Normal incidence.
  const TangentVector n = meridian_start(kPi / 2 - w, 0.7);
  const TangentVector rn = reflect(n, north);
  CHECK(norm(rn.vec() + n.vec()) < kTolUnit);
  const TangentVector s = meridian_start(w, -0.7);
  CHECK(norm(reflect(s, south).vec() + s.vec()) < kTolUnit);

  // Tangential state is fixed.
  const SpherePoint x = from_hopf({kPi / 2 - w, 0.3, 1.1});
  const TangentVector tang = TangentVector::make(x, mul_i(x.coords()));
  CHECK(norm(reflect(tang, north).vec() - tang.vec()) < kTolUnit);

  // Off the wall, or leaving the cap.
  CHECK_THROWS_AS(reflect(meridian_start(0.5, 1.0), north), Error);
  CHECK_THROWS_AS(reflect(meridian_start(kPi / 2 - w, -1.0), north), Error);

  Rng rng(41);
  for (int k = 0; k < 200; ++k) {
    const bool up = rng.uniform() < 0.5;
    const double th = up ? kPi / 2 - w : w;
    const SpherePoint b = from_hopf({th, rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi)});
    TangentVector t = random_tangent(rng, b, rng.uniform(0.1, 1.0));
    const double rate = theta_rate(t);
    if ((up && rate < 0) || (!up && rate > 0)) {
      t = TangentVector::make(b, t.vec() - (2.0 * rate) * theta_direction(b));
    }
    const TangentVector r = reflect(t, up ? north : south);
    const MagneticParams m{0.15};
    const ConservedSet before = conserved_set(to_reduced(t), m, PotentialSpec::none());
    const ConservedSet after = conserved_set(to_reduced(r), m, PotentialSpec::none());
    CHECK(r.speed() == doctest::Approx(t.speed()).epsilon(1e-12));
    CHECK(std::abs(r.reeb_component() - t.reeb_component()) < 1e-12);
    CHECK(std::abs(after.c1 - before.c1) < 1e-12);
    CHECK(std::abs(after.c2 - before.c2) < 1e-12);
    CHECK(to_reduced(r).theta_dot == doctest::Approx(-to_reduced(t).theta_dot).epsilon(1e-10));
  }
}

TEST_CASE("orbit away from the caps is type 1") {
  const SpherePoint x = from_hopf({kPi / 4, 0.0, 0.0});
  const TangentVector t = TangentVector::make(x, 0.8 * mul_i(x.coords()));
  const BounceOrbit b = trace_billiard(t, MagneticParams{0.2}, 0.2, 50.0);
  CHECK(b.type == 1);
  CHECK(b.events.empty());
  const ClosedFormOrbit o = solve_closed_form(t, MagneticParams{0.2});
  CHECK(norm(b.final_state().base().coords() - o.position(50.0)) < kTolAlg);
}

TEST_CASE("head-on meridian bounce retraces itself") {
  const double w = 0.1, th0 = 0.6;
  const TangentVector t = meridian_start(th0, 1.0);
  const double hit = kPi / 2 - w - th0;
  const BounceOrbit b = trace_billiard(t, MagneticParams{0.0}, w, 2 * hit);
  REQUIRE(b.events.size() == 1);
  CHECK(b.type == 2);
  CHECK(b.events[0].time == doctest::Approx(hit).epsilon(1e-12));
  CHECK(b.events[0].cap.which == CapSide::kNorth);
  // Time reversal of the arc: returns to the start with the velocity reversed.
  const TangentVector end = b.final_state();
  CHECK(norm(end.base().coords() - t.base().coords()) < 1e-10);
  CHECK(norm(end.vec() + t.vec()) < 1e-10);
  for (double s : {0.1, 0.4, 0.8}) {
    CHECK(norm(b.state_at(hit + s).base().coords() - b.state_at(hit - s).base().coords()) < 1e-10);
  }
}

TEST_CASE("delta = 0 orbit across both caps is type 3") {
  const TangentVector t = tangent_with_invariants(from_hopf({0.7, 0.2, 0.4}), 1.0, 0.0, 0.3);
  const BounceOrbit b = trace_billiard(t, MagneticParams{0.0}, 0.3, 20.0);
  CHECK(b.type == 3);
  bool north = false, south = false;
  for (const auto& e : b.events) (e.cap.which == CapSide::kNorth ? north : south) = true;
  CHECK(north);
  CHECK(south);
}

TEST_CASE("invariants are preserved over many bounces") {
  Rng rng(42);
  for (int n = 0; n < 20; ++n) {
    const double eps = rng.uniform(0.0, 0.3);
    const double w = rng.uniform(0.05, 0.3);
    const SpherePoint x = from_hopf({rng.uniform(w + 0.05, kPi / 2 - w - 0.05), rng.uniform(0, kTwoPi),
                                     rng.uniform(0, kTwoPi)});
    const TangentVector t = random_tangent(rng, x, rng.uniform(0.2, 1.0));
    const MagneticParams m{eps};
    const BounceOrbit b = trace_billiard(t, m, w, 200.0);
    const ConservedSet c0 = conserved_set(to_reduced(t), MagneticParams{coupling_for_ambient(eps)},
                                          PotentialSpec::none());
    for (const BounceEvent& e : b.events) {
      const double off = e.cap.which == CapSide::kNorth
                             ? kPi / 2 - w - to_hopf(e.state_in.base()).theta
                             : to_hopf(e.state_in.base()).theta - w;
      CHECK(std::abs(off) < 1e-12);
      const ConservedSet ce = conserved_set(to_reduced(e.state_out),
                                            MagneticParams{coupling_for_ambient(eps)}, PotentialSpec::none());
      CHECK(std::abs(e.state_out.speed() - t.speed()) < 1e-9 * (1 + n));
      CHECK(std::abs(e.state_out.reeb_component() - t.reeb_component()) < 1e-9);
      CHECK(std::abs(ce.c1 - c0.c1) < 1e-9);
      CHECK(std::abs(ce.c2 - c0.c2) < 1e-9);
    }
    // Arcs join continuously.
    for (std::size_t k = 1; k < b.arcs.size(); ++k) {
      const BounceArc& prev = b.arcs[k - 1];
      CHECK(norm(prev.orbit.position(prev.duration) - b.arcs[k].orbit.position(0.0)) < 1e-12);
    }
  }
}

TEST_CASE("reversibility") {
  Rng rng(43);
  for (int n = 0; n < 20; ++n) {
    const double eps = rng.uniform(0.0, 0.3);
    const double w = 0.15;
    const SpherePoint x = from_hopf({rng.uniform(w + 0.05, kPi / 2 - w - 0.05), rng.uniform(0, kTwoPi),
                                     rng.uniform(0, kTwoPi)});
    const TangentVector t = random_tangent(rng, x, rng.uniform(0.2, 1.0));
    const BounceOrbit fwd = trace_billiard(t, MagneticParams{eps}, w, 30.0);
    const TangentVector end = fwd.final_state();
    const TangentVector rev0 = TangentVector::make(end.base(), -end.vec());
    const BounceOrbit back = trace_billiard(rev0, MagneticParams{-eps}, w, 30.0);
    CHECK(back.events.size() == fwd.events.size());
    CHECK(norm(back.final_state().base().coords() - t.base().coords()) < 1e-8);
    CHECK(norm(back.final_state().vec() + t.vec()) < 1e-8);
  }
}

TEST_CASE("periodic bounce search") {
  // A periodic magnetic geodesic away from the caps is already a fixed point.
  const SpherePoint x = from_hopf({kPi / 4, 0.0, 0.0});
  const TangentVector reeb = TangentVector::make(x, 0.8 * mul_i(x.coords()));
  auto fixed = find_periodic_bounce(reeb, MagneticParams{0.2}, 0.2, kTwoPi / 0.8);
  REQUIRE(fixed.has_value());
  CHECK(fixed->iterations == 0);
  CHECK(fixed->period == doctest::Approx(kTwoPi / 0.8));

  // The meridian bouncing between both walls: twice the wall-to-wall arc.
  // Both momenta vanish, so the speed is one of the shooting unknowns.
  const double w = 0.1;
  const auto mer = find_periodic_bounce(meridian_start(0.6, 1.0), MagneticParams{0.0}, w, 2.9);
  REQUIRE(mer.has_value());
  const double speed = mer->orbit.state_at(0.0).speed();
  CHECK(mer->period * speed == doctest::Approx(2 * (kPi / 2 - 2 * w)).epsilon(1e-9));
  CHECK(mer->defect < 1e-9);
}

TEST_CASE("mirror extension of a great circle through both poles") {
  // (cos s, sin s) passes (0, 1) at pi/2 and (1, 0) at pi: the mirrored
  // orbit returns to minus its start at s = pi.
  const ClosedFormOrbit o =
      solve_closed_form(evaluate(solve_closed_form(meridian_start(kPi / 2, 1.0), MagneticParams{0.0}), 0.3),
                        MagneticParams{0.0});
  // meridian_start at theta = pi/2 sits on the pole fibre; re-anchor off it.
  const auto T = mirror_extended_period(o, 100.0);
  REQUIRE(T.has_value());
  CHECK(*T == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(*minimal_period(o) == doctest::Approx(kTwoPi));
}

TEST_CASE("ideal table reflection at the pole fibres") {
  const CapGeometry north = CapGeometry::make(0.0, CapSide::kNorth);
  const CapGeometry south = CapGeometry::make(0.0, CapSide::kSouth);
  CHECK(north.r == 0.0);
  const auto o = oracle::pole_orbit(0.2, 11, 9, 0.05, true, 0.4, 1.3);
  REQUIRE(o.has_value());
  const TangentVector at = evaluate(*o, 0.0);
  const TangentVector r = reflect(at, north);
  CHECK(norm(r.vec() - C2{at.vec().z1, -at.vec().z2}) < kTolUnit);
  CHECK(r.reeb_component() == doctest::Approx(at.reeb_component()));
  CHECK_THROWS_AS(reflect(at, south), Error);
  CHECK_THROWS_AS(reflect(meridian_start(0.5, 1.0), north), Error);
}

TEST_CASE("bounce periods match the mirror construction") {
  struct Case {
    double eps;
    int P, Q;
    double delta;
    bool north;
    int type;
  };
  const Case cases[] = {{0.2, 11, 9, 0.05, true, 2},  {0.3, 7, 5, -0.1, true, 2},
                        {0.2, 11, 9, 0.05, false, 2}, {0.3, 5, 3, 0.0, false, 2},
                        {0.2, 7, 3, 0.02, true, 2},   {0.2, 11, 9, 0.1, true, 3},
                        {0.3, 7, 5, 0.15, true, 3},   {0.3, 5, 3, 0.15, false, 3}};
  for (const Case& c : cases) {
    CAPTURE(c.eps);
    CAPTURE(c.P);
    CAPTURE(c.Q);
    const auto o = oracle::pole_orbit(c.eps, c.P, c.Q, c.delta, c.north, 0.4, 1.3);
    REQUIRE(o.has_value());
    const MagneticParams m{c.eps};
    const TangentVector on_family = evaluate(*o, 0.37 * kPi / o->a);
    const auto T_family = mirror_extended_period(solve_closed_form(on_family, m), 1000.0);
    REQUIRE(T_family.has_value());
    // The constructed state already closes on the ideal table.
    CHECK(bounce_defect(on_family, m, 0.0, *T_family) < 1e-9);

    const auto pb = find_periodic_bounce(perturbed(on_family, 1.001), m, 0.0, *T_family);
    REQUIRE(pb.has_value());
    CHECK(pb->iterations > 0);
    CHECK(pb->orbit.type == c.type);
    const TangentVector start = pb->orbit.state_at(0.0);
    const auto T_mirror = mirror_extended_period(solve_closed_form(start, m), 2 * pb->period);
    REQUIRE(T_mirror.has_value());
    CHECK(pb->period == doctest::Approx(*T_mirror).epsilon(1e-6));
  }
}

TEST_CASE("type 3 orbits persist for a small finite cap") {
  const auto o = oracle::pole_orbit(0.2, 11, 9, 0.1, true, 0.4, 1.3);
  REQUIRE(o.has_value());
  const MagneticParams m{0.2};
  const TangentVector seed = evaluate(*o, 0.37 * kPi / o->a);
  const auto T = mirror_extended_period(solve_closed_form(seed, m), 1000.0);
  REQUIRE(T.has_value());
  const auto pb = find_periodic_bounce(seed, m, 1e-5, *T);
  REQUIRE(pb.has_value());
  CHECK(pb->orbit.type == 3);
  CHECK(pb->period == doctest::Approx(*T).epsilon(1e-6));
}

TEST_CASE("cap entry angle") {
  CHECK(cap_entry_angle(0.3, 0.3, 1e-12) == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(cap_entry_angle(0.3, 0.3, 0.3) == doctest::Approx(kPi / 3));
  // Planar construction: intersect circle |p| = R with |p - (d, 0)| = r.
  const double R = 0.4, d = 0.35, r = 0.1;
  const double px = (R * R - r * r + d * d) / (2 * d);
  CHECK(cap_entry_angle(R, d, r) == doctest::Approx(std::acos(px / R)));
  CHECK_THROWS_AS(cap_entry_angle(0.3, 0.5, 0.1), Error);
  CHECK_THROWS_AS(cap_entry_angle(0.3, 0.1, 0.1), Error);
  Rng rng(44);
  for (int k = 0; k < 500; ++k) {
    const double RR = rng.uniform(0.05, 0.5), rr = rng.uniform(0.001, RR);
    const double dd = rng.uniform(RR - rr, RR + rr);
    CHECK(std::cos(cap_entry_angle(RR, dd, rr)) >= (RR - rr) / (RR + rr) - 1e-12);
  }
}

TEST_CASE("measured cap angle agrees with the planar construction") {
  Rng rng(45);
  int found = 0;
  for (int n = 0; n < 4000 && found < 100; ++n) {
    const double eps = rng.uniform(0.05, 0.3);
    const MagneticParams m{eps};
    const ClosedFormOrbit o = solve_closed_form(random_tangent(rng, rng.uniform(0.05, 1.0)), m);
    for (const CapSide side : {CapSide::kNorth, CapSide::kSouth}) {
      const CapGeometry cap = CapGeometry::make(eps, side);
      const auto passage = measured_cap_passage(o, cap);
      if (!passage) continue;
      const Eigen::Vector3d pole =
          hopf_project(side == CapSide::kNorth ? SpherePoint::make(1.0, 0.0) : SpherePoint::make(0.0, 1.0));
      const double R = hopf_radius(o.c, o.delta, m);
      const Eigen::Vector3d entry = hopf_project(o.position(passage->entry));
      const Eigen::Vector3d exit = hopf_project(o.position(passage->exit));
      // Both crossing points lie on the wall circle.
      CHECK(std::abs((entry - pole).norm() - (exit - pole).norm()) < 1e-8);
      CHECK(std::abs(std::abs(entry.dot(pole)) * 4 - std::cos(2 * eps)) < 1e-8);
      // The half-angle subtended at the centre of the orbit circle.
      const double chord = (exit - entry).norm();
      CHECK(std::sin(passage->alpha) == doctest::Approx(0.5 * chord / R).epsilon(1e-7));
      CHECK(passage->alpha > 0.0);
      ++found;
    }
  }
  CHECK(found == 100);
}
