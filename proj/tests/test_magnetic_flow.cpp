#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "orbitlab/magnetic_flow.hpp"
#include "orbitlab/sampling.hpp"

using namespace orbitlab;

namespace {

const cplx I(0, 1);

double dist(const C2& a, const C2& b) { return norm(a - b); }

TangentVector unit_e1_e2() {
  return TangentVector::make(SpherePoint::make(cplx(1, 0), cplx(0, 0)), C2{0, 1});
}

// First s in (s_min, s_max] where |gamma(s) - gamma(0)| + |gamma'(s) - gamma'(0)|
// has a near-zero local minimum, by dense sampling plus golden-section polish.
double first_return_by_sampling(const ClosedFormOrbit& o, double s_min, double s_max, int samples) {
  auto f = [&](double s) {
    return dist(o.position(s), o.position(0)) + dist(o.velocity(s), o.velocity(0));
  };
  const double h = (s_max - s_min) / samples;
  for (int k = 1; k + 1 <= samples; ++k) {
    const double s0 = s_min + (k - 1) * h, s1 = s_min + k * h, s2 = s_min + (k + 1) * h;
    if (f(s1) <= f(s0) && f(s1) <= f(s2) && f(s1) < 0.05) {
      double a = s0, b = s2;
      for (int it = 0; it < 200; ++it) {
        const double m1 = a + 0.381966 * (b - a), m2 = b - 0.381966 * (b - a);
        if (f(m1) < f(m2)) b = m2; else a = m1;
      }
      return 0.5 * (a + b);
    }
  }
  return -1.0;
}

}  // namespace

TEST_CASE("great circle at eps = 0") {
  const ClosedFormOrbit o = solve_closed_form(unit_e1_e2(), MagneticParams{0.0});
  CHECK(o.theta_plus == doctest::Approx(1.0));
  CHECK(o.theta_minus == doctest::Approx(-1.0));
  CHECK(dist(o.p_plus, C2{0.5, -0.5 * I}) < kTolUnit);
  CHECK(dist(o.p_minus, C2{0.5, 0.5 * I}) < kTolUnit);
  for (double s : {0.0, 0.3, 1.7, 4.0}) {
    CHECK(dist(o.position(s), C2{std::cos(s), std::sin(s)}) < kTolUnit);
  }
}

TEST_CASE("Reeb direction is an ordinary geodesic") {
  Rng rng(21);
  for (int n = 0; n < 50; ++n) {
    const SpherePoint x = random_point(rng);
    const double eps = rng.uniform(0.0, 0.3);
    const double c = rng.uniform(0.2, 1.0);
    const TangentVector t = TangentVector::make(x, c * mul_i(x.coords()));
    const ClosedFormOrbit o = solve_closed_form(t, MagneticParams{eps});
    CHECK(norm(o.p_minus) < kTolAlg);
    for (double s : {0.5, 2.0, 7.0}) {
      CHECK(dist(o.position(s), std::polar(1.0, c * s) * x.coords()) < kTolAlg);
    }
    CHECK(ode_residual(o, 1.3) < 1e-10);
  }
}

TEST_CASE("theta_minus = 0 orbit has period 2 pi / eps") {
  const double eps = 0.2, c = 0.1, delta = c * c / eps;
  const TangentVector t =
      tangent_with_invariants(SpherePoint::make(cplx(0.6, 0), cplx(0, 0.8)), c, delta, 0.4);
  const ClosedFormOrbit o = solve_closed_form(t, MagneticParams{eps});
  CHECK(std::abs(o.theta_minus) < 1e-14);
  CHECK(o.theta_plus == doctest::Approx(eps));
  for (double s : {0.7, 3.0, 11.0}) {
    CHECK(dist(o.position(s), std::polar(1.0, eps * s) * o.p_plus + o.p_minus) < kTolAlg);
  }
  const auto T = minimal_period(o);
  REQUIRE(T.has_value());
  CHECK(*T == doctest::Approx(kTwoPi / eps).epsilon(1e-12));
}

TEST_CASE("degenerate closed form") {
  const SpherePoint e1 = SpherePoint::make(cplx(1, 0), cplx(0, 0));
  CHECK_THROWS_AS(solve_closed_form(TangentVector::make(e1, C2{0.1 * I, 0}), MagneticParams{0.2}),
                  Error);
  CHECK_THROWS_AS(evaluate_quaternionic(TangentVector::make(e1, C2{0, 0}), MagneticParams{0.0}, 1.0),
                  Error);
}

TEST_CASE("closed form satisfies the ODE and matches an independent integrator") {
  Rng rng(22);
  for (int n = 0; n < 200; ++n) {
    const MagneticParams m{rng.uniform(0.0, 0.3)};
    const TangentVector t = random_tangent(rng, rng.uniform(0.05, 1.0));
    const ClosedFormOrbit o = solve_closed_form(t, m);
    CHECK(std::abs(norm2(o.p_plus) + norm2(o.p_minus) - 1.0) < kTolAlg);
    CHECK(std::abs(o.theta_plus * o.theta_plus * norm2(o.p_plus) +
                   o.theta_minus * o.theta_minus * norm2(o.p_minus) - o.c * o.c) < kTolAlg);
    for (int k = 0; k < 64; ++k) CHECK(ode_residual(o, 0.25 * k) <= 1e-10);
    const TangentVector t0 = evaluate(o, 0.0);
    CHECK(dist(t0.base().coords(), t.base().coords()) < kTolUnit);
    CHECK(dist(t0.vec(), t.vec()) < kTolUnit);
    if (n < 20) {
      const auto ref = oracle::ambient_rk4({t.base().coords(), t.vec()}, m.epsilon, 5.0, 5000);
      CHECK(dist(ref.x, o.position(5.0)) < 1e-9);
      CHECK(dist(ref.v, o.velocity(5.0)) < 1e-9);
    }
  }
}

TEST_CASE("speed and Reeb component are conserved") {
  Rng rng(23);
  for (int n = 0; n < 20; ++n) {
    const MagneticParams m{rng.uniform(0.0, 0.3)};
    const TangentVector t = random_tangent(rng, rng.uniform(0.05, 1.0));
    const ClosedFormOrbit o = solve_closed_form(t, m);
    for (int k = 0; k < 100; ++k) {
      const TangentVector ts = evaluate(o, rng.uniform(0.0, 100.0));
      CHECK(std::abs(norm(ts.base().coords()) - 1.0) < kTolAlg);
      CHECK(std::abs(ts.speed() - t.speed()) < kTolAlg);
      CHECK(std::abs(ts.reeb_component() - t.reeb_component()) < kTolAlg);
    }
  }
}

TEST_CASE("quaternionic form") {
  const TangentVector t = unit_e1_e2();
  CHECK(dist(evaluate_quaternionic(t, MagneticParams{0.0}, 0.0).coords(), t.base().coords()) < kTolUnit);
  CHECK(dist(evaluate_quaternionic(t, MagneticParams{0.0}, kPi / 2).coords(), C2{0, 1}) < kTolUnit);
  Rng rng(24);
  double worst = 0.0;
  for (int n = 0; n < 300; ++n) {
    const MagneticParams m{rng.uniform(0.0, 0.3)};
    const TangentVector tv = random_tangent(rng, rng.uniform(0.05, 1.0));
    const ClosedFormOrbit o = solve_closed_form(tv, m);
    for (int k = 0; k < 32; ++k) {
      const double s = rng.uniform(0.0, 50.0);
      worst = std::max(worst, dist(evaluate_quaternionic(tv, m, s).coords(), o.position(s)));
    }
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("rational approximation") {
  auto r = rational_approximation(3.0);
  REQUIRE(r.has_value());
  CHECK(r->num == 3);
  CHECK(r->den == 1);
  r = rational_approximation(-7.0 / 5.0);
  REQUIRE(r.has_value());
  CHECK(r->num * 5 == -7 * r->den);
  r = rational_approximation(355.0 / 113.0);
  REQUIRE(r.has_value());
  CHECK(r->den == 113);
  CHECK_FALSE(rational_approximation(std::sqrt(2.0)).has_value());
  CHECK_FALSE(rational_approximation(kPi).has_value());
}

TEST_CASE("minimal period examples") {
  CHECK(*minimal_period(solve_closed_form(unit_e1_e2(), MagneticParams{0.0})) ==
        doctest::Approx(kTwoPi));
  Rng rng(25);
  for (int n = 0; n < 20; ++n) {
    const auto T = minimal_period(solve_closed_form(random_tangent(rng, 1.0), MagneticParams{0.0}));
    REQUIRE(T.has_value());
    CHECK(*T == doctest::Approx(kTwoPi).epsilon(1e-12));
  }

  ClosedFormOrbit o;
  o.theta_plus = 3.0;
  o.theta_minus = 1.0;
  o.p_plus = C2{std::sqrt(0.5), 0};
  o.p_minus = C2{0, std::sqrt(0.5)};
  const auto T = minimal_period(o);
  REQUIRE(T.has_value());
  CHECK(*T == doctest::Approx(kTwoPi));
  CHECK(first_return_by_sampling(o, 0.01, 10.0, 20000) == doctest::Approx(kTwoPi).epsilon(1e-6));

  o.theta_minus = std::sqrt(2.0);
  CHECK_FALSE(minimal_period(o).has_value());

  // Ratio 7/3: period 2 pi * 7 / theta_plus.
  o.theta_plus = 7.0 / 3.0;
  o.theta_minus = 1.0;
  CHECK(*minimal_period(o) == doctest::Approx(kTwoPi * 3.0));
  CHECK(first_return_by_sampling(o, 0.01, 25.0, 50000) == doctest::Approx(kTwoPi * 3.0).epsilon(1e-6));
}

TEST_CASE("period lower bound branches") {
  CHECK(period_lower_bound(1.0, MagneticParams{0.1}).bound == doctest::Approx(kTwoPi));
  CHECK(period_lower_bound(1.0, MagneticParams{0.1}).branch == PeriodBranch::kFast);
  CHECK(period_lower_bound(0.05, MagneticParams{0.1}).bound == doctest::Approx(20 * kPi));
  CHECK(period_lower_bound(0.05, MagneticParams{0.1}).branch == PeriodBranch::kSlow);
  CHECK(period_lower_bound(0.1, MagneticParams{0.1}).bound == doctest::Approx(kTwoPi / 0.1));
  CHECK(period_lower_bound(0.1 * (1 - 1e-12), MagneticParams{0.1}).bound ==
        doctest::Approx(kTwoPi / 0.1));
  CHECK_THROWS_AS(period_lower_bound(0.0, MagneticParams{0.1}), Error);
}

TEST_CASE("periodic orbits respect the period bound") {
  Rng rng(26);
  int periodic = 0;
  for (int n = 0; n < 500; ++n) {
    const double eps = rng.uniform(0.01, 0.3);
    const int P = rng.integer(1, 12), Q = rng.integer(1, 12);
    if (P == Q) continue;
    const double r = (rng.uniform() < 0.5 ? -1.0 : 1.0) * P / Q;
    const double tp = eps * r / (1 + r), tm = eps / (1 + r);
    const double lo = std::min(std::abs(tp), std::abs(tm)), hi = std::max(std::abs(tp), std::abs(tm));
    const double c = rng.uniform(lo, hi);
    const double delta = (c * c + tp * tm) / eps;
    if (std::abs(delta) > c || c > 2.0) continue;
    const TangentVector t = tangent_with_invariants(random_point(rng), c, delta, rng.uniform(0, kTwoPi));
    const ClosedFormOrbit o = solve_closed_form(t, MagneticParams{eps});
    const auto T = minimal_period(o);
    REQUIRE(T.has_value());
    ++periodic;
    CHECK(closure_defect(o, Eigen::Matrix2cd::Identity(), *T) < 1e-8);
    CHECK(*T >= period_lower_bound(c, MagneticParams{eps}).bound * (1 - 1e-8));
    const auto T2 = first_return_time(o, Eigen::Matrix2cd::Identity(), 0.0, 1e9);
    REQUIRE(T2.has_value());
    CHECK(*T2 == doctest::Approx(*T).epsilon(1e-9));
  }
  CHECK(periodic > 100);
}

TEST_CASE("Hopf radius") {
  CHECK(hopf_radius(0.7, 0.7, MagneticParams{0.1}) == doctest::Approx(0.0));
  CHECK(hopf_radius(0.7, -0.7, MagneticParams{0.1}) == doctest::Approx(0.0));
  CHECK(hopf_radius(1.0, 0.0, MagneticParams{0.0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(hopf_radius(0.5, 0.6, MagneticParams{0.1}), Error);

  // Max pairwise distance of the projected great circle is its diameter.
  const ClosedFormOrbit g = solve_closed_form(unit_e1_e2(), MagneticParams{0.0});
  double diam = 0.0;
  for (int k = 0; k < 200; ++k) {
    for (int l = 0; l < k; ++l) {
      diam = std::max(diam, (hopf_project(g.position(0.0314 * k)) - hopf_project(g.position(0.0314 * l))).norm());
    }
  }
  CHECK(0.5 * diam == doctest::Approx(0.5).epsilon(1e-6));

  Rng rng(27);
  for (int n = 0; n < 200; ++n) {
    const MagneticParams m{rng.uniform(0.0, 0.3)};
    const TangentVector t = random_tangent(rng, rng.uniform(0.05, 1.0));
    const ClosedFormOrbit o = solve_closed_form(t, m);
    const double R = hopf_radius(o.c, o.delta, m);
    std::vector<Eigen::Vector3d> pts;
    const double span = kPi / o.a;  // one projected revolution
    for (int k = 0; k < 64; ++k) pts.push_back(hopf_project(o.position(span * k / 64.0)));
    CHECK(std::abs(oracle::circle_radius(pts) - R) < 1e-8);
    // The circle is cut out by a plane normal to the rotation axis.
    const Eigen::Vector3d axis = rotation_axis(o);
    CHECK(std::abs(axis.norm() - 1.0) < kTolAlg);
    for (const auto& p : pts) CHECK(std::abs(axis.dot(p - pts[0])) < 1e-10);
    CHECK(std::abs(std::sqrt(0.25 - std::pow(axis.dot(pts[0]), 2)) - R) < 1e-9);
  }
}

TEST_CASE("flow commutes with the Z_p action") {
  Rng rng(28);
  for (int p : {3, 5, 7}) {
    for (int n = 0; n < 30; ++n) {
      const MagneticParams m{rng.uniform(0.0, 0.3)};
      const TangentVector t = random_tangent(rng, rng.uniform(0.05, 1.0));
      const ClosedFormOrbit o = solve_closed_form(t, m);
      const ClosedFormOrbit og = solve_closed_form(zp_action(t, p, 1), m);
      for (double s : {0.4, 3.3, 12.0}) {
        CHECK(dist(og.position(s), zp_action(o.position(s), p, 1)) < kTolAlg);
      }
    }
  }
}

TEST_CASE("first return under a unitary symmetry") {
  // Reeb orbit through (1, 0): e^{2 pi j / p} x = x(2 pi / (p c)).
  const SpherePoint e1 = SpherePoint::make(cplx(1, 0), cplx(0, 0));
  for (int p : {3, 5, 7}) {
    const ClosedFormOrbit o = solve_closed_form(TangentVector::make(e1, C2{I, 0}), MagneticParams{0.1});
    Eigen::Matrix2cd g = Eigen::Matrix2cd::Zero();
    g(0, 0) = std::polar(1.0, kTwoPi / p);
    g(1, 1) = std::polar(1.0, -kTwoPi / p);
    const auto T = first_return_time(o, g, 0.0, 100.0);
    REQUIRE(T.has_value());
    CHECK(*T == doctest::Approx(kTwoPi / p));
    CHECK(closure_defect(o, g, *T) < 1e-12);
  }
  // A generic orbit is never mapped onto itself by the lens action.
  Rng rng(29);
  Eigen::Matrix2cd g = Eigen::Matrix2cd::Zero();
  g(0, 0) = std::polar(1.0, kTwoPi / 3);
  g(1, 1) = std::polar(1.0, -kTwoPi / 3);
  for (int n = 0; n < 20; ++n) {
    const ClosedFormOrbit o = solve_closed_form(random_tangent(rng, 1.0), MagneticParams{0.0});
    CHECK_FALSE(first_return_time(o, g, 0.0, 100.0).has_value());
  }
}
