#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "orbitlab/geometry.hpp"
#include "orbitlab/sampling.hpp"

using namespace orbitlab;

namespace {

const cplx I(0, 1);

double dist(const C2& a, const C2& b) { return norm(a - b); }

}  // namespace

TEST_CASE("sphere points renormalize small drift and reject large") {
  const SpherePoint x = SpherePoint::make(cplx(1.0 + 5e-7, 0), cplx(0, 0));
  CHECK(std::abs(norm(x.coords()) - 1.0) < kTolUnit);
  CHECK_THROWS_AS(SpherePoint::make(cplx(1.1, 0), cplx(0, 0)), Error);
  const SpherePoint e = SpherePoint::make(cplx(1, 0), cplx(0, 0));
  CHECK_THROWS_AS(TangentVector::make(e, C2{cplx(0.1, 0), cplx(0, 1)}), Error);
  const TangentVector t = TangentVector::make(e, C2{cplx(1e-8, 0), cplx(0, 1)});
  CHECK(std::abs(re_dot(t.base().coords(), t.vec())) < kTolUnit);
}

TEST_CASE("magnetic strength must stay below one half") {
  CHECK_NOTHROW(MagneticParams::make(0.3));
  CHECK_THROWS_AS(MagneticParams::make(0.5), Error);
  CHECK_THROWS_AS(MagneticParams::make(std::nan("")), Error);
  CHECK(MagneticParams::make(0.2).reversed().epsilon == doctest::Approx(-0.2));
}

TEST_CASE("contact form examples") {
  const SpherePoint e1 = SpherePoint::make(cplx(1, 0), cplx(0, 0));
  CHECK(contact_form(TangentVector::make(e1, mul_i(e1.coords()))) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(contact_form(TangentVector::make(e1, C2{0, cplx(1, 0)}))) < kTolUnit);
  // j (1, 0) = (i, 0), evaluated with plain real dot products.
  const TangentVector tj = TangentVector::make(e1, mul_j(e1.coords()));
  const Eigen::Vector4d ix = i_matrix() * to_real(e1.coords());
  CHECK(contact_form(tj) == doctest::Approx(0.5 * ix.dot(to_real(tj.vec()))));
  CHECK(contact_form(tj) == doctest::Approx(0.5));
}

TEST_CASE("Z_p action") {
  const SpherePoint e1 = SpherePoint::make(cplx(1, 0), cplx(0, 0));
  CHECK(dist(zp_action(e1, 3, 3).coords(), e1.coords()) < kTolUnit);
  CHECK(dist(zp_action(e1, 3, 1).coords(), C2{std::polar(1.0, kTwoPi / 3), 0}) < kTolUnit);
  CHECK_THROWS_AS(zp_action(e1, 4, 1), Error);
  CHECK_THROWS_AS(zp_action(e1, 0, 1), Error);
  CHECK_THROWS_AS(zp_action(e1, -3, 1), Error);

  Rng rng(11);
  for (int p : {1, 3, 5, 7}) {
    for (int n = 0; n < 50; ++n) {
      const SpherePoint x = random_point(rng);
      CHECK(dist(zp_action(zp_action(x, p, 1), p, p - 1).coords(), x.coords()) < kTolAlg);
      SpherePoint y = x;
      for (int k = 0; k < p; ++k) y = zp_action(y, p, 1);
      CHECK(dist(y.coords(), x.coords()) < kTolAlg);
    }
  }
}

TEST_CASE("contact form is Z_p invariant") {
  Rng rng(12);
  for (int p : {3, 5, 7}) {
    for (int n = 0; n < 100; ++n) {
      const TangentVector t = random_tangent(rng, rng.uniform(0.1, 2.0));
      const int k = rng.integer(1, p - 1);
      CHECK(std::abs(contact_form(zp_action(t, p, k)) - contact_form(t)) < kTolAlg);
    }
  }
}

TEST_CASE("Hopf projection") {
  const Eigen::Vector3d n = hopf_project(SpherePoint::make(cplx(1, 0), cplx(0, 0)));
  CHECK((n - Eigen::Vector3d(0, 0, 0.5)).norm() < kTolUnit);
  const Eigen::Vector3d s = hopf_project(SpherePoint::make(cplx(0, 0), cplx(1, 0)));
  CHECK((s - Eigen::Vector3d(0, 0, -0.5)).norm() < kTolUnit);

  Rng rng(13);
  for (int n_pts = 0; n_pts < 200; ++n_pts) {
    const SpherePoint x = random_point(rng);
    const Eigen::Vector3d h = hopf_project(x);
    CHECK(std::abs(h.norm() - 0.5) < kTolAlg);
    for (int f = 0; f < 8; ++f) {
      const cplx ph = std::polar(1.0, rng.uniform(0, kTwoPi));
      CHECK((hopf_project(ph * x.coords()) - h).norm() < kTolAlg);
    }
    // The lens action rotates S^2 about the polar axis by -4 pi k / p.
    for (int p : {3, 5}) {
      const int k = rng.integer(1, p - 1);
      const double ang = -2.0 * kTwoPi * k / p;
      const Eigen::Vector3d r(std::cos(ang) * h.x() - std::sin(ang) * h.y(),
                              std::sin(ang) * h.x() + std::cos(ang) * h.y(), h.z());
      CHECK((hopf_project(zp_action(x, p, k)) - r).norm() < kTolAlg);
    }
  }
}

TEST_CASE("Hopf chart round trip") {
  Rng rng(14);
  for (int n = 0; n < 200; ++n) {
    HopfCoords h{rng.uniform(0.01, kPi / 2 - 0.01), rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi)};
    const HopfCoords back = to_hopf(from_hopf(h));
    CHECK(back.theta == doctest::Approx(h.theta).epsilon(1e-12));
    CHECK(back.phi1 == doctest::Approx(h.phi1).epsilon(1e-12));
    CHECK(back.phi2 == doctest::Approx(h.phi2).epsilon(1e-12));
    CHECK(back.phi1 >= 0.0);
    CHECK(back.phi1 < kTwoPi);
  }
  CHECK(to_hopf(SpherePoint::make(cplx(1, 0), cplx(0, 0))).theta == doctest::Approx(kPi / 2));
  CHECK(to_hopf(SpherePoint::make(cplx(0, 0), cplx(1, 0))).theta == 0.0);
}

TEST_CASE("J for the unit Reeb direction at (1, 0) is j") {
  // Both i and j send (1, 0) to (i, 0) and commute with i, but only j lies in
  // the same family as every other J (orientation fixed once, globally).
  const SpherePoint e1 = SpherePoint::make(cplx(1, 0), cplx(0, 0));
  const ComplexStructureJ J = construct_J(TangentVector::make(e1, C2{I, 0}), MagneticParams{0.0});
  CHECK((J.matrix - j_matrix()).norm() < kTolUnit);
  CHECK(dist(J.apply(e1.coords()), C2{I, 0}) < kTolUnit);
  // At (0, 1) the Reeb direction gives -j.
  const SpherePoint e2 = SpherePoint::make(cplx(0, 0), cplx(1, 0));
  const ComplexStructureJ Jm = construct_J(TangentVector::make(e2, C2{0, I}), MagneticParams{0.0});
  CHECK((Jm.matrix + j_matrix()).norm() < kTolUnit);
}

TEST_CASE("J for a horizontal direction") {
  const SpherePoint e1 = SpherePoint::make(cplx(1, 0), cplx(0, 0));
  const ComplexStructureJ J = construct_J(TangentVector::make(e1, C2{0, 1}), MagneticParams{0.0});
  CHECK(dist(J.apply(e1.coords()), C2{0, 1}) < kTolUnit);
  CHECK((J.matrix * J.matrix + Eigen::Matrix4d::Identity()).norm() < kTolUnit);
}

TEST_CASE("J is degenerate only when a vanishes") {
  const SpherePoint e1 = SpherePoint::make(cplx(1, 0), cplx(0, 0));
  CHECK_THROWS_AS(construct_J(TangentVector::make(e1, C2{0, 0}), MagneticParams{0.0}), Error);
  // eps = 2c and v = c i x: a = 0 as well.
  CHECK_THROWS_AS(construct_J(TangentVector::make(e1, C2{0.1 * I, 0}), MagneticParams{0.2}), Error);
}

TEST_CASE("J invariants and agreement with the complex-linear formula") {
  Rng rng(15);
  const Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
  const Eigen::Matrix4d i4 = i_matrix();
  int checked = 0;
  for (int n = 0; n < 1000; ++n) {
    const MagneticParams m{rng.uniform(0.0, 0.3)};
    const TangentVector t = random_tangent(rng, rng.uniform(0.05, 1.0));
    const double a = rotation_rate(t, m);
    if (a < 1e-6) continue;
    const ComplexStructureJ J = construct_J(t, m);
    const Eigen::Matrix4d& j = J.matrix;
    CHECK((j * j + id).norm() < kTolAlg);
    CHECK((j.transpose() * j - id).norm() < kTolAlg);
    CHECK((j * i4 - i4 * j).norm() < kTolAlg);
    const C2 w = (1.0 / a) * (t.vec() - (0.5 * m.epsilon) * mul_i(t.base().coords()));
    CHECK(dist(J.apply(t.base().coords()), w) < kTolAlg);
    CHECK((j - oracle::complex_structure(t.base().coords(), w)).norm() < kTolAlg);
    ++checked;
  }
  CHECK(checked > 990);
}
