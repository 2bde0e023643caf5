#pragma once

// Independent reference computations used by the tests.  None of these call
// into the library's solvers; they only share the plain C2 value type.

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "orbitlab/geometry.hpp"
#include "orbitlab/magnetic_flow.hpp"
#include <optional>
#include <cmath>

namespace oracle {

using orbitlab::C2;
using orbitlab::cplx;

// Real 4x4 matrix of a complex-linear map of C^2.
inline Eigen::Matrix4d realify(const Eigen::Matrix2cd& a) {
  Eigen::Matrix4d m;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      m(2 * r, 2 * c) = a(r, c).real();
      m(2 * r, 2 * c + 1) = -a(r, c).imag();
      m(2 * r + 1, 2 * c) = a(r, c).imag();
      m(2 * r + 1, 2 * c + 1) = a(r, c).real();
    }
  }
  return m;
}

// The unique unitary, complex-linear J with J^2 = -1 and J x = w, written in
// the Hermitian basis (x, x_perp) with x_perp = (-conj z2, conj z1).
inline Eigen::Matrix4d complex_structure(const C2& x, const C2& w) {
  const Eigen::Vector2cd xv(x.z1, x.z2);
  const Eigen::Vector2cd xp(-std::conj(x.z2), std::conj(x.z1));
  const Eigen::Vector2cd wv(w.z1, w.z2);
  const cplx alpha = xv.dot(wv);  // Eigen's dot conjugates the left side
  const cplx beta = xp.dot(wv);
  const Eigen::Matrix2cd a = alpha * (xv * xv.adjoint() - xp * xp.adjoint()) +
                             beta * xp * xv.adjoint() - std::conj(beta) * xv * xp.adjoint();
  return realify(a);
}

struct AmbientState {
  C2 x;
  C2 v;
};

// x'' = eps i x' + eps delta x - c^2 x, with c and delta taken from the
// current state (the constrained Lorentz-force equation on S^3).
inline AmbientState ambient_rhs(const AmbientState& s, double eps) {
  const double c2 = orbitlab::norm2(s.v);
  const double delta = orbitlab::re_dot(orbitlab::mul_i(s.x), s.v);
  return {s.v, eps * orbitlab::mul_i(s.v) + (eps * delta - c2) * s.x};
}

// Classical fixed-step RK4.
inline AmbientState ambient_rk4(AmbientState s, double eps, double t, int steps) {
  const double h = t / steps;
  auto axpy = [](const AmbientState& a, double k, const AmbientState& d) {
    return AmbientState{a.x + k * d.x, a.v + k * d.v};
  };
  for (int i = 0; i < steps; ++i) {
    const AmbientState k1 = ambient_rhs(s, eps);
    const AmbientState k2 = ambient_rhs(axpy(s, 0.5 * h, k1), eps);
    const AmbientState k3 = ambient_rhs(axpy(s, 0.5 * h, k2), eps);
    const AmbientState k4 = ambient_rhs(axpy(s, h, k3), eps);
    s.x = s.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    s.v = s.v + (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
  }
  return s;
}

// Radius of the best-fit circle through points in R^3: fit the plane by SVD,
// then average distances to the centroid within it.
inline double circle_radius(const std::vector<Eigen::Vector3d>& pts) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::MatrixXd m(pts.size(), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(i) = (pts[i] - centroid).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  // The circle centre is the centroid only for uniformly spread samples, so
  // solve for it: points satisfy |p - q|^2 = r^2 in the plane.
  Eigen::MatrixXd a(pts.size(), 3);
  Eigen::VectorXd b(pts.size());
  const Eigen::Vector3d u = svd.matrixV().col(0), w = svd.matrixV().col(1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double px = (pts[i] - centroid).dot(u), py = (pts[i] - centroid).dot(w);
    a(i, 0) = 2 * px;
    a(i, 1) = 2 * py;
    a(i, 2) = 1.0;
    b(i) = px * px + py * py;
  }
  const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(b);
  return std::sqrt(sol(2) + sol(0) * sol(0) + sol(1) * sol(1));
}

// Smooth orbit through a pole fibre built from the closed-form frequencies:
// theta+ / theta- = -P / Q fixes a = eps (P + Q) / (2 (P - Q)), and the speed
// follows from a^2 = eps^2/4 + c^2 - eps delta.  delta = eps/2 gives an orbit
// through both fibres.  Returns nullopt when no such speed exists.
inline std::optional<orbitlab::ClosedFormOrbit> pole_orbit(double eps, int P, int Q, double delta,
                                                         bool north, double phi, double dir) {
  using namespace orbitlab;
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

}  // namespace oracle
