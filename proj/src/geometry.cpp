#include "orbitlab/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

namespace orbitlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kDegenerateInput: return "degenerate-input";
    case ErrorKind::kChartDomain: return "chart-domain";
    case ErrorKind::kGeometry: return "geometry";
    case ErrorKind::kNoIntersection: return "no-intersection";
    case ErrorKind::kNotLibrating: return "not-librating";
    case ErrorKind::kInfinitePotential: return "infinite-potential";
    case ErrorKind::kStepUnderflow: return "step-underflow";
  }
  return "unknown";
}

namespace {

double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

}  // namespace

Eigen::Vector4d to_real(const C2& a) {
  return {a.z1.real(), a.z1.imag(), a.z2.real(), a.z2.imag()};
}

C2 from_real(const Eigen::Vector4d& v) { return {cplx(v[0], v[1]), cplx(v[2], v[3])}; }

Eigen::Matrix4d i_matrix() {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 1) = -1; m(1, 0) = 1;
  m(2, 3) = -1; m(3, 2) = 1;
  return m;
}

Eigen::Matrix4d j_matrix() {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 1) = -1; m(1, 0) = 1;
  m(2, 3) = 1; m(3, 2) = -1;
  return m;
}

SpherePoint SpherePoint::make(const C2& coords) {
  const double n = norm(coords);
  if (!std::isfinite(n) || std::abs(n - 1.0) >= kRepairLimit) {
    throw Error(ErrorKind::kInvalidParameter, "geometry_core",
                "point is not on the unit sphere (|x| = " + std::to_string(n) + ")");
  }
  return SpherePoint((1.0 / n) * coords);
}

TangentVector TangentVector::make(const SpherePoint& base, const C2& vec) {
  const C2& x = base.coords();
  const double normal = re_dot(x, vec);
  const double scale = std::max(1.0, norm(vec));
  if (!std::isfinite(normal) || std::abs(normal) >= kRepairLimit * scale) {
    throw Error(ErrorKind::kInvalidParameter, "geometry_core",
                "vector is not tangent to the sphere (Re<x,v> = " + std::to_string(normal) + ")");
  }
  return TangentVector(base, vec - normal * x);
}

HopfCoords to_hopf(const SpherePoint& x) {
  HopfCoords h;
  // Same as arccos|z2| on the sphere, but well conditioned near both poles.
  h.theta = std::atan2(std::abs(x.z1()), std::abs(x.z2()));
  h.phi1 = wrap_angle(std::arg(x.z1()));
  h.phi2 = wrap_angle(std::arg(x.z2()));
  return h;
}

SpherePoint from_hopf(const HopfCoords& h) {
  return SpherePoint::make(std::polar(std::sin(h.theta), h.phi1),
                           std::polar(std::cos(h.theta), h.phi2));
}

MagneticParams MagneticParams::make(double epsilon) {
  if (!std::isfinite(epsilon) || std::abs(epsilon) >= 0.5) {
    throw Error(ErrorKind::kInvalidParameter, "geometry_core",
                "magnetic strength must satisfy |epsilon| < 1/2");
  }
  return MagneticParams{epsilon};
}

double contact_form(const TangentVector& t) { return 0.5 * t.reeb_component(); }

C2 zp_action(const C2& v, int p, int k) {
  if (p <= 0 || p % 2 == 0) {
    throw Error(ErrorKind::kInvalidParameter, "geometry_core",
                "lens order p must be odd and positive, got " + std::to_string(p));
  }
  const double angle = kTwoPi * static_cast<double>(k % p) / static_cast<double>(p);
  return {std::polar(1.0, angle) * v.z1, std::polar(1.0, -angle) * v.z2};
}

SpherePoint zp_action(const SpherePoint& x, int p, int k) {
  return SpherePoint::make(zp_action(x.coords(), p, k));
}

TangentVector zp_action(const TangentVector& t, int p, int k) {
  return TangentVector::make(zp_action(t.base(), p, k), zp_action(t.vec(), p, k));
}

Eigen::Vector3d hopf_project(const C2& x) {
  const cplx w = std::conj(x.z1) * x.z2;
  return {w.real(), w.imag(), 0.5 * (std::norm(x.z1) - std::norm(x.z2))};
}

Eigen::Vector3d hopf_project(const SpherePoint& x) { return hopf_project(x.coords()); }

double rotation_rate(const TangentVector& t, const MagneticParams& m) {
  const double c = t.speed();
  const double delta = t.reeb_component();
  const double eps = m.epsilon;
  const double disc = eps * eps + 4.0 * (c * c - eps * delta);
  return 0.5 * std::sqrt(std::max(disc, 0.0));
}

namespace {

// J with J x = w, J w = -x and J e1 = sigma e2 on an oriented basis of the
// complement, where (x, w, e1, e2) is positively oriented.
Eigen::Matrix4d assemble_J(const Eigen::Vector4d& x, const Eigen::Vector4d& w, int sigma) {
  std::array<Eigen::Vector4d, 2> basis;
  int found = 0;
  // Gram-Schmidt over the standard seeds, keeping the two best-conditioned.
  std::array<Eigen::Vector4d, 4> candidates;
  std::array<double, 4> sizes{};
  for (int s = 0; s < 4; ++s) {
    Eigen::Vector4d e = Eigen::Vector4d::Unit(s);
    e -= e.dot(x) * x;
    e -= e.dot(w) * w;
    candidates[s] = e;
    sizes[s] = e.norm();
  }
  std::array<int, 4> order{0, 1, 2, 3};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return sizes[a] > sizes[b]; });
  for (int idx : order) {
    Eigen::Vector4d e = candidates[idx];
    for (int f = 0; f < found; ++f) e -= e.dot(basis[f]) * basis[f];
    const double n = e.norm();
    if (n < 1e-6) continue;
    basis[found++] = e / n;
    if (found == 2) break;
  }
  Eigen::Matrix4d frame;
  frame << x, w, basis[0], basis[1];
  if (frame.determinant() < 0) std::swap(basis[0], basis[1]);
  const Eigen::Vector4d& e1 = basis[0];
  const Eigen::Vector4d& e2 = basis[1];
  return w * x.transpose() - x * w.transpose() +
         static_cast<double>(sigma) * (e2 * e1.transpose() - e1 * e2.transpose());
}

int pin_orientation() {
  const Eigen::Vector4d x(1, 0, 0, 0);
  const Eigen::Vector4d w(0, 0, 1, 0);
  const Eigen::Matrix4d i = i_matrix();
  for (int sigma : {1, -1}) {
    const Eigen::Matrix4d J = assemble_J(x, w, sigma);
    if ((J * i - i * J).norm() < kTolUnit) return sigma;
  }
  throw Error(ErrorKind::kGeometry, "geometry_core", "orientation self-test failed");
}

}  // namespace

int j_orientation_sign() {
  static const int sigma = pin_orientation();
  return sigma;
}

ComplexStructureJ construct_J(const TangentVector& t, const MagneticParams& m) {
  const double a = rotation_rate(t, m);
  if (a < 1e-14) {
    throw Error(ErrorKind::kDegenerateInput, "geometry_core",
                "rotation rate a vanishes (c^2 = eps delta with eps = 2c)");
  }
  const C2& x = t.base().coords();
  const C2 w = (1.0 / a) * (t.vec() - (0.5 * m.epsilon) * mul_i(x));
  const double wn = norm(w);
  if (std::abs(wn - 1.0) > 1e-8) {
    throw Error(ErrorKind::kGeometry, "geometry_core",
                "|v - (eps/2) i x| differs from a (ratio " + std::to_string(wn) + ")");
  }
  ComplexStructureJ J;
  J.matrix = assemble_J(to_real(x), to_real(w) / wn, j_orientation_sign());
  return J;
}

}  // namespace orbitlab
