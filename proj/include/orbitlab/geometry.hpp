#pragma once

// Geometry of the unit 3-sphere S^3 in C^2 = R^4.
//
// Coordinates: z1 = x0 + i x1, z2 = x2 + i x3.  The complex structure i acts
// diagonally, j = diag(i, -i).  The Hopf map uses i and lands on the sphere of
// radius 1/2; the Reeb circles (e^{it}, 0) and (0, e^{it}) project to the
// poles N = (0, 0, 1/2) and S = (0, 0, -1/2).

#include <array>
#include <complex>

#include <Eigen/Core>

#include "orbitlab/error.hpp"

namespace orbitlab {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Tolerances for algebraic identities on exact inputs and on composed
// operations respectively.
inline constexpr double kTolUnit = 1e-12;
inline constexpr double kTolAlg = 1e-10;
// Inputs further than this from the constraint are rejected, not repaired.
inline constexpr double kRepairLimit = 1e-6;

struct C2 {
  cplx z1{0.0, 0.0};
  cplx z2{0.0, 0.0};

  C2& operator+=(const C2& o) { z1 += o.z1; z2 += o.z2; return *this; }
  C2& operator-=(const C2& o) { z1 -= o.z1; z2 -= o.z2; return *this; }
  C2& operator*=(cplx s) { z1 *= s; z2 *= s; return *this; }
};

inline C2 operator+(C2 a, const C2& b) { return a += b; }
inline C2 operator-(C2 a, const C2& b) { return a -= b; }
inline C2 operator-(const C2& a) { return {-a.z1, -a.z2}; }
inline C2 operator*(cplx s, C2 a) { return a *= s; }
inline C2 operator*(double s, C2 a) { return a *= cplx(s, 0.0); }

// Hermitian product <a, b> = conj(a1) b1 + conj(a2) b2.
inline cplx herm(const C2& a, const C2& b) {
  return std::conj(a.z1) * b.z1 + std::conj(a.z2) * b.z2;
}
// The round metric g(a, b) = Re<a, b>.
inline double re_dot(const C2& a, const C2& b) { return herm(a, b).real(); }
inline double norm2(const C2& a) { return std::norm(a.z1) + std::norm(a.z2); }
inline double norm(const C2& a) { return std::sqrt(norm2(a)); }

inline C2 mul_i(const C2& a) { return {cplx(0, 1) * a.z1, cplx(0, 1) * a.z2}; }
inline C2 mul_j(const C2& a) { return {cplx(0, 1) * a.z1, cplx(0, -1) * a.z2}; }

Eigen::Vector4d to_real(const C2& a);
C2 from_real(const Eigen::Vector4d& v);

// Real 4x4 matrix of multiplication by i.
Eigen::Matrix4d i_matrix();
Eigen::Matrix4d j_matrix();

class SpherePoint {
 public:
  // Renormalizes inputs with | |x| - 1 | < 1e-6, rejects anything worse.
  static SpherePoint make(const C2& coords);
  static SpherePoint make(cplx z1, cplx z2) { return make(C2{z1, z2}); }

  const C2& coords() const { return coords_; }
  cplx z1() const { return coords_.z1; }
  cplx z2() const { return coords_.z2; }

 private:
  explicit SpherePoint(const C2& c) : coords_(c) {}
  C2 coords_;
};

class TangentVector {
 public:
  // Removes a normal component below 1e-6 (relative to max(|v|, 1)); rejects
  // larger violations of tangency.
  static TangentVector make(const SpherePoint& base, const C2& vec);

  const SpherePoint& base() const { return base_; }
  const C2& vec() const { return vec_; }
  double speed() const { return norm(vec_); }
  // Re<ix, v>: the Reeb component of the velocity.
  double reeb_component() const { return re_dot(mul_i(base_.coords()), vec_); }

 private:
  TangentVector(const SpherePoint& b, const C2& v) : base_(b), vec_(v) {}
  SpherePoint base_;
  C2 vec_;
};

// z1 = e^{i phi1} sin(theta), z2 = e^{i phi2} cos(theta).
struct HopfCoords {
  double theta = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
};

HopfCoords to_hopf(const SpherePoint& x);
SpherePoint from_hopf(const HopfCoords& h);

// Magnetic strength of the form epsilon * d(alpha).  Physical runs use
// 0 <= epsilon < 1/2; negative values describe the time-reversed system and
// are accepted so reversibility can be exercised.
struct MagneticParams {
  double epsilon = 0.0;

  static MagneticParams make(double epsilon);
  MagneticParams reversed() const { return MagneticParams{-epsilon}; }
};

struct ComplexStructureJ {
  Eigen::Matrix4d matrix = Eigen::Matrix4d::Zero();

  C2 apply(const C2& x) const { return from_real(matrix * to_real(x)); }
};

// alpha_x(v) = 1/2 Re<ix, v>.
double contact_form(const TangentVector& t);

// x -> exp(2 pi k j / p) x, p odd and positive.
SpherePoint zp_action(const SpherePoint& x, int p, int k);
C2 zp_action(const C2& v, int p, int k);
TangentVector zp_action(const TangentVector& t, int p, int k);

// Hopf projection onto S^2(1/2).
Eigen::Vector3d hopf_project(const SpherePoint& x);
Eigen::Vector3d hopf_project(const C2& x);

// a = 1/2 sqrt(eps^2 + 4(c^2 - eps delta)).
double rotation_rate(const TangentVector& t, const MagneticParams& m);

// The orthogonal complex structure commuting with i with J x = (v - (eps/2) i x) / a.
ComplexStructureJ construct_J(const TangentVector& t, const MagneticParams& m);

// Orientation sign of J on the complement of span{x, Jx}; pinned by a
// self-test on first use.
int j_orientation_sign();

}  // namespace orbitlab
