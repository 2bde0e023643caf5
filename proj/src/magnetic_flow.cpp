#include "orbitlab/magnetic_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace orbitlab {

namespace {

constexpr double kNegligibleAmplitude = 1e-10;

cplx phase(double angle) { return std::polar(1.0, angle); }

double wrap_pi(double a) {
  double w = std::remainder(a, kTwoPi);
  return w;
}

}  // namespace

C2 ClosedFormOrbit::position(double s) const {
  return phase(theta_plus * s) * p_plus + phase(theta_minus * s) * p_minus;
}

C2 ClosedFormOrbit::velocity(double s) const {
  return cplx(0, theta_plus) * phase(theta_plus * s) * p_plus +
         cplx(0, theta_minus) * phase(theta_minus * s) * p_minus;
}

C2 ClosedFormOrbit::acceleration(double s) const {
  return (-theta_plus * theta_plus) * (phase(theta_plus * s) * p_plus) +
         (-theta_minus * theta_minus) * (phase(theta_minus * s) * p_minus);
}

ClosedFormOrbit solve_closed_form(const TangentVector& t, const MagneticParams& m) {
  ClosedFormOrbit o;
  o.c = t.speed();
  o.delta = t.reeb_component();
  o.epsilon = m.epsilon;
  o.a = rotation_rate(t, m);
  if (o.a < 1e-14) {
    throw Error(ErrorKind::kDegenerateInput, "magnetic_flow",
                "theta_plus == theta_minus (a = 0); closed form undefined");
  }
  o.theta_plus = 0.5 * m.epsilon + o.a;
  o.theta_minus = 0.5 * m.epsilon - o.a;
  const C2& x = t.base().coords();
  const C2 iv = mul_i(t.vec());
  const double gap = o.theta_plus - o.theta_minus;
  o.p_plus = (-1.0 / gap) * (o.theta_minus * x + iv);
  o.p_minus = (1.0 / gap) * (o.theta_plus * x + iv);
  return o;
}

TangentVector evaluate(const ClosedFormOrbit& orbit, double s) {
  return TangentVector::make(SpherePoint::make(orbit.position(s)), orbit.velocity(s));
}

double ode_residual(const ClosedFormOrbit& orbit, double s) {
  const C2 g = orbit.position(s);
  const C2 dg = orbit.velocity(s);
  const C2 ddg = orbit.acceleration(s);
  const double k = orbit.c * orbit.c - orbit.epsilon * orbit.delta;
  return norm(ddg - cplx(0, orbit.epsilon) * dg + k * g);
}

SpherePoint evaluate_quaternionic(const TangentVector& t, const MagneticParams& m, double s) {
  const ComplexStructureJ J = construct_J(t, m);
  const double a = rotation_rate(t, m);
  const Eigen::Matrix4d rot =
      std::cos(a * s) * Eigen::Matrix4d::Identity() + std::sin(a * s) * J.matrix;
  const C2 y = from_real(rot * to_real(t.base().coords()));
  return SpherePoint::make(phase(0.5 * m.epsilon * s) * y);
}

std::optional<Rational> rational_approximation(double x, long long q_max, double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  // Convergents h_n / k_n of the continued fraction of x.
  long long h_prev = 1, h = static_cast<long long>(std::floor(x));
  long long k_prev = 0, k = 1;
  double rem = x - std::floor(x);
  for (int iter = 0; iter < 64; ++iter) {
    const double err = std::abs(x - static_cast<double>(h) / static_cast<double>(k));
    if (err < tol / (static_cast<double>(k) * static_cast<double>(k))) return Rational{h, k};
    if (rem < 1e-300) return std::nullopt;
    const double inv = 1.0 / rem;
    if (inv > 1e15) return std::nullopt;
    const long long ai = static_cast<long long>(std::floor(inv));
    rem = inv - std::floor(inv);
    const long long h_next = ai * h + h_prev;
    const long long k_next = ai * k + k_prev;
    if (k_next > q_max) return std::nullopt;
    h_prev = h; h = h_next;
    k_prev = k; k = k_next;
  }
  return std::nullopt;
}

std::optional<double> minimal_period(const ClosedFormOrbit& orbit) {
  const bool has_plus = norm(orbit.p_plus) > kNegligibleAmplitude;
  const bool has_minus = norm(orbit.p_minus) > kNegligibleAmplitude;
  const double wp = std::abs(orbit.theta_plus);
  const double wm = std::abs(orbit.theta_minus);
  if (has_plus && !has_minus) return wp > 0 ? std::optional(kTwoPi / wp) : std::nullopt;
  if (!has_plus && has_minus) return wm > 0 ? std::optional(kTwoPi / wm) : std::nullopt;
  if (!has_plus && !has_minus) return std::nullopt;
  if (wm == 0.0 || wm < 1e-15 * wp) return kTwoPi / wp;
  if (wp == 0.0 || wp < 1e-15 * wm) return kTwoPi / wm;
  const auto r = rational_approximation(orbit.theta_plus / orbit.theta_minus);
  if (!r) return std::nullopt;
  return kTwoPi * static_cast<double>(std::llabs(r->num)) / wp;
}

PeriodBound period_lower_bound(double c, const MagneticParams& m) {
  if (!(c > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "magnetic_flow", "period bound needs c > 0");
  }
  const double eps = std::abs(m.epsilon);
  if (c >= eps) return {kTwoPi / c, PeriodBranch::kFast};
  return {kTwoPi / eps, PeriodBranch::kSlow};
}

double hopf_radius(double c, double delta, const MagneticParams& m) {
  if (std::abs(delta) > c * (1.0 + 1e-12) + 1e-15) {
    throw Error(ErrorKind::kInvalidParameter, "magnetic_flow", "hopf radius needs |delta| <= c");
  }
  const double eps = m.epsilon;
  const double denom = eps * eps + 4.0 * (c * c - eps * delta);
  if (!(denom > 0.0)) {
    throw Error(ErrorKind::kDegenerateInput, "magnetic_flow", "hopf radius denominator vanishes");
  }
  const double num = std::max((c - delta) * (c + delta), 0.0);
  return std::sqrt(num / denom);
}

C2 act(const Eigen::Matrix2cd& g, const C2& v) {
  return {g(0, 0) * v.z1 + g(0, 1) * v.z2, g(1, 0) * v.z1 + g(1, 1) * v.z2};
}

Eigen::Vector3d rotation_axis(const ClosedFormOrbit& orbit) {
  // J p+ = i p+, J p- = -i p-, so A = J / i = P+ - P-.
  const bool use_plus = norm2(orbit.p_plus) >= norm2(orbit.p_minus);
  const C2 q = use_plus ? orbit.p_plus : orbit.p_minus;
  const double sign = use_plus ? 1.0 : -1.0;
  const double n2 = norm2(q);
  // A = sign (2 q q^dagger / |q|^2 - I)
  const cplx a00 = sign * (2.0 * std::norm(q.z1) / n2 - 1.0);
  const cplx a10 = sign * 2.0 * q.z2 * std::conj(q.z1) / n2;
  return {a10.real(), a10.imag(), a00.real()};
}

namespace {

struct Congruence {
  double omega;  // omega * T == target (mod 2 pi)
  double target;
};

// Adds the constraints imposed by the amplitude q with frequency omega.
// Returns false when q is not an eigenvector of g (no closure possible).
bool add_constraint(const C2& q, double omega, const Eigen::Matrix2cd& g,
                    std::vector<Congruence>& out) {
  const double qn = norm(q);
  if (qn <= kNegligibleAmplitude) return true;
  const C2 gq = act(g, q);
  const cplx lambda = herm(q, gq) / (qn * qn);
  if (norm(gq - lambda * q) > 1e-9 * qn || std::abs(std::abs(lambda) - 1.0) > 1e-9) return false;
  out.push_back({omega, std::arg(lambda)});
  return true;
}

}  // namespace

std::optional<double> first_return_time(const ClosedFormOrbit& orbit, const Eigen::Matrix2cd& g,
                                        double t_min, double t_max) {
  std::vector<Congruence> cons;
  if (!add_constraint(orbit.p_plus, orbit.theta_plus, g, cons)) return std::nullopt;
  if (!add_constraint(orbit.p_minus, orbit.theta_minus, g, cons)) return std::nullopt;
  if (cons.empty()) return std::nullopt;

  std::vector<Congruence> moving;
  for (const auto& c : cons) {
    if (std::abs(c.omega) < 1e-14) {
      if (std::abs(wrap_pi(c.target)) > 1e-9) return std::nullopt;
    } else {
      moving.push_back(c);
    }
  }
  if (moving.empty()) return std::nullopt;
  std::sort(moving.begin(), moving.end(),
            [](const Congruence& a, const Congruence& b) { return std::abs(a.omega) < std::abs(b.omega); });
  const Congruence lead = moving.front();
  const double w = std::abs(lead.omega);
  const double base = (lead.omega > 0 ? lead.target : -lead.target);
  // Candidates T = (base + 2 pi n) / w, n integer, within (t_min, t_max].
  const long long n_lo = static_cast<long long>(std::floor((w * t_min - base) / kTwoPi));
  const long long n_hi = static_cast<long long>(std::ceil((w * t_max - base) / kTwoPi));
  for (long long n = n_lo; n <= n_hi; ++n) {
    const double T = (base + kTwoPi * static_cast<double>(n)) / w;
    if (T <= t_min + 1e-12 * std::max(1.0, t_min) || T > t_max) continue;
    bool ok = true;
    for (std::size_t j = 1; j < moving.size() && ok; ++j) {
      const double mismatch = wrap_pi(moving[j].omega * T - moving[j].target);
      ok = std::abs(mismatch) < 1e-8 * std::max(1.0, std::abs(moving[j].omega * T));
    }
    if (ok) return T;
  }
  return std::nullopt;
}

double closure_defect(const ClosedFormOrbit& orbit, const Eigen::Matrix2cd& g, double T) {
  const double scale = orbit.c > 0 ? 1.0 / orbit.c : 1.0;
  const C2 dx = orbit.position(T) - act(g, orbit.position(0.0));
  const C2 dv = scale * (orbit.velocity(T) - act(g, orbit.velocity(0.0)));
  return std::sqrt(norm2(dx) + norm2(dv));
}

}  // namespace orbitlab
