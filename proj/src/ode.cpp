#include "orbitlab/ode.hpp"

#include <algorithm>
#include <cmath>

namespace orbitlab {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Vec6 Dopri5::attempt(double t, const Vec6& y, const Vec6& k1, double h, Vec6& err,
                     Vec6& k7) const {
  Vec6 k2, k3, k4, k5, k6;
  rhs_(t + c2 * h, y + h * (a21 * k1), k2);
  rhs_(t + c3 * h, y + h * (a31 * k1 + a32 * k2), k3);
  rhs_(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
  rhs_(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
  rhs_(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
  const Vec6 y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  rhs_(t + h, y1, k7);
  err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  return y1;
}

Vec6 Dopri5::step(double t, const Vec6& y, double h) const {
  Vec6 k1, err, k7;
  rhs_(t, y, k1);
  return attempt(t, y, k1, h, err, k7);
}

OdeStatus Dopri5::integrate(double t0, const Vec6& y0, double t_end,
                            const Observer& observer) const {
  double t = t0;
  Vec6 y = y0;
  Vec6 k1;
  rhs_(t, y, k1);
  double h = std::min(opt_.h_init, t_end - t0);
  while (t < t_end) {
    if (t + h > t_end) h = t_end - t;
    Vec6 err, k7;
    const Vec6 y1 = attempt(t, y, k1, h, err, k7);
    double err_norm = 0.0;
    for (int i = 0; i < 6; ++i) {
      const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err_norm = std::max(err_norm, std::abs(err[i]) / sc);
    }
    if (!std::isfinite(err_norm) || !y1.allFinite() || !k7.allFinite()) err_norm = 1e10;
    if (err_norm <= 1.0) {
      const double t1 = t + h;
      const bool go_on = observer ? observer(t, y, t1, y1) : true;
      t = t1;
      y = y1;
      k1 = k7;
      if (!go_on) return OdeStatus::kStopped;
      const double fac = err_norm > 0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
      h = std::min(opt_.h_max, h * std::clamp(fac, 0.2, 5.0));
    } else {
      h *= std::max(0.1, 0.9 * std::pow(err_norm, -0.2));
      if (h < opt_.h_min) return OdeStatus::kStepUnderflow;
    }
  }
  return OdeStatus::kFinished;
}

}  // namespace orbitlab
