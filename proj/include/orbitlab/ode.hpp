#pragma once

// Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.

#include <functional>

#include <Eigen/Core>

namespace orbitlab {

using Vec6 = Eigen::Matrix<double, 6, 1>;

struct OdeOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_min = 1e-12;  // below this the integration fails instead of clamping
  double h_max = 0.25;
};

enum class OdeStatus { kFinished, kStopped, kStepUnderflow };

class Dopri5 {
 public:
  using Rhs = std::function<void(double t, const Vec6& y, Vec6& dy)>;
  // Called after each accepted step [t0, t1]; return false to stop.
  using Observer = std::function<bool(double t0, const Vec6& y0, double t1, const Vec6& y1)>;

  Dopri5(Rhs rhs, OdeOptions options) : rhs_(std::move(rhs)), opt_(options) {}

  // One explicit step of size h without error control.  Used to resolve
  // events inside an accepted step at the same local accuracy.
  Vec6 step(double t, const Vec6& y, double h) const;

  OdeStatus integrate(double t0, const Vec6& y0, double t_end, const Observer& observer) const;

  const OdeOptions& options() const { return opt_; }

 private:
  Vec6 attempt(double t, const Vec6& y, const Vec6& k1, double h, Vec6& err, Vec6& k7) const;

  Rhs rhs_;
  OdeOptions opt_;
};

}  // namespace orbitlab
