#pragma once

// Admissible Hamiltonians on the unit disc bundle of L(p;1).
//
// The energy E + V of the magnetic system is reparametrised by h_eps so that
// every periodic orbit has period about one, then composed with a slowly
// increasing f so that no orbit is faster than one.  The oscillation of
// f o h_eps o (E + V) is a lower bound for the Hofer-Zehnder capacity as long
// as no fast orbit exists; the second half is checked by scanning.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "orbitlab/lens_space.hpp"

namespace orbitlab {

inline constexpr double kReferenceUpper = kTwoPi;

// h(y) = 2 pi (y / sqrt(eps) + sqrt(eps) / 2) for y <= eps / 2 and
// 2 pi sqrt(2 y) beyond.  eps = 0 is accepted as the limit 2 pi sqrt(2 y).
double h_eps(double y, double epsilon);
double h_eps_derivative(double y, double epsilon);
// Inverse of h_eps on [h(0), oo).
double h_eps_inverse(double u, double epsilon);

// C-infinity variant: the max in h' = 2 pi / sqrt(2 max(y, eps / 2)) is
// smoothed over a window of the given width around eps / 2, and the result is
// integrated from h(0).
double h_eps_mollified(double y, double epsilon, double width);
double h_eps_mollified_derivative(double y, double epsilon, double width);

// Samples (y, h(y), h'(y)) at n + 1 equally spaced y in [0, y_max].
struct HepsSample {
  double y = 0.0;
  double h = 0.0;
  double dh = 0.0;
};
std::vector<HepsSample> heps_curve(double epsilon, double y_max, int n);

// Period under H = h(E + V) of an orbit with period T_base at energy y.
double reparam_period(double T_base, double y, double epsilon);

// f on [lo, hi]: zero on [lo, lo + margin], constant on [hi - margin, hi], and
// f' = slope * B with B a smooth plateau function that ramps up on
// [lo + margin, lo + 2 margin] and down on [hi - 2 margin, hi - margin].
struct AdmissibilityProfile {
  double epsilon = 0.0;
  double margin = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double slope = 0.0;  // 1 - 3 margin
  double oscillation = 0.0;

  double value(double u) const;
  double derivative(double u) const;
};

// Domain [h(0), 2 pi (1 - 2 eps)].  Throws kInvalidParameter when the
// plateaus and ramps do not fit or margin is outside (0, 1/3).
AdmissibilityProfile build_admissible(double epsilon, double margin);

struct CapacityOptions {
  std::optional<double> margin;  // default eps, or 0.01 at eps = 0
  int speed_levels = 8;
  double bounce_share = 0.25;  // part of the seed budget spent on bounce orbits
  double horizon_factor = 1.5;
  std::uint64_t seed = 1;
  Execution exec = Execution::kParallel;
};

struct CapacityWitness {
  CensusRecord record;
  double energy = 0.0;
  double reparam_period = 0.0;  // T / h'
  double final_period = 0.0;    // T / (h' f')
};

struct CapacityEstimate {
  double epsilon = 0.0;
  int p = 1;
  double oscillation = 0.0;
  double min_period_found = std::numeric_limits<double>::infinity();
  double reference_upper = kReferenceUpper;
  bool pass = false;

  std::uint64_t budget = 0;  // seeds requested
  std::uint64_t seeds_used = 0;
  std::uint64_t orbits_examined = 0;
  double margin = 0.0;
  std::vector<double> speeds;
  // Smallest T / h' among the orbits found and C = (1 - that) / eps.
  double min_reparam_period = std::numeric_limits<double>::infinity();
  double fitted_constant = 0.0;
  std::optional<CapacityWitness> witness;  // orbit realising min_period_found
};

// Builds f o h o (E + V), scans closed magnetic geodesics away from the caps,
// Z_p-symmetric bounce orbits on the table with caps of size eps and the
// barrier tori of V, and records the shortest period under the composed
// clock.  Only orbits in the energy window where f' > 0 count.  The result is
// certified over the given seed budget only.
CapacityEstimate certify_lower_bound(const LensSpace& L, double epsilon, std::uint64_t search_budget,
                                     const CapacityOptions& options = {});

// Intercept at eps = 0 of the least-squares line through (eps_i, osc_i).
double linear_extrapolation(const std::vector<double>& eps, const std::vector<double>& values);

}  // namespace orbitlab
