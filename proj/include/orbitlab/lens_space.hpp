#pragma once

// Dynamics on L(p;1) = S^3 / Z_p, where the generator acts by exp(2 pi j / p)
// with j = diag(i, -i).  Everything is computed on S^3 lifts: an orbit is
// periodic downstairs with period T when state(T) = g^k state(0) for some k.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "orbitlab/billiards.hpp"
#include "orbitlab/magnetic_flow.hpp"
#include "orbitlab/reduced_system.hpp"

namespace orbitlab {

enum class Execution { kSerial, kParallel };

struct LensSpace {
  int p = 1;
  static LensSpace make(int p);  // p odd, >= 1
  Eigen::Matrix2cd generator_power(int k) const;
};

// Smallest s > 0 with cos(s) x + sin(s) v in the Z_p orbit of x; |v| = 1.
double geodesic_closing_time(const TangentVector& t, const LensSpace& L);

inline constexpr int kInvarianceGrid = 128;

// True when g^k gamma(s) = gamma(s + T/p) on a 128-point grid of [0, T) for
// some k in 1..p-1 (within kTolAlg).  p = 1 is always invariant.
bool is_zp_invariant(const std::function<C2(double)>& position, const LensSpace& L, double T);
bool is_zp_invariant(const ClosedFormOrbit& orbit, const LensSpace& L, double T);
bool is_zp_invariant(const BounceOrbit& orbit, const LensSpace& L, double T);

enum class OrbitKind { kGeodesic, kMagnetic, kBounce, kTrapped };
std::string to_string(OrbitKind kind);

struct CensusRecord {
  double epsilon = 0.0;
  int p = 1;
  double c = 0.0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  OrbitKind kind = OrbitKind::kMagnetic;
  double period = 0.0;  // on L(p;1)
  int shift = 0;        // k with state(period) = g^k state(0)
  bool zp_invariant = false;
  double defect = 0.0;
  double bound = 0.0;  // lower bound min(2 pi / c, 2 pi / eps) at speed c
  bool below_bound = false;
  bool reeb_axis = false;          // z1 z2 = 0 along the orbit
  double identity_residual = 0.0;  // |exp(i eps T) z1 z2 - z1 z2|
  // Degree of exp(i (phi1 + phi2) / 2) over one S^3 period; trapped orbits only.
  double reeb_winding = 0.0;
  int bounces = 0;
  C2 x0;
  C2 v0;
};

// Sampling of initial conditions.  Base points come from a Sobol sequence in
// (theta, phi1, delta / c, direction angle); collar_fraction of them are
// placed within sqrt(eps) (at least 0.05) of the walls.  Each base point is
// launched with every speed, along the sampled direction and, with
// special_directions, along +-ix and +-jx.  Without caps (wall 0) the Hopf
// link itself is added as a stratum.
struct ScanGrid {
  std::size_t samples = 256;
  std::vector<double> speeds{1.0};
  double wall = 0.0;
  double collar_fraction = 0.5;
  bool special_directions = true;
  double horizon_factor = 2.0;  // periods up to this multiple of the bound are reported
  std::uint64_t seed = 1;
};

struct ScanSeed {
  std::uint64_t index = 0;
  TangentVector state;
};

std::vector<ScanSeed> scan_seeds(const ScanGrid& grid, double epsilon);

// Period lower bound for a record at speed c.
double lens_period_bound(double c, const MagneticParams& m);

// Period on L(p;1) of a closed-form orbit, with the shift realising it.
struct LensPeriod {
  double period = 0.0;
  int shift = 0;
};
std::optional<LensPeriod> lens_period(const ClosedFormOrbit& orbit, const LensSpace& L, double t_max);

// Magnetic geodesics that close on L(p;1) within horizon_factor times the
// bound.  With a wall, orbits entering a cap are skipped.  Records are sorted
// by (index, direction).
std::vector<CensusRecord> lens_short_orbit_scan(const LensSpace& L, const MagneticParams& m,
                                                const ScanGrid& grid,
                                                Execution exec = Execution::kParallel);

// Records below the bound that are not on the Hopf link.
std::vector<CensusRecord> bound_violations(const std::vector<CensusRecord>& records);

// Bounce orbits on the table with caps of co-latitude `wall` that close up to
// a nontrivial Z_p shift within horizon_factor times the bound, refined by
// shooting.  Trapped orbits carry their Reeb winding.
std::vector<CensusRecord> zp_symmetric_bounce_scan(const LensSpace& L, const MagneticParams& m,
                                                   double wall, const ScanGrid& grid,
                                                   Execution exec = Execution::kParallel);

// Orbits of E + V riding the barrier on a Clifford torus inside a collar,
// with phi1' = -phi2' = +-c so that they follow the j-fibres.  The Lorentz
// force is balanced by V'; each speed and each pole gives one torus, located
// by bracketing.  The defect is the width of the final bracket.  These records
// are not covered by revalidate().
std::vector<CensusRecord> trapped_torus_scan(const LensSpace& L, const MagneticParams& m,
                                             const PotentialSpec& V, const std::vector<double>& speeds);

// Recomputes a record from its stored initial state; true when the period,
// shift and invariance flag reproduce.
bool revalidate(const CensusRecord& record, double wall = 0.0);

}  // namespace orbitlab
