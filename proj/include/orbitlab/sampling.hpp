#pragma once

// Deterministic random inputs.  Every sample index gets its own generator
// seeded from (seed, index), so results do not depend on how the indices are
// distributed over threads.

#include <cstdint>
#include <random>

#include "orbitlab/geometry.hpp"

namespace orbitlab {

std::uint64_t splitmix64(std::uint64_t& state);

// Seed for the generator of sample `index` in a run seeded with `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t index) : engine_(stream_seed(seed, index)) {}

  // Uniform on [lo, hi), built from the raw 64-bit output so the values are
  // identical across standard library implementations.
  double uniform(double lo = 0.0, double hi = 1.0);
  double normal();
  int integer(int lo, int hi);  // inclusive

 private:
  std::mt19937_64 engine_;
};

SpherePoint random_point(Rng& rng);
// Tangent vector of the given speed, uniformly distributed in direction.
TangentVector random_tangent(Rng& rng, const SpherePoint& base, double speed);
TangentVector random_tangent(Rng& rng, double speed);

// The tangent vector at x with speed c and Reeb component delta whose
// horizontal part points along cos(angle) x_perp + sin(angle) i x_perp,
// x_perp = (-conj z2, conj z1).  Requires |delta| <= c.
TangentVector tangent_with_invariants(const SpherePoint& x, double c, double delta, double angle);

}  // namespace orbitlab
