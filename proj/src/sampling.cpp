#include "orbitlab/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace orbitlab {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed;
  const std::uint64_t base = splitmix64(state);
  state = base ^ (index * 0xD1B54A32D192ED03ull);
  return splitmix64(state);
}

double Rng::uniform(double lo, double hi) {
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double Rng::normal() {
  // Box-Muller; one value per call keeps the stream layout simple.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

int Rng::integer(int lo, int hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(engine_() % span);
}

SpherePoint random_point(Rng& rng) {
  for (;;) {
    const C2 g{cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal())};
    const double n = norm(g);
    if (n > 1e-3) return SpherePoint::make((1.0 / n) * g);
  }
}

TangentVector random_tangent(Rng& rng, const SpherePoint& base, double speed) {
  const C2& x = base.coords();
  for (;;) {
    C2 g{cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal())};
    g = g - re_dot(x, g) * x;
    const double n = norm(g);
    if (n > 1e-3) return TangentVector::make(base, (speed / n) * g);
  }
}

TangentVector random_tangent(Rng& rng, double speed) {
  const SpherePoint x = random_point(rng);
  return random_tangent(rng, x, speed);
}

TangentVector tangent_with_invariants(const SpherePoint& x, double c, double delta, double angle) {
  if (!(c >= 0.0) || std::abs(delta) > c * (1.0 + 1e-12)) {
    throw Error(ErrorKind::kInvalidParameter, "sampling", "need |delta| <= c");
  }
  const C2 xp{-std::conj(x.z2()), std::conj(x.z1())};
  const C2 h = std::polar(1.0, angle) * xp;
  const double horizontal = std::sqrt(std::max(c * c - delta * delta, 0.0));
  return TangentVector::make(x, delta * mul_i(x.coords()) + horizontal * h);
}

}  // namespace orbitlab
