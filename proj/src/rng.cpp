#include "subsplit/rng.hpp"

#include <array>
#include <cmath>

namespace subsplit {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (c + 0x8cb92ba72f3d8dd7ULL));
  std::array<std::uint32_t, 4> words{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                                     static_cast<std::uint32_t>(mix64(h)),
                                     static_cast<std::uint32_t>(mix64(h) >> 32)};
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

double uniform01(Rng& rng) {
  // 53 random bits in [0, 1).
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double gamma_variate(double shape, Rng& rng) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(rng);
}

double log_gamma_variate(double shape, Rng& rng) {
  if (shape >= 1.0) {
    return std::log(gamma_variate(shape, rng));
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  const double g = gamma_variate(shape + 1.0, rng);
  double u = uniform01(rng);
  while (u <= 0.0) {
    u = uniform01(rng);
  }
  return std::log(g) + std::log(u) / shape;
}

}  // namespace subsplit
