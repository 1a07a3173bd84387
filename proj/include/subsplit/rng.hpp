#pragma once

#include <cstdint>
#include <random>

namespace subsplit {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent streams from a seed.
std::uint64_t mix64(std::uint64_t x);

// Stream keyed by (seed, a, b, c). Used for per-thread label sampling so that
// results depend only on the seed, the iteration and the thread index.
Rng derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

double uniform01(Rng& rng);
double standard_normal(Rng& rng);
// Gamma(shape, 1). shape > 0.
double gamma_variate(double shape, Rng& rng);
// log of a Gamma(shape, 1) draw; stays finite for tiny shapes where the
// linear-space draw underflows to zero.
double log_gamma_variate(double shape, Rng& rng);

}  // namespace subsplit
