#pragma once

#include <cstdint>
#include <random>

#include "rissec/numerics.hpp"

namespace rissec {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream); distinct streams never share state.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eedu};
  return Rng(seq);
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline cdouble complex_normal(Rng &rng, double variance = 1.0) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline double uniform(Rng &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace rissec
