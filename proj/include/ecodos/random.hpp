#pragma once

// Sampling primitives over std::mt19937_64.
//
// The engine's bit stream is fixed by the standard; the distribution
// transforms below are spelled out here instead of using <random>'s
// distributions, whose algorithms vary between standard libraries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>

namespace ecodos {

using Rng = std::mt19937_64;

/// Uniform double on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Exp(1) by inversion.
inline double exponential(Rng& rng) { return -std::log1p(-uniform01(rng)); }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Index drawn with probability proportional to `weights`.
inline std::size_t categorical(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::domain_error("categorical: weights must have positive sum");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

namespace detail {

inline std::uint64_t poisson_inversion(Rng& rng, double mean) {
  const double u = uniform01(rng);
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  // cdf saturates below 1 in floating point; the cap ends the walk there
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// Hörmann's PTRS: transformed rejection with squeeze, exact for mean >= 10.
inline std::uint64_t poisson_ptrs(Rng& rng, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform01(rng) - 0.5;
    const double v = uniform01(rng);
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace detail

/// Poisson(mean) count. Inversion below mean 10, PTRS above.
inline std::uint64_t poisson(Rng& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::domain_error("poisson: mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  return mean < 10.0 ? detail::poisson_inversion(rng, mean) : detail::poisson_ptrs(rng, mean);
}

}  // namespace ecodos
