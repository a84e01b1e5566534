// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace surfrec {

// Counter-based RNG. Every draw is a pure function of (seed, counters), so
// call sites can be evaluated in any order without changing results.
namespace rng {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

// Uniform in [0,1).
inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
  return static_cast<double>(hash(seed, a, b, c) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two decorrelated counters.
inline double normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                     std::uint64_t c = 0) {
  const double u1 = uniform(seed, a, b, 2 * c);
  const double u2 = uniform(seed, a, b, 2 * c + 1);
  const double r = std::sqrt(-2.0 * std::log(u1 > 0 ? u1 : 0x1.0p-53));
  return r * std::cos(2.0 * M_PI * u2);
}

// Uniform integer in [0, n).
inline std::uint64_t below(std::uint64_t seed, std::uint64_t n, std::uint64_t a,
                           std::uint64_t b = 0, std::uint64_t c = 0) {
  return hash(seed, a, b, c) % (n > 0 ? n : 1);
}

}  // namespace rng
}  // namespace surfrec
