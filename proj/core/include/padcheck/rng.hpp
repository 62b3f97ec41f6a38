// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace padcheck {

/**
 * SplitMix64 generator (Steele, Lea & Flood 2014).
 *
 *   state += 0x9E3779B97F4A7C15
 *   z = state
 *   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
 *   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
 *   return z ^ (z >> 31)
 *
 * Uniform doubles take the top 53 bits: (next() >> 11) * 2^-53, in [0, 1).
 * Gaussians use Box-Muller on two uniforms, u1 = 1 - uniform() in (0, 1]:
 * sqrt(-2 ln u1) * cos(2 pi u2). Each Gaussian consumes exactly two words;
 * the sine branch is discarded so the stream layout stays trivial to port.
 */
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();
  /// Uniform integer in [lo, hi], inclusive. Uses modulo reduction.
  std::size_t uniform_int(std::size_t lo, std::size_t hi);
  double gaussian(double mean, double stddev);

  std::uint64_t state() const { return state_; }

private:
  std::uint64_t state_;
};

/// `n` Gaussian draws; std == 0 yields n copies of mean.
std::vector<double> rng_gaussian(Rng &rng, std::size_t n, double mean,
                                 double stddev);

/// One SplitMix64 finalization step, usable as a stateless mixer.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a of a string.
std::uint64_t fnv1a64(std::string_view text);

/// Deterministic sub-seed for a named stream under a parent seed.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view name);

} // namespace padcheck
