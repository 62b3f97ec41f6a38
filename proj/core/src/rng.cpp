// SPDX-License-Identifier: Apache-2.0

#include "padcheck/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace padcheck {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t out = mix64(state_);
  state_ += 0x9E3779B97F4A7C15ull;
  return out;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t Rng::uniform_int(std::size_t lo, std::size_t hi) {
  if (hi < lo)
    throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0)
    return static_cast<std::size_t>(next_u64());
  return lo + static_cast<std::size_t>(next_u64() % span);
}

double Rng::gaussian(double mean, double stddev) {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double z =
      std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + stddev * z;
}

std::vector<double> rng_gaussian(Rng &rng, std::size_t n, double mean,
                                 double stddev) {
  if (!(stddev >= 0.0))
    throw std::invalid_argument("rng_gaussian: stddev must be >= 0");
  std::vector<double> out(n);
  for (auto &v : out)
    v = stddev == 0.0 ? mean : rng.gaussian(mean, stddev);
  return out;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view name) {
  return mix64(mix64(parent) ^ fnv1a64(name));
}

} // namespace padcheck
