// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace forge {

// Deterministic random source. std::mt19937_64 is bit-exact across platforms;
// the distribution mappings below are ours because the standard library ones
// are implementation-defined and would break same-seed reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive, rejection-sampled to stay unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit span
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % range);
  }

  /// Standard normal via Box-Muller. Two engine draws per call, no cached spare.
  double normal();

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a, used to fold string ids into derived seeds.
std::uint64_t fnv1a64(std::string_view s);

/// Finalizer from splitmix64; decorrelates nearby integer ids.
std::uint64_t mix64(std::uint64_t x);

/// Per-sample seed derivation: global seed xor a hash of the sample identity.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view id);
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t n);

}  // namespace forge
