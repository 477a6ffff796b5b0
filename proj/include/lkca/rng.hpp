// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "lkca/tensor.hpp"

namespace lkca {

/// Seeded generator with a platform-independent stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fully fixed by
/// the C++ standard. The distribution transforms are implemented here rather
/// than taken from <random>, since the library distributions differ between
/// standard library vendors:
///   uniform  = (bits >> 11) * 2^-53, in [0, 1)
///   normal   = Box-Muller, cosine branch only: sqrt(-2 ln(1 - u1)) cos(2 pi u2)
///   trunc    = normal resampled until |z| <= 2
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  double uniform();
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  /// Standard normal truncated to [-2, 2].
  double truncated_normal();

  /// Independent generator whose seed is derived from this stream.
  SeededRng fork() { return SeededRng(next_u64()); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

template <Real T>
Tensor<T> rand_normal(SeededRng& rng, Shape shape, T mean, T stddev);

/// Normal(mean, stddev) truncated at two standard deviations.
template <Real T>
Tensor<T> rand_trunc_normal(SeededRng& rng, Shape shape, T mean, T stddev);

template <Real T>
Tensor<T> rand_uniform(SeededRng& rng, Shape shape, T lo, T hi);

}  // namespace lkca
