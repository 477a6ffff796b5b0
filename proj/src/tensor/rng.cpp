// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include "lkca/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lkca {

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return r % n;
}

double SeededRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double SeededRng::truncated_normal() {
  for (;;) {
    const double z = normal();
    if (std::abs(z) <= 2.0) return z;
  }
}

template <Real T>
Tensor<T> rand_normal(SeededRng& rng, Shape shape, T mean, T stddev) {
  if (stddev < T(0)) throw std::invalid_argument("rand_normal: negative stddev");
  Tensor<T> out(std::move(shape));
  for (T& v : out.data()) v = mean + stddev * static_cast<T>(rng.normal());
  return out;
}

template <Real T>
Tensor<T> rand_trunc_normal(SeededRng& rng, Shape shape, T mean, T stddev) {
  if (stddev < T(0)) throw std::invalid_argument("rand_trunc_normal: negative stddev");
  Tensor<T> out(std::move(shape));
  for (T& v : out.data()) v = mean + stddev * static_cast<T>(rng.truncated_normal());
  return out;
}

template <Real T>
Tensor<T> rand_uniform(SeededRng& rng, Shape shape, T lo, T hi) {
  Tensor<T> out(std::move(shape));
  for (T& v : out.data()) v = lo + (hi - lo) * static_cast<T>(rng.uniform());
  return out;
}

template Tensor<float> rand_normal(SeededRng&, Shape, float, float);
template Tensor<double> rand_normal(SeededRng&, Shape, double, double);
template Tensor<float> rand_trunc_normal(SeededRng&, Shape, float, float);
template Tensor<double> rand_trunc_normal(SeededRng&, Shape, double, double);
template Tensor<float> rand_uniform(SeededRng&, Shape, float, float);
template Tensor<double> rand_uniform(SeededRng&, Shape, double, double);

}  // namespace lkca
