// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include "kernels_impl.hpp"

namespace lkca::simd::detail {

namespace {

template <typename T>
void axpy_ref(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
T dot_ref(std::size_t n, const T* x, const T* y) {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace

// Compiled with -ffp-contract=off so the reference never fuses into FMA.
void axpy_scalar(std::size_t n, float a, const float* x, float* y) { axpy_ref(n, a, x, y); }
void axpy_scalar(std::size_t n, double a, const double* x, double* y) { axpy_ref(n, a, x, y); }
float dot_scalar(std::size_t n, const float* x, const float* y) { return dot_ref(n, x, y); }
double dot_scalar(std::size_t n, const double* x, const double* y) { return dot_ref(n, x, y); }

}  // namespace lkca::simd::detail
