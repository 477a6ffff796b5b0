// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace lkca::simd::detail {

void axpy_neon(std::size_t n, float a, const float* x, float* y) {
  const float32x4_t va = vdupq_n_f32(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    float32x4_t y0 = vld1q_f32(y + i);
    float32x4_t y1 = vld1q_f32(y + i + 4);
    y0 = vfmaq_f32(y0, va, vld1q_f32(x + i));
    y1 = vfmaq_f32(y1, va, vld1q_f32(x + i + 4));
    vst1q_f32(y + i, y0);
    vst1q_f32(y + i + 4, y1);
  }
  for (; i < n; ++i) y[i] = __builtin_fmaf(a, x[i], y[i]);
}

void axpy_neon(std::size_t n, double a, const double* x, double* y) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float64x2_t y0 = vld1q_f64(y + i);
    float64x2_t y1 = vld1q_f64(y + i + 2);
    y0 = vfmaq_f64(y0, va, vld1q_f64(x + i));
    y1 = vfmaq_f64(y1, va, vld1q_f64(x + i + 2));
    vst1q_f64(y + i, y0);
    vst1q_f64(y + i + 2, y1);
  }
  for (; i < n; ++i) y[i] = __builtin_fma(a, x[i], y[i]);
}

float dot_neon(std::size_t n, const float* x, const float* y) {
  float32x4_t acc0 = vdupq_n_f32(0.0f);
  float32x4_t acc1 = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(x + i), vld1q_f32(y + i));
    acc1 = vfmaq_f32(acc1, vld1q_f32(x + i + 4), vld1q_f32(y + i + 4));
  }
  float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
  for (; i < n; ++i) acc = __builtin_fmaf(x[i], y[i], acc);
  return acc;
}

double dot_neon(std::size_t n, const double* x, const double* y) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc = __builtin_fma(x[i], y[i], acc);
  return acc;
}

}  // namespace lkca::simd::detail
