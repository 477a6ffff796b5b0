// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace lkca::simd::detail {

void axpy_scalar(std::size_t n, float a, const float* x, float* y);
void axpy_scalar(std::size_t n, double a, const double* x, double* y);
float dot_scalar(std::size_t n, const float* x, const float* y);
double dot_scalar(std::size_t n, const double* x, const double* y);

#if defined(LKCA_HAVE_AVX2)
void axpy_avx2(std::size_t n, float a, const float* x, float* y);
void axpy_avx2(std::size_t n, double a, const double* x, double* y);
float dot_avx2(std::size_t n, const float* x, const float* y);
double dot_avx2(std::size_t n, const double* x, const double* y);
#endif

#if defined(LKCA_HAVE_NEON)
void axpy_neon(std::size_t n, float a, const float* x, float* y);
void axpy_neon(std::size_t n, double a, const double* x, double* y);
float dot_neon(std::size_t n, const float* x, const float* y);
double dot_neon(std::size_t n, const double* x, const double* y);
#endif

}  // namespace lkca::simd::detail
