// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "lkca/tensor.hpp"

namespace lkca {

inline constexpr double kLayerNormEps = 1e-5;

// tanh-form GELU: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
inline constexpr double kGeluSqrt2OverPi = 0.7978845608028654;
inline constexpr double kGeluCubic = 0.044715;

/// C[m,n] = A[m,k] B[k,n]. Adds m*n*k to `macs`.
template <Real T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, MacCounter* macs = nullptr);

/// C[m,n] = A[k,m]^T B[k,n].
template <Real T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b, MacCounter* macs = nullptr);

/// C[m,n] = A[m,k] B[n,k]^T.
template <Real T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b, MacCounter* macs = nullptr);

/// c += op(a) op(b) on raw row-major buffers, op = transpose when the flag is set.
/// `a` is stored [m,k] (or [k,m] if trans_a); `b` is [k,n] (or [n,k] if trans_b).
template <Real T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, bool trans_a,
                     const T* b, bool trans_b, T* c, MacCounter* macs = nullptr);

/// Per-channel 2D cross-correlation (no kernel flip) with zero padding.
/// out[ch,i,j] = sum_{u,v} kernel[u,v] * in[ch, i+u-pad_h, j+v-pad_w].
/// Only taps that land inside the unpadded input count as MACs.
template <Real T>
Tensor<T> cross_correlate_2d(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t pad_h,
                             std::size_t pad_w, MacCounter* macs = nullptr);

/// Adjoint of cross_correlate_2d with respect to its input.
template <Real T>
Tensor<T> cross_correlate_2d_input_grad(const Tensor<T>& grad_out, const Tensor<T>& kernel,
                                        std::size_t pad_h, std::size_t pad_w,
                                        std::size_t in_h, std::size_t in_w);

/// Adjoint of cross_correlate_2d with respect to the kernel (summed over channels).
template <Real T>
Tensor<T> cross_correlate_2d_kernel_grad(const Tensor<T>& grad_out, const Tensor<T>& input,
                                         std::size_t kernel_h, std::size_t kernel_w,
                                         std::size_t pad_h, std::size_t pad_w);

/// [b, Gh*Gw, d] -> [b*d, Gh, Gw]; token t = i*Gw + j lands in cell (i, j).
template <Real T>
Tensor<T> grid_fold(const Tensor<T>& x, std::size_t grid_h, std::size_t grid_w);

/// [b*d, Gh, Gw] -> [b, Gh*Gw, d]; exact inverse of grid_fold.
template <Real T>
Tensor<T> grid_unfold(const Tensor<T>& g, std::size_t batch, std::size_t dim);

template <Real T>
struct LayerNormStats {
  std::vector<T> mean;
  std::vector<T> rstd;
};

/// Normalizes every slice along the last axis with population variance.
template <Real T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(kLayerNormEps), LayerNormStats<T>* stats = nullptr);

template <Real T>
struct LayerNormGrads {
  Tensor<T> x;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <Real T>
LayerNormGrads<T> layer_norm_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                                      const Tensor<T>& gamma, const LayerNormStats<T>& stats);

/// Softmax along the last axis, max-shifted.
template <Real T>
Tensor<T> softmax_rows(const Tensor<T>& x);

/// Given y = softmax_rows(x) and dL/dy, returns dL/dx.
template <Real T>
Tensor<T> softmax_rows_backward(const Tensor<T>& y, const Tensor<T>& grad_out);

template <Real T>
Tensor<T> gelu(const Tensor<T>& x);

template <Real T>
T gelu_scalar(T x);

template <Real T>
T gelu_derivative_scalar(T x);

template <Real T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

/// a + b where b's shape equals a trailing suffix of a's shape (broadcast over
/// the leading axes). Equal shapes are the trivial case.
template <Real T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

/// Sums `t` over the leading axes down to `suffix` (adjoint of the broadcast in add).
template <Real T>
Tensor<T> reduce_to_suffix(const Tensor<T>& t, const Shape& suffix);

template <Real T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <Real T>
Tensor<T> scale(const Tensor<T>& a, T factor);

/// Transpose of a rank-2 tensor.
template <Real T>
Tensor<T> transpose(const Tensor<T>& a);

}  // namespace lkca
