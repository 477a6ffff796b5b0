// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "lkca/rng.hpp"
#include "lkca/tensor.hpp"

namespace lkca {

/// How the shared-kernel token mixer is evaluated. All three compute the
/// same linear map.
enum class View {
  attention,    ///< unroll the kernel into an N x N score matrix, then scores @ V
  convolution,  ///< fold tokens onto the grid, full-padding cross-correlation
  spectral,     ///< FFT-based correlation (needs the FFTW build option)
};

std::string_view view_name(View view);
std::optional<View> parse_view(std::string_view name);

/// True if forward_spectral_view was compiled in.
bool spectral_view_available();

enum class KernelInit { zeros, trunc_normal };

std::string_view kernel_init_name(KernelInit init);
std::optional<KernelInit> parse_kernel_init(std::string_view name);

/// Shared spatial weights of extent (2*Gh - 1) x (2*Gw - 1) for a Gh x Gw token grid.
template <Real T>
class LKCAKernel {
 public:
  /// Zero-initialized kernel.
  LKCAKernel(std::size_t grid_h, std::size_t grid_w);
  LKCAKernel(Tensor<T> weights, std::size_t grid_h, std::size_t grid_w);

  std::size_t grid_h() const noexcept { return grid_h_; }
  std::size_t grid_w() const noexcept { return grid_w_; }
  std::size_t tokens() const noexcept { return grid_h_ * grid_w_; }

  const Tensor<T>& weights() const noexcept { return weights_; }
  /// Mutable access for optimizers and loaders; the extents must not change.
  Tensor<T>& weights() noexcept { return weights_; }

  /// Kernel with a single 1 at (Gh-1, Gw-1); its unrolled scores are the identity.
  static LKCAKernel centered_delta(std::size_t grid_h, std::size_t grid_w);

 private:
  std::size_t grid_h_;
  std::size_t grid_w_;
  Tensor<T> weights_;
};

/// V = x W + b applied per token.
template <Real T>
class ValueProjection {
 public:
  explicit ValueProjection(std::size_t dim);
  ValueProjection(Tensor<T> weight, Tensor<T> bias);

  std::size_t dim() const noexcept { return weight_.dim(0); }
  const Tensor<T>& weight() const noexcept { return weight_; }
  const Tensor<T>& bias() const noexcept { return bias_; }
  Tensor<T>& weight() noexcept { return weight_; }
  Tensor<T>& bias() noexcept { return bias_; }

  static ValueProjection identity(std::size_t dim);

 private:
  Tensor<T> weight_;
  Tensor<T> bias_;
};

template <Real T>
struct LKCALayer {
  LKCAKernel<T> kernel;
  ValueProjection<T> value;
  View view = View::attention;

  std::size_t dim() const noexcept { return value.dim(); }
  std::size_t tokens() const noexcept { return kernel.tokens(); }
};

/// Linear maps trunc-normal(0, 0.02), bias zero, kernel per `init`.
template <Real T>
LKCALayer<T> make_lkca_layer(std::size_t grid_h, std::size_t grid_w, std::size_t dim,
                             SeededRng& rng, KernelInit init = KernelInit::zeros,
                             View view = View::attention);

/// Unrolled N x N score matrix of a kernel. Row i*Gw + j holds the row-major
/// flattening of the Gh x Gw kernel window whose top-left corner is
/// (Gh-1-i, Gw-1-j), so that
///   scores[i*Gw + j, p*Gw + q] == weights[Gh-1-i+p, Gw-1-j+q].
template <Real T>
struct AttentionMatrix {
  Tensor<T> scores;
  std::size_t grid_h;
  std::size_t grid_w;
};

template <Real T>
AttentionMatrix<T> unroll_kernel_to_attention(const LKCAKernel<T>& kernel);

/// V = x W + b for x of shape [b, N, d].
template <Real T>
Tensor<T> value_project(const Tensor<T>& x, const ValueProjection<T>& value,
                        MacCounter* macs = nullptr);

template <Real T>
Tensor<T> forward_attention_view(const Tensor<T>& x, const LKCALayer<T>& layer,
                                 MacCounter* macs = nullptr);

template <Real T>
Tensor<T> forward_conv_view(const Tensor<T>& x, const LKCALayer<T>& layer,
                            MacCounter* macs = nullptr);

/// Correlation evaluated with zero-padded 2D real FFTs of extent
/// next_pow2(3G - 2) per axis. MACs recorded: the value projection plus four
/// per complex pointwise product; the transforms themselves are not counted.
/// Throws std::logic_error when built without FFTW.
template <Real T>
Tensor<T> forward_spectral_view(const Tensor<T>& x, const LKCALayer<T>& layer,
                                MacCounter* macs = nullptr);

/// Dispatches on layer.view.
template <Real T>
Tensor<T> forward(const Tensor<T>& x, const LKCALayer<T>& layer, MacCounter* macs = nullptr);

template <Real T>
struct LKCAGrads {
  Tensor<T> x;
  Tensor<T> kernel;
  Tensor<T> value_weight;
  Tensor<T> value_bias;
};

/// Closed-form adjoints of out = S(K) (x W + b).
template <Real T>
LKCAGrads<T> backward(const Tensor<T>& x, const LKCALayer<T>& layer, const Tensor<T>& grad_out);

/// d^2 + d + (2Gh-1)(2Gw-1).
template <Real T>
std::uint64_t count_params(const LKCALayer<T>& layer);

/// 2*b*N*d^2 + 2*b*N^2*d, with 1 MAC = 2 FLOPs. Same for every view.
template <Real T>
std::uint64_t count_flops(const LKCALayer<T>& layer, std::uint64_t batch);

std::uint64_t lkca_param_count(std::size_t grid_h, std::size_t grid_w, std::size_t dim);
std::uint64_t lkca_flop_count(std::size_t grid_h, std::size_t grid_w, std::size_t dim,
                              std::uint64_t batch);

}  // namespace lkca
