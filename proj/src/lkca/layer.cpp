// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include "lkca/layer.hpp"

#include "lkca/ops.hpp"

namespace lkca {

std::string_view view_name(View view) {
  switch (view) {
    case View::attention:
      return "attention";
    case View::convolution:
      return "convolution";
    case View::spectral:
      return "spectral";
  }
  return "unknown";
}

std::optional<View> parse_view(std::string_view name) {
  if (name == "attention") return View::attention;
  if (name == "convolution") return View::convolution;
  if (name == "spectral") return View::spectral;
  return std::nullopt;
}

std::string_view kernel_init_name(KernelInit init) {
  return init == KernelInit::zeros ? "zeros" : "trunc_normal";
}

std::optional<KernelInit> parse_kernel_init(std::string_view name) {
  if (name == "zeros") return KernelInit::zeros;
  if (name == "trunc_normal") return KernelInit::trunc_normal;
  return std::nullopt;
}

namespace {

Shape kernel_shape(std::size_t grid_h, std::size_t grid_w) {
  if (grid_h == 0 || grid_w == 0) {
    throw DimensionError("LKCA grid extents must be positive, got " + std::to_string(grid_h) +
                         "x" + std::to_string(grid_w));
  }
  return {2 * grid_h - 1, 2 * grid_w - 1};
}

template <Real T>
void require_tokens(const char* op, const Tensor<T>& x, const LKCALayer<T>& layer) {
  if (x.rank() != 3 || x.dim(1) != layer.tokens() || x.dim(2) != layer.dim()) {
    throw DimensionError(std::string(op) + ": input " + shape_str(x.shape()) +
                         " does not match grid " + std::to_string(layer.kernel.grid_h()) + "x" +
                         std::to_string(layer.kernel.grid_w()) + " with dim " +
                         std::to_string(layer.dim()));
  }
}

}  // namespace

template <Real T>
LKCAKernel<T>::LKCAKernel(std::size_t grid_h, std::size_t grid_w)
    : grid_h_(grid_h), grid_w_(grid_w), weights_(kernel_shape(grid_h, grid_w)) {}

template <Real T>
LKCAKernel<T>::LKCAKernel(Tensor<T> weights, std::size_t grid_h, std::size_t grid_w)
    : grid_h_(grid_h), grid_w_(grid_w), weights_(std::move(weights)) {
  if (weights_.shape() != kernel_shape(grid_h, grid_w)) {
    throw DimensionError("LKCA kernel for grid " + std::to_string(grid_h) + "x" +
                         std::to_string(grid_w) + " must be " +
                         shape_str(kernel_shape(grid_h, grid_w)) + ", got " +
                         shape_str(weights_.shape()));
  }
}

template <Real T>
LKCAKernel<T> LKCAKernel<T>::centered_delta(std::size_t grid_h, std::size_t grid_w) {
  LKCAKernel k(grid_h, grid_w);
  k.weights_.at(grid_h - 1, grid_w - 1) = T(1);
  return k;
}

template <Real T>
ValueProjection<T>::ValueProjection(std::size_t dim) : weight_({dim, dim}), bias_({dim}) {}

template <Real T>
ValueProjection<T>::ValueProjection(Tensor<T> weight, Tensor<T> bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (weight_.rank() != 2 || weight_.dim(0) != weight_.dim(1) ||
      bias_.shape() != Shape{weight_.dim(0)}) {
    throw DimensionError("value projection needs a square weight and matching bias, got " +
                         shape_str(weight_.shape()) + " and " + shape_str(bias_.shape()));
  }
}

template <Real T>
ValueProjection<T> ValueProjection<T>::identity(std::size_t dim) {
  return ValueProjection(Tensor<T>::eye(dim), Tensor<T>({dim}));
}

template <Real T>
LKCALayer<T> make_lkca_layer(std::size_t grid_h, std::size_t grid_w, std::size_t dim,
                             SeededRng& rng, KernelInit init, View view) {
  LKCAKernel<T> kernel(grid_h, grid_w);
  if (init == KernelInit::trunc_normal) {
    kernel.weights() = rand_trunc_normal<T>(rng, kernel.weights().shape(), T(0), T(0.02));
  }
  ValueProjection<T> value(rand_trunc_normal<T>(rng, {dim, dim}, T(0), T(0.02)),
                           Tensor<T>({dim}));
  return LKCALayer<T>{std::move(kernel), std::move(value), view};
}

template <Real T>
AttentionMatrix<T> unroll_kernel_to_attention(const LKCAKernel<T>& kernel) {
  const std::size_t gh = kernel.grid_h(), gw = kernel.grid_w(), n = gh * gw;
  const Tensor<T>& w = kernel.weights();
  Tensor<T> scores({n, n});
  for (std::size_t i = 0; i < gh; ++i) {
    for (std::size_t j = 0; j < gw; ++j) {
      const std::size_t start_row = gh - 1 - i;
      const std::size_t start_col = gw - 1 - j;
      T* row = scores.ptr() + (i * gw + j) * n;
      for (std::size_t p = 0; p < gh; ++p) {
        for (std::size_t q = 0; q < gw; ++q) row[p * gw + q] = w.at(start_row + p, start_col + q);
      }
    }
  }
  return {std::move(scores), gh, gw};
}

template <Real T>
Tensor<T> value_project(const Tensor<T>& x, const ValueProjection<T>& value, MacCounter* macs) {
  if (x.rank() != 3 || x.dim(2) != value.dim()) {
    throw DimensionError("value_project: input " + shape_str(x.shape()) +
                         " incompatible with projection " + shape_str(value.weight().shape()));
  }
  const std::size_t b = x.dim(0), n = x.dim(1), d = x.dim(2);
  Tensor<T> v = matmul(x.reshaped({b * n, d}), value.weight(), macs);
  return add(v, value.bias()).reshaped({b, n, d});
}

template <Real T>
Tensor<T> forward_attention_view(const Tensor<T>& x, const LKCALayer<T>& layer, MacCounter* macs) {
  require_tokens("forward_attention_view", x, layer);
  const std::size_t b = x.dim(0), n = x.dim(1), d = x.dim(2);
  const Tensor<T> v = value_project(x, layer.value, macs);
  const AttentionMatrix<T> attn = unroll_kernel_to_attention(layer.kernel);
  Tensor<T> out({b, n, d});
  for (std::size_t bi = 0; bi < b; ++bi) {
    gemm_accumulate(n, d, n, attn.scores.ptr(), false, v.ptr() + bi * n * d, false,
                    out.ptr() + bi * n * d, macs);
  }
  check_finite(out, "forward_attention_view");
  return out;
}

template <Real T>
Tensor<T> forward_conv_view(const Tensor<T>& x, const LKCALayer<T>& layer, MacCounter* macs) {
  require_tokens("forward_conv_view", x, layer);
  const std::size_t gh = layer.kernel.grid_h(), gw = layer.kernel.grid_w();
  const Tensor<T> v = value_project(x, layer.value, macs);
  const Tensor<T> planes = grid_fold(v, gh, gw);
  const Tensor<T> out = cross_correlate_2d(planes, layer.kernel.weights(), gh - 1, gw - 1, macs);
  return grid_unfold(out, x.dim(0), x.dim(2));
}

template <Real T>
Tensor<T> forward(const Tensor<T>& x, const LKCALayer<T>& layer, MacCounter* macs) {
  switch (layer.view) {
    case View::attention:
      return forward_attention_view(x, layer, macs);
    case View::convolution:
      return forward_conv_view(x, layer, macs);
    case View::spectral:
      return forward_spectral_view(x, layer, macs);
  }
  throw std::logic_error("unknown LKCA view");
}

template <Real T>
LKCAGrads<T> backward(const Tensor<T>& x, const LKCALayer<T>& layer, const Tensor<T>& grad_out) {
  require_tokens("lkca backward", x, layer);
  if (grad_out.shape() != x.shape()) {
    throw DimensionError("lkca backward: grad_out " + shape_str(grad_out.shape()) +
                         " must match input " + shape_str(x.shape()));
  }
  const std::size_t b = x.dim(0), n = x.dim(1), d = x.dim(2);
  const std::size_t gh = layer.kernel.grid_h(), gw = layer.kernel.grid_w();
  const Tensor<T> v = value_project(x, layer.value);
  const AttentionMatrix<T> attn = unroll_kernel_to_attention(layer.kernel);

  // grad_v[b] = S^T grad_out[b]
  Tensor<T> grad_v({b, n, d});
  for (std::size_t bi = 0; bi < b; ++bi) {
    gemm_accumulate(n, d, n, attn.scores.ptr(), true, grad_out.ptr() + bi * n * d, false,
                    grad_v.ptr() + bi * n * d);
  }
  const Tensor<T> x2 = x.reshaped({b * n, d});
  const Tensor<T> gv2 = grad_v.reshaped({b * n, d});

  LKCAGrads<T> g;
  g.x = matmul_nt(gv2, layer.value.weight()).reshaped({b, n, d});
  g.value_weight = matmul_tn(x2, gv2);
  g.value_bias = reduce_to_suffix(gv2, {d});
  // grad_kernel[u,v] = sum grad_out[(i,j)] V[(i+u-(Gh-1), j+v-(Gw-1))]
  g.kernel = cross_correlate_2d_kernel_grad(grid_fold(grad_out, gh, gw), grid_fold(v, gh, gw),
                                            2 * gh - 1, 2 * gw - 1, gh - 1, gw - 1);
  return g;
}

std::uint64_t lkca_param_count(std::size_t grid_h, std::size_t grid_w, std::size_t dim) {
  const std::uint64_t d = dim;
  return d * d + d + static_cast<std::uint64_t>(2 * grid_h - 1) * (2 * grid_w - 1);
}

std::uint64_t lkca_flop_count(std::size_t grid_h, std::size_t grid_w, std::size_t dim,
                              std::uint64_t batch) {
  const std::uint64_t n = static_cast<std::uint64_t>(grid_h) * grid_w;
  const std::uint64_t d = dim;
  return 2 * batch * n * d * d + 2 * batch * n * n * d;
}

template <Real T>
std::uint64_t count_params(const LKCALayer<T>& layer) {
  return lkca_param_count(layer.kernel.grid_h(), layer.kernel.grid_w(), layer.dim());
}

template <Real T>
std::uint64_t count_flops(const LKCALayer<T>& layer, std::uint64_t batch) {
  return lkca_flop_count(layer.kernel.grid_h(), layer.kernel.grid_w(), layer.dim(), batch);
}

#define LKCA_INSTANTIATE_LAYER(T)                                                              \
  template class LKCAKernel<T>;                                                                \
  template class ValueProjection<T>;                                                           \
  template LKCALayer<T> make_lkca_layer(std::size_t, std::size_t, std::size_t, SeededRng&,     \
                                        KernelInit, View);                                     \
  template AttentionMatrix<T> unroll_kernel_to_attention(const LKCAKernel<T>&);                \
  template Tensor<T> value_project(const Tensor<T>&, const ValueProjection<T>&, MacCounter*);  \
  template Tensor<T> forward_attention_view(const Tensor<T>&, const LKCALayer<T>&,             \
                                            MacCounter*);                                      \
  template Tensor<T> forward_conv_view(const Tensor<T>&, const LKCALayer<T>&, MacCounter*);    \
  template Tensor<T> forward(const Tensor<T>&, const LKCALayer<T>&, MacCounter*);              \
  template LKCAGrads<T> backward(const Tensor<T>&, const LKCALayer<T>&, const Tensor<T>&);     \
  template std::uint64_t count_params(const LKCALayer<T>&);                                    \
  template std::uint64_t count_flops(const LKCALayer<T>&, std::uint64_t);

LKCA_INSTANTIATE_LAYER(float)
LKCA_INSTANTIATE_LAYER(double)

#undef LKCA_INSTANTIATE_LAYER

}  // namespace lkca
