// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include "lkca/ops.hpp"

#include <algorithm>
#include <cmath>

#include "lkca/simd.hpp"

namespace lkca {

namespace {

[[noreturn]] void dim_error(const std::string& op, const std::string& what) {
  throw DimensionError(op + ": " + what);
}

void require_rank(const char* op, const Shape& s, std::size_t rank, const char* name) {
  if (s.size() != rank) {
    dim_error(op, std::string(name) + " must have rank " + std::to_string(rank) + ", got " +
                      shape_str(s));
  }
}

}  // namespace

template <Real T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, bool trans_a,
                     const T* b, bool trans_b, T* c, MacCounter* macs) {
  const auto& kern = simd::kernels<T>();
  if (!trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      for (std::size_t t = 0; t < k; ++t) {
        const T a_it = trans_a ? a[t * m + i] : a[i * k + t];
        kern.axpy(n, a_it, b + t * n, crow);
      }
    }
  } else {
    std::vector<T> column;
    if (trans_a) column.resize(k);
    for (std::size_t i = 0; i < m; ++i) {
      const T* arow = a + i * k;
      if (trans_a) {
        for (std::size_t t = 0; t < k; ++t) column[t] = a[t * m + i];
        arow = column.data();
      }
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += kern.dot(k, arow, b + j * k);
    }
  }
  count_macs(macs, static_cast<std::uint64_t>(m) * n * k);
}

template <Real T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, MacCounter* macs) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    dim_error("matmul", "cannot multiply " + shape_str(a.shape()) + " by " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> c({m, n});
  gemm_accumulate(m, n, k, a.ptr(), false, b.ptr(), false, c.ptr(), macs);
  check_finite(c, "matmul");
  return c;
}

template <Real T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b, MacCounter* macs) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    dim_error("matmul_tn",
              "cannot multiply transpose of " + shape_str(a.shape()) + " by " + shape_str(b.shape()));
  }
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor<T> c({m, n});
  gemm_accumulate(m, n, k, a.ptr(), true, b.ptr(), false, c.ptr(), macs);
  check_finite(c, "matmul_tn");
  return c;
}

template <Real T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b, MacCounter* macs) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    dim_error("matmul_nt",
              "cannot multiply " + shape_str(a.shape()) + " by transpose of " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor<T> c({m, n});
  gemm_accumulate(m, n, k, a.ptr(), false, b.ptr(), true, c.ptr(), macs);
  check_finite(c, "matmul_nt");
  return c;
}

namespace {

/// Column range [lo, hi) of output positions j whose tap j + shift stays
/// inside [0, in_w), intersected with [0, out_w).
struct Span1d {
  std::size_t lo;
  std::size_t hi;
};

Span1d valid_columns(std::ptrdiff_t shift, std::size_t in_w, std::size_t out_w) {
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
  const std::ptrdiff_t hi =
      std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(out_w),
                               static_cast<std::ptrdiff_t>(in_w) - shift);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

struct CorrGeometry {
  std::size_t channels, in_h, in_w, k_h, k_w, out_h, out_w;
  std::ptrdiff_t pad_h, pad_w;
};

CorrGeometry correlation_geometry(const char* op, const Shape& input, const Shape& kernel,
                                  std::size_t pad_h, std::size_t pad_w) {
  require_rank(op, input, 3, "input");
  require_rank(op, kernel, 2, "kernel");
  const auto ext = [&](std::size_t in, std::size_t k, std::size_t pad) -> std::ptrdiff_t {
    return static_cast<std::ptrdiff_t>(in + 2 * pad) - static_cast<std::ptrdiff_t>(k) + 1;
  };
  const std::ptrdiff_t out_h = ext(input[1], kernel[0], pad_h);
  const std::ptrdiff_t out_w = ext(input[2], kernel[1], pad_w);
  if (out_h < 1 || out_w < 1 || kernel[0] == 0 || kernel[1] == 0) {
    dim_error(op, "non-positive output extent for input " + shape_str(input) + ", kernel " +
                      shape_str(kernel) + ", padding (" + std::to_string(pad_h) + "," +
                      std::to_string(pad_w) + ")");
  }
  return {input[0],
          input[1],
          input[2],
          kernel[0],
          kernel[1],
          static_cast<std::size_t>(out_h),
          static_cast<std::size_t>(out_w),
          static_cast<std::ptrdiff_t>(pad_h),
          static_cast<std::ptrdiff_t>(pad_w)};
}

}  // namespace

template <Real T>
Tensor<T> cross_correlate_2d(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t pad_h,
                             std::size_t pad_w, MacCounter* macs) {
  const CorrGeometry g =
      correlation_geometry("cross_correlate_2d", input.shape(), kernel.shape(), pad_h, pad_w);
  const auto& kern = simd::kernels<T>();
  Tensor<T> out({g.channels, g.out_h, g.out_w});
  std::uint64_t taps = 0;
  for (std::size_t u = 0; u < g.k_h; ++u) {
    for (std::size_t v = 0; v < g.k_w; ++v) {
      const std::ptrdiff_t col_shift = static_cast<std::ptrdiff_t>(v) - g.pad_w;
      const Span1d cols = valid_columns(col_shift, g.in_w, g.out_w);
      if (cols.hi == cols.lo) continue;
      const std::size_t len = cols.hi - cols.lo;
      for (std::size_t i = 0; i < g.out_h; ++i) {
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + u) - g.pad_h;
        if (r < 0 || r >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
        taps += len;
      }
    }
  }
  for (std::size_t ch = 0; ch < g.channels; ++ch) {
    const T* in_plane = input.ptr() + ch * g.in_h * g.in_w;
    T* out_plane = out.ptr() + ch * g.out_h * g.out_w;
    for (std::size_t i = 0; i < g.out_h; ++i) {
      T* out_row = out_plane + i * g.out_w;
      for (std::size_t u = 0; u < g.k_h; ++u) {
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + u) - g.pad_h;
        if (r < 0 || r >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
        const T* in_row = in_plane + static_cast<std::size_t>(r) * g.in_w;
        for (std::size_t v = 0; v < g.k_w; ++v) {
          const std::ptrdiff_t col_shift = static_cast<std::ptrdiff_t>(v) - g.pad_w;
          const Span1d cols = valid_columns(col_shift, g.in_w, g.out_w);
          if (cols.hi == cols.lo) continue;
          kern.axpy(cols.hi - cols.lo, kernel.at(u, v),
                    in_row + static_cast<std::ptrdiff_t>(cols.lo) + col_shift,
                    out_row + cols.lo);
        }
      }
    }
  }
  count_macs(macs, taps * g.channels);
  check_finite(out, "cross_correlate_2d");
  return out;
}

template <Real T>
Tensor<T> cross_correlate_2d_input_grad(const Tensor<T>& grad_out, const Tensor<T>& kernel,
                                        std::size_t pad_h, std::size_t pad_w, std::size_t in_h,
                                        std::size_t in_w) {
  require_rank("cross_correlate_2d_input_grad", grad_out.shape(), 3, "grad_out");
  const Shape in_shape{grad_out.dim(0), in_h, in_w};
  const CorrGeometry g = correlation_geometry("cross_correlate_2d_input_grad", in_shape,
                                              kernel.shape(), pad_h, pad_w);
  if (g.out_h != grad_out.dim(1) || g.out_w != grad_out.dim(2)) {
    dim_error("cross_correlate_2d_input_grad",
              "grad_out " + shape_str(grad_out.shape()) + " inconsistent with input " +
                  shape_str(in_shape) + " and kernel " + shape_str(kernel.shape()));
  }
  const auto& kern = simd::kernels<T>();
  Tensor<T> grad_in(in_shape);
  for (std::size_t ch = 0; ch < g.channels; ++ch) {
    const T* go_plane = grad_out.ptr() + ch * g.out_h * g.out_w;
    T* gi_plane = grad_in.ptr() + ch * g.in_h * g.in_w;
    for (std::size_t i = 0; i < g.out_h; ++i) {
      const T* go_row = go_plane + i * g.out_w;
      for (std::size_t u = 0; u < g.k_h; ++u) {
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + u) - g.pad_h;
        if (r < 0 || r >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
        T* gi_row = gi_plane + static_cast<std::size_t>(r) * g.in_w;
        for (std::size_t v = 0; v < g.k_w; ++v) {
          const std::ptrdiff_t col_shift = static_cast<std::ptrdiff_t>(v) - g.pad_w;
          const Span1d cols = valid_columns(col_shift, g.in_w, g.out_w);
          if (cols.hi == cols.lo) continue;
          kern.axpy(cols.hi - cols.lo, kernel.at(u, v), go_row + cols.lo,
                    gi_row + static_cast<std::ptrdiff_t>(cols.lo) + col_shift);
        }
      }
    }
  }
  check_finite(grad_in, "cross_correlate_2d_input_grad");
  return grad_in;
}

template <Real T>
Tensor<T> cross_correlate_2d_kernel_grad(const Tensor<T>& grad_out, const Tensor<T>& input,
                                         std::size_t kernel_h, std::size_t kernel_w,
                                         std::size_t pad_h, std::size_t pad_w) {
  const Shape k_shape{kernel_h, kernel_w};
  const CorrGeometry g = correlation_geometry("cross_correlate_2d_kernel_grad", input.shape(),
                                              k_shape, pad_h, pad_w);
  if (grad_out.shape() != Shape{g.channels, g.out_h, g.out_w}) {
    dim_error("cross_correlate_2d_kernel_grad",
              "grad_out " + shape_str(grad_out.shape()) + " inconsistent with input " +
                  shape_str(input.shape()));
  }
  const auto& kern = simd::kernels<T>();
  Tensor<T> grad_k(k_shape);
  for (std::size_t u = 0; u < g.k_h; ++u) {
    for (std::size_t v = 0; v < g.k_w; ++v) {
      const std::ptrdiff_t col_shift = static_cast<std::ptrdiff_t>(v) - g.pad_w;
      const Span1d cols = valid_columns(col_shift, g.in_w, g.out_w);
      if (cols.hi == cols.lo) continue;
      T acc = T(0);
      for (std::size_t ch = 0; ch < g.channels; ++ch) {
        const T* go_plane = grad_out.ptr() + ch * g.out_h * g.out_w;
        const T* in_plane = input.ptr() + ch * g.in_h * g.in_w;
        for (std::size_t i = 0; i < g.out_h; ++i) {
          const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + u) - g.pad_h;
          if (r < 0 || r >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          acc += kern.dot(cols.hi - cols.lo, go_plane + i * g.out_w + cols.lo,
                          in_plane + static_cast<std::size_t>(r) * g.in_w +
                              static_cast<std::ptrdiff_t>(cols.lo) + col_shift);
        }
      }
      grad_k.at(u, v) = acc;
    }
  }
  check_finite(grad_k, "cross_correlate_2d_kernel_grad");
  return grad_k;
}

template <Real T>
Tensor<T> grid_fold(const Tensor<T>& x, std::size_t grid_h, std::size_t grid_w) {
  require_rank("grid_fold", x.shape(), 3, "x");
  const std::size_t b = x.dim(0), n = x.dim(1), d = x.dim(2);
  if (n != grid_h * grid_w) {
    dim_error("grid_fold", "token count " + std::to_string(n) + " is not " +
                               std::to_string(grid_h) + "x" + std::to_string(grid_w));
  }
  Tensor<T> out({b * d, grid_h, grid_w});
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t t = 0; t < n; ++t) {
      const T* src = x.ptr() + (bi * n + t) * d;
      for (std::size_t c = 0; c < d; ++c) out[(bi * d + c) * n + t] = src[c];
    }
  }
  return out;
}

template <Real T>
Tensor<T> grid_unfold(const Tensor<T>& g, std::size_t batch, std::size_t dim) {
  require_rank("grid_unfold", g.shape(), 3, "g");
  if (g.dim(0) != batch * dim) {
    dim_error("grid_unfold", "plane count " + std::to_string(g.dim(0)) + " != batch " +
                                 std::to_string(batch) + " * dim " + std::to_string(dim));
  }
  const std::size_t n = g.dim(1) * g.dim(2);
  Tensor<T> out({batch, n, dim});
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t t = 0; t < n; ++t) {
      T* dst = out.ptr() + (bi * n + t) * dim;
      for (std::size_t c = 0; c < dim; ++c) dst[c] = g[(bi * dim + c) * n + t];
    }
  }
  return out;
}

template <Real T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps,
                     LayerNormStats<T>* stats) {
  if (x.rank() == 0 || x.shape().back() == 0) {
    dim_error("layer_norm", "last axis must be non-empty, got " + shape_str(x.shape()));
  }
  const std::size_t d = x.shape().back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    dim_error("layer_norm", "gamma " + shape_str(gamma.shape()) + " / beta " +
                                shape_str(beta.shape()) + " must be [" + std::to_string(d) + "]");
  }
  const std::size_t rows = x.numel() / d;
  Tensor<T> out(x.shape());
  if (stats != nullptr) {
    stats->mean.assign(rows, T(0));
    stats->rstd.assign(rows, T(0));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = x.ptr() + r * d;
    T* dst = out.ptr() + r * d;
    T mean = T(0);
    for (std::size_t c = 0; c < d; ++c) mean += src[c];
    mean /= static_cast<T>(d);
    T var = T(0);
    for (std::size_t c = 0; c < d; ++c) {
      const T diff = src[c] - mean;
      var += diff * diff;
    }
    var /= static_cast<T>(d);
    const T rstd = T(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) dst[c] = (src[c] - mean) * rstd * gamma[c] + beta[c];
    if (stats != nullptr) {
      stats->mean[r] = mean;
      stats->rstd[r] = rstd;
    }
  }
  check_finite(out, "layer_norm");
  return out;
}

template <Real T>
LayerNormGrads<T> layer_norm_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                                      const Tensor<T>& gamma, const LayerNormStats<T>& stats) {
  if (grad_out.shape() != x.shape()) {
    dim_error("layer_norm_backward", "grad_out " + shape_str(grad_out.shape()) + " vs x " +
                                         shape_str(x.shape()));
  }
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  LayerNormGrads<T> g{Tensor<T>(x.shape()), Tensor<T>({d}), Tensor<T>({d})};
  std::vector<T> xhat(d), gxhat(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = x.ptr() + r * d;
    const T* go = grad_out.ptr() + r * d;
    const T mean = stats.mean[r], rstd = stats.rstd[r];
    T sum_g = T(0), sum_gx = T(0);
    for (std::size_t c = 0; c < d; ++c) {
      xhat[c] = (src[c] - mean) * rstd;
      gxhat[c] = go[c] * gamma[c];
      g.gamma[c] += go[c] * xhat[c];
      g.beta[c] += go[c];
      sum_g += gxhat[c];
      sum_gx += gxhat[c] * xhat[c];
    }
    const T inv_d = T(1) / static_cast<T>(d);
    T* gx = g.x.ptr() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      gx[c] = rstd * (gxhat[c] - inv_d * sum_g - xhat[c] * inv_d * sum_gx);
    }
  }
  return g;
}

template <Real T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  if (x.rank() == 0) dim_error("softmax_rows", "rank-0 input");
  const std::size_t n = x.shape().back();
  Tensor<T> out(x.shape());
  if (n == 0) return out;
  const std::size_t rows = x.numel() / n;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = x.ptr() + r * n;
    T* dst = out.ptr() + r * n;
    const T mx = *std::max_element(src, src + n);
    T sum = T(0);
    for (std::size_t c = 0; c < n; ++c) {
      dst[c] = std::exp(src[c] - mx);
      sum += dst[c];
    }
    const T inv = T(1) / sum;
    for (std::size_t c = 0; c < n; ++c) dst[c] *= inv;
  }
  check_finite(out, "softmax_rows");
  return out;
}

template <Real T>
Tensor<T> softmax_rows_backward(const Tensor<T>& y, const Tensor<T>& grad_out) {
  if (y.shape() != grad_out.shape()) {
    dim_error("softmax_rows_backward", "shapes " + shape_str(y.shape()) + " and " +
                                           shape_str(grad_out.shape()) + " differ");
  }
  const std::size_t n = y.shape().back();
  Tensor<T> gx(y.shape());
  if (n == 0) return gx;
  const std::size_t rows = y.numel() / n;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* yr = y.ptr() + r * n;
    const T* gr = grad_out.ptr() + r * n;
    T dot = T(0);
    for (std::size_t c = 0; c < n; ++c) dot += yr[c] * gr[c];
    T* out = gx.ptr() + r * n;
    for (std::size_t c = 0; c < n; ++c) out[c] = yr[c] * (gr[c] - dot);
  }
  return gx;
}

template <Real T>
T gelu_scalar(T x) {
  const T k0 = static_cast<T>(kGeluSqrt2OverPi);
  const T k1 = static_cast<T>(kGeluCubic);
  return T(0.5) * x * (T(1) + std::tanh(k0 * (x + k1 * x * x * x)));
}

template <Real T>
T gelu_derivative_scalar(T x) {
  const T k0 = static_cast<T>(kGeluSqrt2OverPi);
  const T k1 = static_cast<T>(kGeluCubic);
  const T th = std::tanh(k0 * (x + k1 * x * x * x));
  const T sech2 = T(1) - th * th;
  return T(0.5) * (T(1) + th) + T(0.5) * x * sech2 * k0 * (T(1) + T(3) * k1 * x * x);
}

template <Real T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = gelu_scalar(x[i]);
  check_finite(out, "gelu");
  return out;
}

template <Real T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  if (x.shape() != grad_out.shape()) {
    dim_error("gelu_backward", "shapes " + shape_str(x.shape()) + " and " +
                                   shape_str(grad_out.shape()) + " differ");
  }
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = grad_out[i] * gelu_derivative_scalar(x[i]);
  return out;
}

namespace {

bool is_suffix(const Shape& full, const Shape& suffix) {
  if (suffix.size() > full.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

}  // namespace

template <Real T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (!is_suffix(a.shape(), b.shape())) {
    dim_error("add", "cannot broadcast " + shape_str(b.shape()) + " onto " + shape_str(a.shape()));
  }
  Tensor<T> out = a;
  const std::size_t inner = b.numel();
  if (inner == 0) return out;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b[i % inner];
  check_finite(out, "add");
  return out;
}

template <Real T>
Tensor<T> reduce_to_suffix(const Tensor<T>& t, const Shape& suffix) {
  if (!is_suffix(t.shape(), suffix)) {
    dim_error("reduce_to_suffix",
              shape_str(suffix) + " is not a suffix of " + shape_str(t.shape()));
  }
  Tensor<T> out(suffix);
  const std::size_t inner = out.numel();
  if (inner == 0) return out;
  for (std::size_t i = 0; i < t.numel(); ++i) out[i % inner] += t[i];
  return out;
}

template <Real T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    dim_error("mul", "shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
  }
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  check_finite(out, "mul");
  return out;
}

template <Real T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * factor;
  check_finite(out, "scale");
  return out;
}

template <Real T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank("transpose", a.shape(), 2, "a");
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor<T> out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

#define LKCA_INSTANTIATE_OPS(T)                                                                  \
  template void gemm_accumulate(std::size_t, std::size_t, std::size_t, const T*, bool, const T*, \
                                bool, T*, MacCounter*);                                          \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, MacCounter*);                    \
  template Tensor<T> matmul_tn(const Tensor<T>&, const Tensor<T>&, MacCounter*);                 \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&, MacCounter*);                 \
  template Tensor<T> cross_correlate_2d(const Tensor<T>&, const Tensor<T>&, std::size_t,         \
                                        std::size_t, MacCounter*);                               \
  template Tensor<T> cross_correlate_2d_input_grad(const Tensor<T>&, const Tensor<T>&,           \
                                                   std::size_t, std::size_t, std::size_t,        \
                                                   std::size_t);                                 \
  template Tensor<T> cross_correlate_2d_kernel_grad(const Tensor<T>&, const Tensor<T>&,          \
                                                    std::size_t, std::size_t, std::size_t,       \
                                                    std::size_t);                                \
  template Tensor<T> grid_fold(const Tensor<T>&, std::size_t, std::size_t);                      \
  template Tensor<T> grid_unfold(const Tensor<T>&, std::size_t, std::size_t);                    \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T,         \
                                LayerNormStats<T>*);                                             \
  template LayerNormGrads<T> layer_norm_backward(const Tensor<T>&, const Tensor<T>&,             \
                                                 const Tensor<T>&, const LayerNormStats<T>&);    \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                             \
  template Tensor<T> softmax_rows_backward(const Tensor<T>&, const Tensor<T>&);                  \
  template T gelu_scalar(T);                                                                     \
  template T gelu_derivative_scalar(T);                                                          \
  template Tensor<T> gelu(const Tensor<T>&);                                                     \
  template Tensor<T> gelu_backward(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> reduce_to_suffix(const Tensor<T>&, const Shape&);                           \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> transpose(const Tensor<T>&);

LKCA_INSTANTIATE_OPS(float)
LKCA_INSTANTIATE_OPS(double)

#undef LKCA_INSTANTIATE_OPS

}  // namespace lkca
