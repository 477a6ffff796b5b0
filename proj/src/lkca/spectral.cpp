// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>

#include "lkca/layer.hpp"
#include "lkca/ops.hpp"

namespace lkca {

bool spectral_view_available() { return true; }

namespace {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

struct PlanDestroy {
  void operator()(fftw_plan p) const noexcept {
    if (p != nullptr) fftw_destroy_plan(p);
  }
};

using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

template <typename U>
std::unique_ptr<U[], FftwFree> fftw_buffer(std::size_t n) {
  auto* p = static_cast<U*>(fftw_malloc(sizeof(U) * n));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<U[], FftwFree>(p);
}

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

template <Real T>
Tensor<T> forward_spectral_view(const Tensor<T>& x, const LKCALayer<T>& layer, MacCounter* macs) {
  if (x.rank() != 3 || x.dim(1) != layer.tokens() || x.dim(2) != layer.dim()) {
    throw DimensionError("forward_spectral_view: input " + shape_str(x.shape()) +
                         " does not match grid " + std::to_string(layer.kernel.grid_h()) + "x" +
                         std::to_string(layer.kernel.grid_w()) + " with dim " +
                         std::to_string(layer.dim()));
  }
  const std::size_t b = x.dim(0), d = x.dim(2);
  const std::size_t gh = layer.kernel.grid_h(), gw = layer.kernel.grid_w();
  const std::size_t kh = 2 * gh - 1, kw = 2 * gw - 1;
  const std::size_t lh = next_pow2(3 * gh - 2), lw = next_pow2(3 * gw - 2);
  const std::size_t spec_w = lw / 2 + 1;
  const std::size_t real_n = lh * lw, spec_n = lh * spec_w;

  const Tensor<T> planes = grid_fold(value_project(x, layer.value, macs), gh, gw);

  auto real_buf = fftw_buffer<double>(real_n);
  auto spec_buf = fftw_buffer<fftw_complex>(spec_n);
  auto kernel_spec = fftw_buffer<fftw_complex>(spec_n);
  PlanPtr r2c, c2r;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    r2c.reset(fftw_plan_dft_r2c_2d(static_cast<int>(lh), static_cast<int>(lw), real_buf.get(),
                                   spec_buf.get(), FFTW_ESTIMATE));
    c2r.reset(fftw_plan_dft_c2r_2d(static_cast<int>(lh), static_cast<int>(lw), spec_buf.get(),
                                   real_buf.get(), FFTW_ESTIMATE));
  }
  if (!r2c || !c2r) throw std::runtime_error("forward_spectral_view: FFTW planning failed");

  // conj(FFT(K)): correlation instead of convolution.
  std::fill(real_buf.get(), real_buf.get() + real_n, 0.0);
  const Tensor<T>& w = layer.kernel.weights();
  for (std::size_t u = 0; u < kh; ++u)
    for (std::size_t v = 0; v < kw; ++v) real_buf[u * lw + v] = static_cast<double>(w.at(u, v));
  fftw_execute_dft_r2c(r2c.get(), real_buf.get(), kernel_spec.get());
  for (std::size_t i = 0; i < spec_n; ++i) kernel_spec[i][1] = -kernel_spec[i][1];

  const double norm = 1.0 / static_cast<double>(real_n);
  Tensor<T> out_planes(planes.shape());
  const std::size_t plane_n = gh * gw;
  for (std::size_t pl = 0; pl < planes.dim(0); ++pl) {
    std::fill(real_buf.get(), real_buf.get() + real_n, 0.0);
    const T* src = planes.ptr() + pl * plane_n;
    for (std::size_t i = 0; i < gh; ++i)
      for (std::size_t j = 0; j < gw; ++j)
        real_buf[i * lw + j] = static_cast<double>(src[i * gw + j]);
    fftw_execute_dft_r2c(r2c.get(), real_buf.get(), spec_buf.get());
    for (std::size_t i = 0; i < spec_n; ++i) {
      const std::complex<double> a(spec_buf[i][0], spec_buf[i][1]);
      const std::complex<double> k(kernel_spec[i][0], kernel_spec[i][1]);
      const std::complex<double> p = a * k;
      spec_buf[i][0] = p.real();
      spec_buf[i][1] = p.imag();
    }
    fftw_execute_dft_c2r(c2r.get(), spec_buf.get(), real_buf.get());
    // Output (i, j) sits at circular lag (i - (Gh-1), j - (Gw-1)).
    T* dst = out_planes.ptr() + pl * plane_n;
    for (std::size_t i = 0; i < gh; ++i) {
      const std::size_t ri = (i + lh - (gh - 1)) % lh;
      for (std::size_t j = 0; j < gw; ++j) {
        const std::size_t rj = (j + lw - (gw - 1)) % lw;
        dst[i * gw + j] = static_cast<T>(real_buf[ri * lw + rj] * norm);
      }
    }
  }
  count_macs(macs, static_cast<std::uint64_t>(4) * spec_n * planes.dim(0));
  check_finite(out_planes, "forward_spectral_view");
  return grid_unfold(out_planes, b, d);
}

template Tensor<float> forward_spectral_view(const Tensor<float>&, const LKCALayer<float>&,
                                             MacCounter*);
template Tensor<double> forward_spectral_view(const Tensor<double>&, const LKCALayer<double>&,
                                              MacCounter*);

}  // namespace lkca
