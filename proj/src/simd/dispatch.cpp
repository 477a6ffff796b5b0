// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"
#include "lkca/simd.hpp"

namespace lkca::simd {

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(LKCA_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(LKCA_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa probe() {
  if (cpu_supports(Isa::avx2)) return Isa::avx2;
  if (cpu_supports(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{probe()};
  return isa;
}

template <typename T>
KernelTable<T> make_table(Isa isa) {
  using detail::axpy_scalar;
  using detail::dot_scalar;
  switch (isa) {
#if defined(LKCA_HAVE_AVX2)
    case Isa::avx2:
      return {static_cast<void (*)(std::size_t, T, const T*, T*)>(&detail::axpy_avx2),
              static_cast<T (*)(std::size_t, const T*, const T*)>(&detail::dot_avx2)};
#endif
#if defined(LKCA_HAVE_NEON)
    case Isa::neon:
      return {static_cast<void (*)(std::size_t, T, const T*, T*)>(&detail::axpy_neon),
              static_cast<T (*)(std::size_t, const T*, const T*)>(&detail::dot_neon)};
#endif
    default:
      return {static_cast<void (*)(std::size_t, T, const T*, T*)>(&axpy_scalar),
              static_cast<T (*)(std::size_t, const T*, const T*)>(&dot_scalar)};
  }
}

template <typename T>
const KernelTable<T>& table_for(Isa isa) {
  static const KernelTable<T> scalar = make_table<T>(Isa::scalar);
  static const KernelTable<T> avx2 = make_table<T>(Isa::avx2);
  static const KernelTable<T> neon = make_table<T>(Isa::neon);
  switch (isa) {
    case Isa::avx2:
      return avx2;
    case Isa::neon:
      return neon;
    default:
      return scalar;
  }
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

Isa detected_isa() { return probe(); }

Isa active_isa() { return active().load(std::memory_order_relaxed); }

bool isa_available(Isa isa) { return cpu_supports(isa); }

void set_active_isa(Isa isa) {
  if (!cpu_supports(isa)) {
    throw std::invalid_argument("ISA '" + std::string(isa_name(isa)) +
                                "' is not available in this build or on this CPU");
  }
  active().store(isa, std::memory_order_relaxed);
}

template <typename T>
const KernelTable<T>& kernels() {
  return table_for<T>(active_isa());
}

template <typename T>
const KernelTable<T>& kernels_for(Isa isa) {
  if (!cpu_supports(isa)) {
    throw std::invalid_argument("ISA '" + std::string(isa_name(isa)) + "' is not available");
  }
  return table_for<T>(isa);
}

template const KernelTable<float>& kernels<float>();
template const KernelTable<double>& kernels<double>();
template const KernelTable<float>& kernels_for<float>(Isa);
template const KernelTable<double>& kernels_for<double>(Isa);

}  // namespace lkca::simd
