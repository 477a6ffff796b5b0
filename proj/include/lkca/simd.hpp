// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

namespace lkca::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

/// Best ISA the running CPU supports among those compiled in.
Isa detected_isa();

/// ISA the dispatcher currently routes to. Defaults to detected_isa().
Isa active_isa();

/// Force dispatch to `isa` (must be compiled in and supported). Used by the
/// equivalence tests and the bench harness. Not thread-safe against
/// concurrent kernel calls.
void set_active_isa(Isa isa);

bool isa_available(Isa isa);

/// Inner-loop kernels shared by GEMM and 2D correlation.
template <typename T>
struct KernelTable {
  /// y[i] += a * x[i]
  void (*axpy)(std::size_t n, T a, const T* x, T* y);
  /// sum_i x[i] * y[i]
  T (*dot)(std::size_t n, const T* x, const T* y);
};

template <typename T>
const KernelTable<T>& kernels();

template <typename T>
const KernelTable<T>& kernels_for(Isa isa);

/// RAII override of the active ISA.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_active_isa(isa); }
  ~ScopedIsa() { set_active_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

}  // namespace lkca::simd
