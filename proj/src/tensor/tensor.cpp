// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include "lkca/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace lkca {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <Real T>
void check_finite(const Tensor<T>& t, const char* op) {
  const auto data = t.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw NumericError(std::string(op) + ": non-finite value at flat index " +
                         std::to_string(i) + " of " + shape_str(t.shape()));
    }
  }
}

template <Real T>
T max_abs(const Tensor<T>& t) {
  T m = T(0);
  for (T v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

template <Real T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_abs_diff: shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
  T m = T(0);
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template void check_finite(const Tensor<float>&, const char*);
template void check_finite(const Tensor<double>&, const char*);
template float max_abs(const Tensor<float>&);
template double max_abs(const Tensor<double>&);
template float max_abs_diff(const Tensor<float>&, const Tensor<float>&);
template double max_abs_diff(const Tensor<double>&, const Tensor<double>&);

}  // namespace lkca
