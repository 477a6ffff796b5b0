// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace lkca {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Raised when operand extents violate an operation's contract.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation would produce NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
concept Real = std::is_same_v<T, float> || std::is_same_v<T, double>;

/// Dense row-major array. The element type is the tensor's precision.
template <Real T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
    }
  }

  Tensor(Shape shape, std::initializer_list<T> data)
      : Tensor(std::move(shape), std::vector<T>(data)) {}

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), value); }

  static Tensor eye(std::size_t n) {
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) out.data_[i * n + i] = T(1);
    return out;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Same data, new extents. Element count must not change.
  Tensor reshaped(Shape shape) const& {
    check_reshape(shape);
    return Tensor(std::move(shape), data_);
  }
  Tensor reshaped(Shape shape) && {
    check_reshape(shape);
    return Tensor(std::move(shape), std::move(data_));
  }

  template <Real U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  void check_reshape(const Shape& shape) const {
    if (shape_numel(shape) != data_.size()) {
      throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

/// Multiply-accumulate tally. Only the MAC-bearing kernels (GEMM and the
/// in-bounds taps of cross-correlation) add to it.
struct MacCounter {
  bool enabled = true;
  std::uint64_t macs = 0;

  void add(std::uint64_t n) noexcept {
    if (enabled) macs += n;
  }
};

inline void count_macs(MacCounter* counter, std::uint64_t n) noexcept {
  if (counter != nullptr) counter->add(n);
}

/// Throws NumericError naming `op` if any element is NaN or Inf.
template <Real T>
void check_finite(const Tensor<T>& t, const char* op);

template <Real T>
T max_abs(const Tensor<T>& t);

template <Real T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace lkca
