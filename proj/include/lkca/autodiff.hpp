// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lkca/layer.hpp"
#include "lkca/ops.hpp"
#include "lkca/tensor.hpp"

namespace lkca::ad {

/// Primitive applications a Tape can record.
enum class Op : std::uint8_t {
  parameter,
  constant,
  matmul,
  batched_matmul,
  add,
  mul,
  scale,
  layer_norm,
  gelu,
  softmax_rows,
  correlate_2d,
  grid_fold,
  grid_unfold,
  unroll,
  mean_tokens,
  split_heads,
  merge_heads,
  reshape,
  sum,
  cross_entropy,
  opaque,  // value computed outside the tape; no adjoint
};

std::string_view op_name(Op op);

/// Thrown when backward has to propagate through a primitive without an adjoint.
class UnsupportedOpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id;
};

/// Parameter name -> gradient of the same shape.
template <Real T>
using GradientMap = std::map<std::string, Tensor<T>>;

/// Reverse-mode record of primitive applications. Nodes are appended in
/// evaluation order, so every input id precedes its consumer.
template <Real T>
class Tape {
 public:
  Var parameter(std::string name, Tensor<T> value);
  Var constant(Tensor<T> value);

  /// x[..., k] W[k, n] when `b` is rank 2; a[m, k] b[batch, k, n] when `a` is
  /// rank 2 and `b` rank 3 (shared left operand).
  Var matmul(Var a, Var b);
  /// a[B, m, k] b[B, k, n], or a b^T per batch with b stored [B, n, k].
  Var batched_matmul(Var a, Var b, bool transpose_b);
  /// Broadcasting add; b's shape must be a suffix of a's.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, T factor);
  Var layer_norm(Var x, Var gamma, Var beta, T eps = T(kLayerNormEps));
  Var gelu(Var x);
  Var softmax_rows(Var x);
  Var correlate_2d(Var input, Var kernel, std::size_t pad_h, std::size_t pad_w);
  Var grid_fold(Var x, std::size_t grid_h, std::size_t grid_w);
  Var grid_unfold(Var g, std::size_t batch, std::size_t dim);
  /// LKCA kernel [2Gh-1, 2Gw-1] -> score matrix [N, N].
  Var unroll(Var kernel, std::size_t grid_h, std::size_t grid_w);
  /// [b, N, D] -> [b, D], mean over the token axis.
  Var mean_tokens(Var x);
  /// [b, N, D] -> [b*heads, N, D/heads]
  Var split_heads(Var x, std::size_t heads);
  /// [b*heads, N, hd] -> [b, N, heads*hd]
  Var merge_heads(Var x, std::size_t batch);
  Var reshape(Var x, Shape shape);
  /// Sum of all elements, rank-0 result.
  Var sum(Var x);
  /// Label-smoothed cross-entropy, mean over the batch; rank-0 result.
  Var cross_entropy(Var logits, std::vector<int> labels, T smoothing);
  /// Records a value computed elsewhere. Backward through it raises
  /// UnsupportedOpError if any input needs a gradient.
  Var opaque(std::string name, Tensor<T> value, std::vector<Var> inputs);

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  Op op(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Gradients of a scalar `loss` with respect to every parameter node.
  GradientMap<T> backward(Var loss) const;

  /// Re-evaluates every recorded primitive from its recorded inputs and
  /// reports whether all outputs reproduce bitwise. Opaque nodes are skipped.
  bool replay() const;

  /// Every input id precedes its consumer.
  bool topologically_ordered() const;

  /// Test hook: multiplies every adjoint contribution emitted by `op` by
  /// `factor`. Used as a negative control for gradient checks.
  void set_adjoint_fault(Op op, T factor) {
    fault_op_ = op;
    fault_factor_ = factor;
    fault_enabled_ = true;
  }

 private:
  struct Attrs {
    std::size_t a = 0;
    std::size_t b = 0;
    bool flag = false;
    T scalar = T(0);
    Shape shape;
    std::vector<int> labels;
    std::string name;
  };

  struct Node {
    Op op;
    std::vector<std::size_t> inputs;
    Tensor<T> value;
    Attrs attrs;
    bool requires_grad = false;
    LayerNormStats<T> ln_stats;
    Tensor<T> saved;
  };

  Var push(Op op, std::vector<std::size_t> inputs, Attrs attrs);
  Tensor<T> evaluate(const Node& node, LayerNormStats<T>* stats, Tensor<T>* saved) const;
  void accumulate_adjoints(const Node& node, const Tensor<T>& grad,
                           std::vector<Tensor<T>>& grads, std::vector<bool>& has_grad) const;

  std::vector<Node> nodes_;
  bool fault_enabled_ = false;
  Op fault_op_ = Op::parameter;
  T fault_factor_ = T(1);
};

/// Records the LKCA mixer on a tape as constituent primitives.
/// Attention view: unroll + matmul. Convolution view: fold + correlate + unfold.
/// Spectral view is recorded as an opaque node (forward only).
template <Real T>
Var record_lkca(Tape<T>& tape, Var x, Var kernel, Var value_weight, Var value_bias,
                std::size_t grid_h, std::size_t grid_w, View view);

/// Named, mutable view of a parameter tensor.
template <Real T>
struct ParamRef {
  std::string name;
  Tensor<T>* tensor;
};

/// |a - b| / max(1, |a|, |b|)
double relative_error(double a, double b);

/// Central differences (f(theta + h e) - f(theta - h e)) / 2h per coordinate.
/// Each coordinate is perturbed in place and restored.
GradientMap<double> finite_diff(const std::function<double()>& f,
                                std::span<const ParamRef<double>> params, double h = 1e-4);

struct GroupReport {
  std::string name;
  std::size_t elements = 0;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<GroupReport> groups;

  bool passed() const;
  const GroupReport* worst() const;
};

/// Per-group comparison of two gradient maps. A name present in only one
/// map is reported as a failing group.
GradCheckReport compare_gradients(const GradientMap<double>& analytic,
                                  const GradientMap<double>& numeric, double tolerance);

/// Builds the loss on a fresh tape from the current parameter values.
/// Parameters must be registered on the tape under the names in `params`.
using LossBuilder = std::function<Var(Tape<double>&)>;

/// Tape gradients vs central differences of the same builder, in f64.
/// `configure` (optional) runs on the tape used for the analytic pass.
GradCheckReport grad_check(std::span<const ParamRef<double>> params, const LossBuilder& build,
                           double tolerance, double h = 1e-4,
                           const std::function<void(Tape<double>&)>& configure = {});

}  // namespace lkca::ad
