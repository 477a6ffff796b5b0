// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "lkca/autodiff.hpp"

namespace lkca::ad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::parameter: return "parameter";
    case Op::constant: return "constant";
    case Op::matmul: return "matmul";
    case Op::batched_matmul: return "batched_matmul";
    case Op::add: return "add";
    case Op::mul: return "mul";
    case Op::scale: return "scale";
    case Op::layer_norm: return "layer_norm";
    case Op::gelu: return "gelu";
    case Op::softmax_rows: return "softmax_rows";
    case Op::correlate_2d: return "correlate_2d";
    case Op::grid_fold: return "grid_fold";
    case Op::grid_unfold: return "grid_unfold";
    case Op::unroll: return "unroll";
    case Op::mean_tokens: return "mean_tokens";
    case Op::split_heads: return "split_heads";
    case Op::merge_heads: return "merge_heads";
    case Op::reshape: return "reshape";
    case Op::sum: return "sum";
    case Op::cross_entropy: return "cross_entropy";
    case Op::opaque: return "opaque";
  }
  return "unknown";
}

namespace {

[[noreturn]] void tape_dim_error(Op op, const std::string& what) {
  throw DimensionError(std::string(op_name(op)) + ": " + what);
}

// [b, N, heads*hd] <-> [b*heads, N, hd]
template <Real T>
Tensor<T> split_heads_impl(const Tensor<T>& x, std::size_t heads) {
  if (x.rank() != 3 || heads == 0 || x.dim(2) % heads != 0) {
    tape_dim_error(Op::split_heads, "cannot split " + shape_str(x.shape()) + " into " +
                                        std::to_string(heads) + " heads");
  }
  const std::size_t b = x.dim(0), n = x.dim(1), hd = x.dim(2) / heads;
  Tensor<T> out({b * heads, n, hd});
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t c = 0; c < hd; ++c) out.at(bi * heads + h, t, c) = x.at(bi, t, h * hd + c);
  return out;
}

template <Real T>
Tensor<T> merge_heads_impl(const Tensor<T>& x, std::size_t b) {
  if (x.rank() != 3 || b == 0 || x.dim(0) % b != 0) {
    tape_dim_error(Op::merge_heads, "cannot merge " + shape_str(x.shape()) + " into batch " +
                                        std::to_string(b));
  }
  const std::size_t heads = x.dim(0) / b, n = x.dim(1), hd = x.dim(2);
  Tensor<T> out({b, n, heads * hd});
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t c = 0; c < hd; ++c) out.at(bi, t, h * hd + c) = x.at(bi * heads + h, t, c);
  return out;
}

}  // namespace

template <Real T>
Var Tape<T>::parameter(std::string name, Tensor<T> value) {
  for (const Node& n : nodes_) {
    if (n.op == Op::parameter && n.attrs.name == name) {
      throw std::invalid_argument("duplicate parameter '" + name + "' on tape");
    }
  }
  Node node{Op::parameter, {}, std::move(value), {}, true, {}, {}};
  node.attrs.name = std::move(name);
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

template <Real T>
Var Tape<T>::constant(Tensor<T> value) {
  nodes_.push_back(Node{Op::constant, {}, std::move(value), {}, false, {}, {}});
  return {nodes_.size() - 1};
}

template <Real T>
Var Tape<T>::push(Op op, std::vector<std::size_t> inputs, Attrs attrs) {
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw std::out_of_range("tape input refers to an unrecorded value");
  }
  Node node{op, std::move(inputs), {}, std::move(attrs), false, {}, {}};
  node.value = evaluate(node, &node.ln_stats, &node.saved);
  node.requires_grad = std::any_of(node.inputs.begin(), node.inputs.end(),
                                   [&](std::size_t in) { return nodes_[in].requires_grad; });
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

template <Real T>
Tensor<T> Tape<T>::evaluate(const Node& node, LayerNormStats<T>* stats, Tensor<T>* saved) const {
  const auto in = [&](std::size_t k) -> const Tensor<T>& { return nodes_[node.inputs[k]].value; };
  const Attrs& at = node.attrs;
  switch (node.op) {
    case Op::parameter:
    case Op::constant:
    case Op::opaque:
      return node.value;
    case Op::matmul: {
      const Tensor<T>& a = in(0);
      const Tensor<T>& b = in(1);
      if (b.rank() == 2) {
        if (a.rank() < 1 || a.shape().back() != b.dim(0)) {
          tape_dim_error(node.op, "cannot multiply " + shape_str(a.shape()) + " by " +
                                      shape_str(b.shape()));
        }
        const std::size_t k = b.dim(0), n = b.dim(1), m = a.numel() / std::max<std::size_t>(k, 1);
        Shape out_shape = a.shape();
        out_shape.back() = n;
        Tensor<T> out(out_shape);
        gemm_accumulate(m, n, k, a.ptr(), false, b.ptr(), false, out.ptr());
        check_finite(out, "matmul");
        return out;
      }
      if (a.rank() == 2 && b.rank() == 3 && a.dim(1) == b.dim(1)) {
        const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(2), batch = b.dim(0);
        Tensor<T> out({batch, m, n});
        for (std::size_t bi = 0; bi < batch; ++bi) {
          gemm_accumulate(m, n, k, a.ptr(), false, b.ptr() + bi * k * n, false,
                          out.ptr() + bi * m * n);
        }
        check_finite(out, "matmul");
        return out;
      }
      tape_dim_error(node.op, "cannot multiply " + shape_str(a.shape()) + " by " +
                                  shape_str(b.shape()));
    }
    case Op::batched_matmul: {
      const Tensor<T>& a = in(0);
      const Tensor<T>& b = in(1);
      const bool tb = at.flag;
      if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) ||
          a.dim(2) != (tb ? b.dim(2) : b.dim(1))) {
        tape_dim_error(node.op, "cannot multiply " + shape_str(a.shape()) + " by " +
                                    shape_str(b.shape()) + (tb ? " (transposed)" : ""));
      }
      const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
      const std::size_t n = tb ? b.dim(1) : b.dim(2);
      Tensor<T> out({batch, m, n});
      for (std::size_t bi = 0; bi < batch; ++bi) {
        gemm_accumulate(m, n, k, a.ptr() + bi * m * k, false, b.ptr() + bi * k * n, tb,
                        out.ptr() + bi * m * n);
      }
      check_finite(out, "batched_matmul");
      return out;
    }
    case Op::add:
      return lkca::add(in(0), in(1));
    case Op::mul:
      return lkca::mul(in(0), in(1));
    case Op::scale:
      return lkca::scale(in(0), at.scalar);
    case Op::layer_norm:
      return lkca::layer_norm(in(0), in(1), in(2), at.scalar, stats);
    case Op::gelu:
      return lkca::gelu(in(0));
    case Op::softmax_rows:
      return lkca::softmax_rows(in(0));
    case Op::correlate_2d:
      return cross_correlate_2d(in(0), in(1), at.a, at.b);
    case Op::grid_fold:
      return lkca::grid_fold(in(0), at.a, at.b);
    case Op::grid_unfold:
      return lkca::grid_unfold(in(0), at.a, at.b);
    case Op::unroll:
      return unroll_kernel_to_attention(LKCAKernel<T>(in(0), at.a, at.b)).scores;
    case Op::mean_tokens: {
      const Tensor<T>& x = in(0);
      if (x.rank() != 3 || x.dim(1) == 0) {
        tape_dim_error(node.op, "expects [b, N>0, D], got " + shape_str(x.shape()));
      }
      const std::size_t b = x.dim(0), n = x.dim(1), d = x.dim(2);
      Tensor<T> out({b, d});
      for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t c = 0; c < d; ++c) out.at(bi, c) += x.at(bi, t, c);
      const T inv = T(1) / static_cast<T>(n);
      for (T& v : out.data()) v *= inv;
      return out;
    }
    case Op::split_heads:
      return split_heads_impl(in(0), at.a);
    case Op::merge_heads:
      return merge_heads_impl(in(0), at.a);
    case Op::reshape:
      return in(0).reshaped(at.shape);
    case Op::sum: {
      T s = T(0);
      for (T v : in(0).data()) s += v;
      return Tensor<T>(Shape{}, {s});
    }
    case Op::cross_entropy: {
      const Tensor<T>& logits = in(0);
      if (logits.rank() != 2 || logits.dim(1) < 2 || logits.dim(0) != at.labels.size()) {
        tape_dim_error(node.op, "logits " + shape_str(logits.shape()) + " with " +
                                    std::to_string(at.labels.size()) + " labels");
      }
      const std::size_t b = logits.dim(0), k = logits.dim(1);
      const T eps = at.scalar;
      const T off = eps / static_cast<T>(k - 1);
      Tensor<T> probs = lkca::softmax_rows(logits);
      T total = T(0);
      for (std::size_t bi = 0; bi < b; ++bi) {
        const int label = at.labels[bi];
        if (label < 0 || static_cast<std::size_t>(label) >= k) {
          throw std::out_of_range("cross_entropy: label " + std::to_string(label) +
                                  " out of range [0, " + std::to_string(k) + ")");
        }
        const T* row = logits.ptr() + bi * k;
        const T mx = *std::max_element(row, row + k);
        T se = T(0);
        for (std::size_t c = 0; c < k; ++c) se += std::exp(row[c] - mx);
        const T lse = mx + std::log(se);
        for (std::size_t c = 0; c < k; ++c) {
          const T target = static_cast<std::size_t>(label) == c ? T(1) - eps : off;
          total -= target * (row[c] - lse);
        }
      }
      if (saved != nullptr) *saved = std::move(probs);
      Tensor<T> out(Shape{}, {total / static_cast<T>(b)});
      check_finite(out, "cross_entropy");
      return out;
    }
  }
  throw std::logic_error("unknown tape op");
}

template <Real T>
void Tape<T>::accumulate_adjoints(const Node& node, const Tensor<T>& g,
                                  std::vector<Tensor<T>>& grads,
                                  std::vector<bool>& has_grad) const {
  const auto in = [&](std::size_t k) -> const Tensor<T>& { return nodes_[node.inputs[k]].value; };
  const auto wants = [&](std::size_t k) { return nodes_[node.inputs[k]].requires_grad; };
  const bool faulty = fault_enabled_ && fault_op_ == node.op;
  const auto emit = [&](std::size_t k, Tensor<T> contribution) {
    if (faulty) {
      for (T& v : contribution.data()) v *= fault_factor_;
    }
    const std::size_t id = node.inputs[k];
    if (contribution.shape() != nodes_[id].value.shape()) {
      throw std::logic_error(std::string("adjoint of ") + std::string(op_name(node.op)) +
                             " produced " + shape_str(contribution.shape()) + " for input " +
                             shape_str(nodes_[id].value.shape()));
    }
    if (!has_grad[id]) {
      grads[id] = std::move(contribution);
      has_grad[id] = true;
    } else {
      Tensor<T>& acc = grads[id];
      for (std::size_t i = 0; i < acc.numel(); ++i) acc[i] += contribution[i];
    }
  };
  const Attrs& at = node.attrs;

  switch (node.op) {
    case Op::parameter:
    case Op::constant:
      return;
    case Op::opaque:
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        if (wants(k)) {
          throw UnsupportedOpError("no adjoint registered for opaque op '" + at.name + "'");
        }
      }
      return;
    case Op::matmul: {
      const Tensor<T>& a = in(0);
      const Tensor<T>& b = in(1);
      if (b.rank() == 2) {
        const std::size_t k = b.dim(0), n = b.dim(1), m = a.numel() / std::max<std::size_t>(k, 1);
        if (wants(0)) {
          Tensor<T> ga(a.shape());
          gemm_accumulate(m, k, n, g.ptr(), false, b.ptr(), true, ga.ptr());
          emit(0, std::move(ga));
        }
        if (wants(1)) {
          Tensor<T> gb(b.shape());
          gemm_accumulate(k, n, m, a.ptr(), true, g.ptr(), false, gb.ptr());
          emit(1, std::move(gb));
        }
      } else {
        const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(2), batch = b.dim(0);
        if (wants(0)) {
          Tensor<T> ga(a.shape());
          for (std::size_t bi = 0; bi < batch; ++bi)
            gemm_accumulate(m, k, n, g.ptr() + bi * m * n, false, b.ptr() + bi * k * n, true,
                            ga.ptr());
          emit(0, std::move(ga));
        }
        if (wants(1)) {
          Tensor<T> gb(b.shape());
          for (std::size_t bi = 0; bi < batch; ++bi)
            gemm_accumulate(k, n, m, a.ptr(), true, g.ptr() + bi * m * n, false,
                            gb.ptr() + bi * k * n);
          emit(1, std::move(gb));
        }
      }
      return;
    }
    case Op::batched_matmul: {
      const Tensor<T>& a = in(0);
      const Tensor<T>& b = in(1);
      const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
      const std::size_t n = g.dim(2);
      if (wants(0)) {
        Tensor<T> ga(a.shape());
        for (std::size_t bi = 0; bi < batch; ++bi)
          gemm_accumulate(m, k, n, g.ptr() + bi * m * n, false, b.ptr() + bi * k * n, !at.flag,
                          ga.ptr() + bi * m * k);
        emit(0, std::move(ga));
      }
      if (wants(1)) {
        Tensor<T> gb(b.shape());
        for (std::size_t bi = 0; bi < batch; ++bi) {
          if (at.flag) {
            // b stored [n, k]: gb = g^T a
            gemm_accumulate(n, k, m, g.ptr() + bi * m * n, true, a.ptr() + bi * m * k, false,
                            gb.ptr() + bi * n * k);
          } else {
            gemm_accumulate(k, n, m, a.ptr() + bi * m * k, true, g.ptr() + bi * m * n, false,
                            gb.ptr() + bi * k * n);
          }
        }
        emit(1, std::move(gb));
      }
      return;
    }
    case Op::add:
      if (wants(0)) emit(0, g);
      if (wants(1)) emit(1, reduce_to_suffix(g, in(1).shape()));
      return;
    case Op::mul:
      if (wants(0)) emit(0, lkca::mul(g, in(1)));
      if (wants(1)) emit(1, lkca::mul(g, in(0)));
      return;
    case Op::scale:
      if (wants(0)) emit(0, lkca::scale(g, at.scalar));
      return;
    case Op::layer_norm: {
      LayerNormGrads<T> lg = layer_norm_backward(g, in(0), in(1), node.ln_stats);
      if (wants(0)) emit(0, std::move(lg.x));
      if (wants(1)) emit(1, std::move(lg.gamma));
      if (wants(2)) emit(2, std::move(lg.beta));
      return;
    }
    case Op::gelu:
      if (wants(0)) emit(0, gelu_backward(in(0), g));
      return;
    case Op::softmax_rows:
      if (wants(0)) emit(0, softmax_rows_backward(node.value, g));
      return;
    case Op::correlate_2d: {
      const Tensor<T>& x = in(0);
      const Tensor<T>& k = in(1);
      if (wants(0)) emit(0, cross_correlate_2d_input_grad(g, k, at.a, at.b, x.dim(1), x.dim(2)));
      if (wants(1)) {
        emit(1, cross_correlate_2d_kernel_grad(g, x, k.dim(0), k.dim(1), at.a, at.b));
      }
      return;
    }
    case Op::grid_fold:
      if (wants(0)) emit(0, lkca::grid_unfold(g, in(0).dim(0), in(0).dim(2)));
      return;
    case Op::grid_unfold:
      if (wants(0)) emit(0, lkca::grid_fold(g, in(0).dim(1), in(0).dim(2)));
      return;
    case Op::unroll: {
      if (!wants(0)) return;
      const std::size_t gh = at.a, gw = at.b, n = gh * gw;
      Tensor<T> gk(in(0).shape());
      for (std::size_t i = 0; i < gh; ++i)
        for (std::size_t j = 0; j < gw; ++j) {
          const T* row = g.ptr() + (i * gw + j) * n;
          for (std::size_t p = 0; p < gh; ++p)
            for (std::size_t q = 0; q < gw; ++q)
              gk.at(gh - 1 - i + p, gw - 1 - j + q) += row[p * gw + q];
        }
      emit(0, std::move(gk));
      return;
    }
    case Op::mean_tokens: {
      if (!wants(0)) return;
      const Tensor<T>& x = in(0);
      const std::size_t b = x.dim(0), n = x.dim(1), d = x.dim(2);
      const T inv = T(1) / static_cast<T>(n);
      Tensor<T> gx(x.shape());
      for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t c = 0; c < d; ++c) gx.at(bi, t, c) = g.at(bi, c) * inv;
      emit(0, std::move(gx));
      return;
    }
    case Op::split_heads:
      if (wants(0)) emit(0, merge_heads_impl(g, in(0).dim(0)));
      return;
    case Op::merge_heads:
      if (wants(0)) emit(0, split_heads_impl(g, in(0).dim(0) / at.a));
      return;
    case Op::reshape:
      if (wants(0)) emit(0, g.reshaped(in(0).shape()));
      return;
    case Op::sum:
      if (wants(0)) emit(0, Tensor<T>::full(in(0).shape(), g[0]));
      return;
    case Op::cross_entropy: {
      if (!wants(0)) return;
      const Tensor<T>& probs = node.saved;
      const std::size_t b = probs.dim(0), k = probs.dim(1);
      const T eps = at.scalar;
      const T off = eps / static_cast<T>(k - 1);
      const T coef = g[0] / static_cast<T>(b);
      Tensor<T> gl(probs.shape());
      for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t c = 0; c < k; ++c) {
          const T target = static_cast<std::size_t>(at.labels[bi]) == c ? T(1) - eps : off;
          gl.at(bi, c) = (probs.at(bi, c) - target) * coef;
        }
      emit(0, std::move(gl));
      return;
    }
  }
}

template <Real T>
GradientMap<T> Tape<T>::backward(Var loss) const {
  if (loss.id >= nodes_.size()) throw std::out_of_range("backward: unknown loss value");
  if (nodes_[loss.id].value.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                shape_str(nodes_[loss.id].value.shape()));
  }
  std::vector<Tensor<T>> grads(loss.id + 1);
  std::vector<bool> has_grad(loss.id + 1, false);
  grads[loss.id] = Tensor<T>::full(nodes_[loss.id].value.shape(), T(1));
  has_grad[loss.id] = true;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    if (!has_grad[id] || !nodes_[id].requires_grad) continue;
    accumulate_adjoints(nodes_[id], grads[id], grads, has_grad);
  }
  GradientMap<T> out;
  for (std::size_t id = 0; id <= loss.id; ++id) {
    const Node& n = nodes_[id];
    if (n.op != Op::parameter) continue;
    out.emplace(n.attrs.name, has_grad[id] ? grads[id] : Tensor<T>(n.value.shape()));
  }
  for (std::size_t id = loss.id + 1; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.op == Op::parameter) out.emplace(n.attrs.name, Tensor<T>(n.value.shape()));
  }
  return out;
}

template <Real T>
bool Tape<T>::replay() const {
  for (const Node& node : nodes_) {
    if (node.op == Op::parameter || node.op == Op::constant || node.op == Op::opaque) continue;
    LayerNormStats<T> stats;
    Tensor<T> saved;
    if (!(evaluate(node, &stats, &saved) == node.value)) return false;
  }
  return true;
}

template <Real T>
bool Tape<T>::topologically_ordered() const {
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    for (std::size_t in : nodes_[id].inputs)
      if (in >= id) return false;
  }
  return true;
}

template <Real T>
Var Tape<T>::matmul(Var a, Var b) {
  return push(Op::matmul, {a.id, b.id}, {});
}

template <Real T>
Var Tape<T>::batched_matmul(Var a, Var b, bool transpose_b) {
  Attrs at;
  at.flag = transpose_b;
  return push(Op::batched_matmul, {a.id, b.id}, std::move(at));
}

template <Real T>
Var Tape<T>::add(Var a, Var b) {
  return push(Op::add, {a.id, b.id}, {});
}

template <Real T>
Var Tape<T>::mul(Var a, Var b) {
  return push(Op::mul, {a.id, b.id}, {});
}

template <Real T>
Var Tape<T>::scale(Var a, T factor) {
  Attrs at;
  at.scalar = factor;
  return push(Op::scale, {a.id}, std::move(at));
}

template <Real T>
Var Tape<T>::layer_norm(Var x, Var gamma, Var beta, T eps) {
  Attrs at;
  at.scalar = eps;
  return push(Op::layer_norm, {x.id, gamma.id, beta.id}, std::move(at));
}

template <Real T>
Var Tape<T>::gelu(Var x) {
  return push(Op::gelu, {x.id}, {});
}

template <Real T>
Var Tape<T>::softmax_rows(Var x) {
  return push(Op::softmax_rows, {x.id}, {});
}

template <Real T>
Var Tape<T>::correlate_2d(Var input, Var kernel, std::size_t pad_h, std::size_t pad_w) {
  Attrs at;
  at.a = pad_h;
  at.b = pad_w;
  return push(Op::correlate_2d, {input.id, kernel.id}, std::move(at));
}

template <Real T>
Var Tape<T>::grid_fold(Var x, std::size_t grid_h, std::size_t grid_w) {
  Attrs at;
  at.a = grid_h;
  at.b = grid_w;
  return push(Op::grid_fold, {x.id}, std::move(at));
}

template <Real T>
Var Tape<T>::grid_unfold(Var g, std::size_t batch, std::size_t dim) {
  Attrs at;
  at.a = batch;
  at.b = dim;
  return push(Op::grid_unfold, {g.id}, std::move(at));
}

template <Real T>
Var Tape<T>::unroll(Var kernel, std::size_t grid_h, std::size_t grid_w) {
  Attrs at;
  at.a = grid_h;
  at.b = grid_w;
  return push(Op::unroll, {kernel.id}, std::move(at));
}

template <Real T>
Var Tape<T>::mean_tokens(Var x) {
  return push(Op::mean_tokens, {x.id}, {});
}

template <Real T>
Var Tape<T>::split_heads(Var x, std::size_t heads) {
  Attrs at;
  at.a = heads;
  return push(Op::split_heads, {x.id}, std::move(at));
}

template <Real T>
Var Tape<T>::merge_heads(Var x, std::size_t batch) {
  Attrs at;
  at.a = batch;
  return push(Op::merge_heads, {x.id}, std::move(at));
}

template <Real T>
Var Tape<T>::reshape(Var x, Shape shape) {
  Attrs at;
  at.shape = std::move(shape);
  return push(Op::reshape, {x.id}, std::move(at));
}

template <Real T>
Var Tape<T>::sum(Var x) {
  return push(Op::sum, {x.id}, {});
}

template <Real T>
Var Tape<T>::cross_entropy(Var logits, std::vector<int> labels, T smoothing) {
  if (!(smoothing >= T(0) && smoothing < T(1))) {
    throw std::invalid_argument("cross_entropy: smoothing must be in [0, 1)");
  }
  Attrs at;
  at.scalar = smoothing;
  at.labels = std::move(labels);
  return push(Op::cross_entropy, {logits.id}, std::move(at));
}

template <Real T>
Var Tape<T>::opaque(std::string name, Tensor<T> value, std::vector<Var> inputs) {
  Node node{Op::opaque, {}, std::move(value), {}, false, {}, {}};
  node.attrs.name = std::move(name);
  for (Var v : inputs) {
    if (v.id >= nodes_.size()) throw std::out_of_range("opaque input refers to an unrecorded value");
    node.inputs.push_back(v.id);
    node.requires_grad = node.requires_grad || nodes_[v.id].requires_grad;
  }
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

template <Real T>
Var record_lkca(Tape<T>& tape, Var x, Var kernel, Var value_weight, Var value_bias,
                std::size_t grid_h, std::size_t grid_w, View view) {
  if (view == View::spectral) {
    LKCALayer<T> layer{LKCAKernel<T>(tape.value(kernel), grid_h, grid_w),
                       ValueProjection<T>(tape.value(value_weight), tape.value(value_bias)),
                       View::spectral};
    return tape.opaque("lkca_spectral", forward_spectral_view(tape.value(x), layer),
                       {x, kernel, value_weight, value_bias});
  }
  const Var v = tape.add(tape.matmul(x, value_weight), value_bias);
  if (view == View::attention) {
    return tape.matmul(tape.unroll(kernel, grid_h, grid_w), v);
  }
  const std::size_t batch = tape.value(x).dim(0), dim = tape.value(x).dim(2);
  const Var planes = tape.grid_fold(v, grid_h, grid_w);
  const Var mixed = tape.correlate_2d(planes, kernel, grid_h - 1, grid_w - 1);
  return tape.grid_unfold(mixed, batch, dim);
}

template class Tape<float>;
template class Tape<double>;
template Var record_lkca(Tape<float>&, Var, Var, Var, Var, std::size_t, std::size_t, View);
template Var record_lkca(Tape<double>&, Var, Var, Var, Var, std::size_t, std::size_t, View);

}  // namespace lkca::ad
