// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "lkca/train.hpp"

namespace lkca {

template <Real T>
T cross_entropy_smoothed(const Tensor<T>& logits, std::span<const int> labels, T eps) {
  ad::Tape<T> tape;
  const ad::Var loss = tape.cross_entropy(tape.constant(logits),
                                          std::vector<int>(labels.begin(), labels.end()), eps);
  return tape.value(loss)[0];
}

bool decays(const Shape& shape) { return shape.size() >= 2; }

template <Real T>
void adamw_step(std::span<const ad::ParamRef<T>> params, const ad::GradientMap<T>& grads,
                AdamWState<T>& state, double lr) {
  // Validate everything before touching any parameter.
  for (const ad::ParamRef<T>& p : params) {
    auto it = grads.find(p.name);
    if (it == grads.end()) throw std::invalid_argument("adamw_step: no gradient for '" + p.name + "'");
    if (it->second.shape() != p.tensor->shape()) {
      throw DimensionError("adamw_step: gradient for '" + p.name + "' has shape " +
                           shape_str(it->second.shape()) + ", parameter has " +
                           shape_str(p.tensor->shape()));
    }
    auto m = state.m.find(p.name);
    if (m != state.m.end() && m->second.shape() != p.tensor->shape()) {
      throw DimensionError("adamw_step: moment for '" + p.name + "' has shape " +
                           shape_str(m->second.shape()));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (const ad::ParamRef<T>& p : params) {
    Tensor<T>& theta = *p.tensor;
    const Tensor<T>& g = grads.at(p.name);
    Tensor<T>& m = state.m.try_emplace(p.name, theta.shape()).first->second;
    Tensor<T>& v = state.v.try_emplace(p.name, theta.shape()).first->second;
    const double wd = decays(theta.shape()) ? state.weight_decay : 0.0;
    for (std::size_t i = 0; i < theta.numel(); ++i) {
      const double gi = g[i];
      const double mi = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      const double vi = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = (mi / c1) / (std::sqrt(vi / c2) + state.eps) + wd * theta[i];
      theta[i] = static_cast<T>(theta[i] - lr * update);
    }
  }
}

double cosine_lr(std::size_t step, const Schedule& s) {
  if (step < s.warmup_steps) {
    return s.base_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  if (step >= s.total_steps) return s.min_lr;
  const double progress = static_cast<double>(step - s.warmup_steps) /
                          static_cast<double>(s.total_steps - s.warmup_steps);
  return s.min_lr + 0.5 * (s.base_lr - s.min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

template float cross_entropy_smoothed(const TensorF&, std::span<const int>, float);
template double cross_entropy_smoothed(const TensorD&, std::span<const int>, double);
template void adamw_step(std::span<const ad::ParamRef<float>>, const ad::GradientMap<float>&,
                         AdamWState<float>&, double);
template void adamw_step(std::span<const ad::ParamRef<double>>, const ad::GradientMap<double>&,
                         AdamWState<double>&, double);

}  // namespace lkca
