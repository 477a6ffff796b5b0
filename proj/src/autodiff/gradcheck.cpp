// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "lkca/autodiff.hpp"

namespace lkca::ad {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

GradientMap<double> finite_diff(const std::function<double()>& f,
                                std::span<const ParamRef<double>> params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff: step must be positive");
  GradientMap<double> out;
  for (const ParamRef<double>& p : params) {
    Tensor<double>& t = *p.tensor;
    Tensor<double> g(t.shape());
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = f();
      t[i] = saved - h;
      const double down = f();
      t[i] = saved;
      g[i] = (up - down) / (2.0 * h);
    }
    out.emplace(p.name, std::move(g));
  }
  return out;
}

bool GradCheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const GroupReport& g) { return g.pass; });
}

const GroupReport* GradCheckReport::worst() const {
  const GroupReport* w = nullptr;
  for (const GroupReport& g : groups) {
    if (w == nullptr || (!g.pass && w->pass) ||
        (g.pass == w->pass && g.max_rel_error > w->max_rel_error)) {
      w = &g;
    }
  }
  return w;
}

GradCheckReport compare_gradients(const GradientMap<double>& analytic,
                                  const GradientMap<double>& numeric, double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  for (const auto& [name, a] : analytic) {
    GroupReport g{name, a.numel(), 0.0, true};
    auto it = numeric.find(name);
    if (it == numeric.end() || it->second.shape() != a.shape()) {
      g.pass = false;
      g.max_rel_error = INFINITY;
    } else {
      for (std::size_t i = 0; i < a.numel(); ++i) {
        const double e = relative_error(a[i], it->second[i]);
        // NaN compares false, so test the failing direction explicitly.
        if (!(e <= g.max_rel_error)) g.max_rel_error = e;
      }
      g.pass = g.max_rel_error <= tolerance;
    }
    report.groups.push_back(std::move(g));
  }
  for (const auto& [name, n] : numeric) {
    if (!analytic.contains(name)) {
      report.groups.push_back(GroupReport{name, n.numel(), INFINITY, false});
    }
  }
  return report;
}

GradCheckReport grad_check(std::span<const ParamRef<double>> params, const LossBuilder& build,
                           double tolerance, double h,
                           const std::function<void(Tape<double>&)>& configure) {
  Tape<double> tape;
  if (configure) configure(tape);
  const Var loss = build(tape);
  GradientMap<double> all = tape.backward(loss);
  GradientMap<double> analytic;
  for (const ParamRef<double>& p : params) {
    auto it = all.find(p.name);
    if (it != all.end()) analytic.emplace(p.name, std::move(it->second));
  }
  const auto f = [&build]() {
    Tape<double> t;
    const Var l = build(t);
    return t.value(l)[0];
  };
  return compare_gradients(analytic, finite_diff(f, params, h), tolerance);
}

}  // namespace lkca::ad
