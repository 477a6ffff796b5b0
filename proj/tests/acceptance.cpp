// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>

#include "lkca/cli.hpp"
#include "lkca/ops.hpp"
#include "lkca/train.hpp"

namespace {

using namespace lkca;
namespace fs = std::filesystem;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

template <Real T>
LKCALayer<T> random_layer(SeededRng& rng, std::size_t gh, std::size_t gw, std::size_t d) {
  LKCAKernel<T> k(rand_normal<T>(rng, {2 * gh - 1, 2 * gw - 1}, T(0), T(1)), gh, gw);
  const T s = T(1) / std::sqrt(static_cast<T>(d));
  ValueProjection<T> v(rand_normal<T>(rng, {d, d}, T(0), s), rand_normal<T>(rng, {d}, T(0), T(1)));
  return {std::move(k), std::move(v), View::attention};
}

Outcome view_equivalence_fuzz() {
  const double t0 = cpu_seconds();
  SeededRng rng(1001);
  const bool spectral = spectral_view_available();
  double worst32 = 0, worst64 = 0, worst_sp = 0;
  bool ok = true;
  for (int i = 0; i < 200; ++i) {
    const std::size_t gh = 1 + rng.uniform_index(16), gw = 1 + rng.uniform_index(16);
    const std::size_t d = 1 + rng.uniform_index(64), b = 1 + rng.uniform_index(4);
    const LKCALayer<double> l64 = random_layer<double>(rng, gh, gw, d);
    const TensorD x64 = rand_normal<double>(rng, {b, gh * gw, d}, 0.0, 1.0);
    const TensorD ref64 = forward_attention_view(x64, l64);
    const double dev64 = max_abs_diff(forward_conv_view(x64, l64), ref64);
    worst64 = std::max(worst64, dev64);
    ok = ok && dev64 <= 1e-10;

    const LKCALayer<float> l32{
        LKCAKernel<float>(l64.kernel.weights().cast<float>(), gh, gw),
        ValueProjection<float>(l64.value.weight().cast<float>(), l64.value.bias().cast<float>()),
        View::attention};
    const TensorF x32 = x64.cast<float>();
    const TensorF ref32 = forward_attention_view(x32, l32);
    const double scale = 1.0 + max_abs(ref32);
    const double dev32 = max_abs_diff(forward_conv_view(x32, l32), ref32) / scale;
    worst32 = std::max(worst32, dev32);
    ok = ok && dev32 <= 1e-5;
    if (spectral) {
      const double sp = max_abs_diff(forward_spectral_view(x32, l32), ref32) / scale;
      worst_sp = std::max(worst_sp, sp);
      ok = ok && sp <= 1e-4;
    }
  }
  const double cpu = cpu_seconds() - t0;
  ok = ok && cpu < 60.0;
  std::string detail = "200 cases, f32 " + fmt("%.2e", worst32) + " (scaled), f64 " + fmt("%.2e", worst64);
  detail += spectral ? ", spectral " + fmt("%.2e", worst_sp) : ", spectral not built";
  return {ok, detail + ", " + fmt("%.1f", cpu) + " s CPU"};
}

Outcome toeplitz_structure() {
  SeededRng rng(1002);
  std::size_t checked = 0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t gh = 1 + rng.uniform_index(12), gw = 1 + rng.uniform_index(12);
    const LKCAKernel<float> k(rand_normal<float>(rng, {2 * gh - 1, 2 * gw - 1}, 0.f, 1.f), gh, gw);
    const TensorF s = unroll_kernel_to_attention(k).scores;
    for (std::size_t a = 0; a < gh; ++a)
      for (std::size_t b = 0; b < gw; ++b)
        for (std::size_t p = 0; p < gh; ++p)
          for (std::size_t q = 0; q < gw; ++q) {
            if (s.at(a * gw + b, p * gw + q) != k.weights().at(gh - 1 - a + p, gw - 1 - b + q)) {
              return {false, "mismatch at grid " + std::to_string(gh) + "x" + std::to_string(gw)};
            }
            ++checked;
          }
  }
  return {true, "20 kernels, " + std::to_string(checked) + " entries exact"};
}

Outcome identity_cases() {
  SeededRng rng(1003);
  for (auto [gh, gw] : {std::pair{1, 1}, {3, 3}, {4, 7}, {8, 8}}) {
    const std::size_t d = 5, n = static_cast<std::size_t>(gh * gw);
    LKCALayer<double> layer{LKCAKernel<double>::centered_delta(gh, gw), ValueProjection<double>::identity(d),
                            View::attention};
    const TensorD scores = unroll_kernel_to_attention(layer.kernel).scores;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (scores.at(i, j) != (i == j ? 1.0 : 0.0)) return {false, "delta scores not identity"};
    const TensorD x = rand_normal<double>(rng, {2, n, d}, 0.0, 1.0);
    if (forward_attention_view(x, layer) != x || forward_conv_view(x, layer) != x) {
      return {false, "delta kernel does not reproduce the input"};
    }
    layer.kernel = LKCAKernel<double>(gh, gw);
    const TensorD zero(x.shape());
    if (forward_attention_view(x, layer) != zero || forward_conv_view(x, layer) != zero) {
      return {false, "zero kernel output not zero"};
    }
  }
  return {true, "4 grids, both views exact"};
}

TensorD shift_tokens(const TensorD& x, std::size_t g, int s, int t) {
  TensorD out(x.shape());
  const std::size_t d = x.dim(2);
  for (int i = 0; i < static_cast<int>(g); ++i)
    for (int j = 0; j < static_cast<int>(g); ++j) {
      const int si = i - s, sj = j - t;
      if (si < 0 || sj < 0 || si >= static_cast<int>(g) || sj >= static_cast<int>(g)) continue;
      for (std::size_t c = 0; c < d; ++c) out.at(0, i * g + j, c) = x.at(0, si * g + sj, c);
    }
  return out;
}

Outcome translation_equivariance() {
  SeededRng rng(1004);
  const std::size_t g = 8, d = 4;
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    LKCALayer<double> layer = random_layer<double>(rng, g, g, d);
    layer.value = ValueProjection<double>::identity(d);
    // Random support box; the shift keeps it on the grid.
    const std::size_t r0 = rng.uniform_index(g), r1 = r0 + 1 + rng.uniform_index(g - r0);
    const std::size_t c0 = rng.uniform_index(g), c1 = c0 + 1 + rng.uniform_index(g - c0);
    TensorD x({1, g * g, d});
    for (std::size_t i = r0; i < r1; ++i)
      for (std::size_t j = c0; j < c1; ++j)
        for (std::size_t c = 0; c < d; ++c) x.at(0, i * g + j, c) = rng.normal();
    const int s = static_cast<int>(rng.uniform_index(g - (r1 - r0) + 1)) - static_cast<int>(r0);
    const int t = static_cast<int>(rng.uniform_index(g - (c1 - c0) + 1)) - static_cast<int>(c0);
    const TensorD xs = shift_tokens(x, g, s, t);
    for (View v : {View::attention, View::convolution}) {
      layer.view = v;
      const TensorD out = forward(x, layer), out_s = forward(xs, layer);
      for (int i = 0; i < static_cast<int>(g); ++i)
        for (int j = 0; j < static_cast<int>(g); ++j) {
          const int si = i - s, sj = j - t;
          if (si < 0 || sj < 0 || si >= static_cast<int>(g) || sj >= static_cast<int>(g)) continue;
          for (std::size_t c = 0; c < d; ++c) {
            worst = std::max(worst, std::abs(out_s.at(0, i * g + j, c) - out.at(0, si * g + sj, c)));
          }
        }
    }
  }
  return {worst <= 1e-6, "50 inputs, max deviation " + fmt("%.2e", worst)};
}

Outcome gradient_checks() {
  const double t0 = cpu_seconds();
  SeededRng rng(1005);
  double worst_layer = 0, worst_model = 0;
  bool ok = true;
  for (View view : {View::attention, View::convolution}) {
    LKCALayer<double> layer = random_layer<double>(rng, 3, 3, 4);
    layer.view = view;
    TensorD x = rand_normal<double>(rng, {2, 9, 4}, 0.0, 1.0);
    const TensorD cot = rand_normal<double>(rng, {2, 9, 4}, 0.0, 1.0);
    std::vector<ad::ParamRef<double>> refs{{"x", &x},
                                           {"kernel", &layer.kernel.weights()},
                                           {"value.weight", &layer.value.weight()},
                                           {"value.bias", &layer.value.bias()}};
    const auto loss = [&] {
      const TensorD out = forward(x, layer);
      double s = 0;
      for (std::size_t i = 0; i < out.numel(); ++i) s += out[i] * cot[i];
      return s;
    };
    const ad::GradientMap<double> numeric = ad::finite_diff(loss, refs, 1e-4);
    const LKCAGrads<double> g = backward(x, layer, cot);
    const ad::GradCheckReport closed = ad::compare_gradients(
        {{"x", g.x}, {"kernel", g.kernel}, {"value.weight", g.value_weight}, {"value.bias", g.value_bias}},
        numeric, 1e-6);
    const ad::GradCheckReport tape = ad::grad_check(refs, [&](ad::Tape<double>& t) {
      const ad::Var out = ad::record_lkca(t, t.parameter("x", x), t.parameter("kernel", layer.kernel.weights()),
                                          t.parameter("value.weight", layer.value.weight()),
                                          t.parameter("value.bias", layer.value.bias()), 3, 3, view);
      return t.sum(t.mul(out, t.constant(cot)));
    }, 1e-6);
    ok = ok && closed.passed() && tape.passed() && closed.groups.size() == 4 && tape.groups.size() == 4;
    worst_layer = std::max({worst_layer, closed.worst()->max_rel_error, tape.worst()->max_rel_error});
  }
  ModelConfig c;
  c.image_h = c.image_w = 8;
  c.patch_size = 4;
  c.dim = 8;
  c.depth = 2;
  c.block_pattern = "LL";
  c.kernel_init = KernelInit::trunc_normal;
  VisionModel<double> m = make_model<double>(c, rng);
  for (auto& p : parameters(m)) *p.tensor = add(*p.tensor, rand_normal<double>(rng, p.tensor->shape(), 0.0, 0.3));
  const TensorD img = rand_uniform<double>(rng, {2, 8, 8, 1}, 0.0, 1.0);
  const std::vector<int> labels{0, 1};
  const auto refs = parameters(m);
  for (View view : {View::attention, View::convolution}) {
    set_lkca_view(m, view);
    const ad::GradCheckReport r = ad::grad_check(refs, [&](ad::Tape<double>& t) {
      return t.cross_entropy(record_model(t, m, img), labels, 0.1);
    }, 1e-5);
    ok = ok && r.passed() && r.groups.size() == refs.size();
    worst_model = std::max(worst_model, r.worst()->max_rel_error);
  }
  const double cpu = cpu_seconds() - t0;
  ok = ok && cpu < 300.0;
  return {ok, "layer worst " + fmt("%.2e", worst_layer) + " (tol 1e-6), tiny model worst " +
                  fmt("%.2e", worst_model) + " (tol 1e-5), " + fmt("%.1f", cpu) + " s CPU"};
}

Outcome adjoint_equivalence() {
  SeededRng rng(1006);
  double worst = 0;
  for (auto [gh, gw, d, b] : {std::array<std::size_t, 4>{3, 3, 4, 2}, {4, 6, 3, 1}, {5, 2, 5, 3}}) {
    const LKCALayer<double> layer = random_layer<double>(rng, gh, gw, d);
    const TensorD x = rand_normal<double>(rng, {b, gh * gw, d}, 0.0, 1.0);
    const TensorD cot = rand_normal<double>(rng, {b, gh * gw, d}, 0.0, 1.0);
    TensorD grads[2];
    int i = 0;
    for (View view : {View::attention, View::convolution}) {
      ad::Tape<double> t;
      const ad::Var out = ad::record_lkca(t, t.constant(x), t.parameter("kernel", layer.kernel.weights()),
                                          t.parameter("value.weight", layer.value.weight()),
                                          t.parameter("value.bias", layer.value.bias()), gh, gw, view);
      grads[i++] = t.backward(t.sum(t.mul(out, t.constant(cot)))).at("kernel");
    }
    worst = std::max(worst, max_abs_diff(grads[0], grads[1]));
  }
  return {worst <= 1e-10, "3 shapes, max kernel-gradient deviation " + fmt("%.2e", worst)};
}

TrainConfig stripes_config(std::size_t steps) {
  TrainConfig c;
  c.model.image_h = c.model.image_w = 8;
  c.model.patch_size = 1;
  c.model.dim = 32;
  c.model.depth = 2;
  c.model.block_pattern = "LL";
  c.train_samples = 64;
  c.test_samples = 64;
  c.batch_size = 16;
  c.total_steps = steps;
  c.eval_every = 50;
  return c;
}

Outcome lockstep_training() {
  TrainConfig c = stripes_config(100);
  c.eval_every = 1000;
  const auto [train, test] = load_datasets(c);
  c.model.lkca_view = View::attention;
  const TrainResult a = train_loop(c, train, test);
  c.model.lkca_view = View::convolution;
  const TrainResult b = train_loop(c, train, test);
  double worst = 0;
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    const double x = a.history[i].loss, y = b.history[i].loss;
    worst = std::max(worst, std::abs(x - y) / std::max(std::abs(x), std::abs(y)));
  }
  const bool ok = a.history.size() == 100 && b.history.size() == 100 && worst <= 1e-4;
  return {ok, "100 steps, max relative loss gap " + fmt("%.2e", worst)};
}

Outcome overfit_smoke() {
  const double t0 = cpu_seconds();
  const TrainConfig c = stripes_config(500);
  const auto [train, test] = load_datasets(c);
  const TrainResult r = train_loop(c, train, test);
  std::size_t first = 0;
  for (const MetricRow& row : r.history) {
    if (row.train_acc && *row.train_acc == 1.0) {
      first = row.step;
      break;
    }
  }
  const double cpu = cpu_seconds() - t0;
  const double final_acc = r.history.back().train_acc.value_or(0.0);
  const bool ok = first > 0 && final_acc == 1.0 && cpu < 120.0;
  return {ok, "train accuracy 1.0 first at step " + std::to_string(first) + ", final " +
                  fmt("%.3f", final_acc) + ", " + fmt("%.1f", cpu) + " s CPU"};
}

Outcome generalization_smoke() {
  TrainConfig c = stripes_config(2000);
  c.stripe_offsets = "even";
  c.eval_every = 100;
  const auto [train, test] = load_datasets(c);
  const TrainResult r = train_loop(c, train, test);
  double best = 0;
  std::size_t at = 0;
  for (const MetricRow& row : r.history) {
    if (row.test_acc && *row.test_acc >= 0.85 && at == 0) at = row.step;
    if (row.test_acc) best = std::max(best, *row.test_acc);
  }
  const double final_acc = r.history.back().test_acc.value_or(0.0);
  return {at > 0, "held-out offsets: >= 0.85 first at step " + std::to_string(at) + ", best " +
                      fmt("%.3f", best) + ", final " + fmt("%.3f", final_acc)};
}

Outcome accounting() {
  ModelConfig c;
  c.image_h = c.image_w = 16;
  c.patch_size = 4;
  c.dim = 8;
  c.depth = 1;
  c.block_pattern = "L";
  const std::uint64_t closed = count_model_params(c);
  VisionModel<float> m = zero_model<float>(c);
  std::uint64_t registry = 0;
  for (const auto& p : parameters(m)) registry += p.tensor->numel();
  bool ok = closed == 723 && registry == 723;
  SeededRng rng(1010);
  for (int i = 0; i < 10; ++i) {
    const std::size_t gh = 1 + rng.uniform_index(10), gw = 1 + rng.uniform_index(10);
    const std::size_t d = 1 + rng.uniform_index(32), b = rng.uniform_index(4);
    LKCALayer<float> layer = random_layer<float>(rng, gh, gw, d);
    const TensorF x = rand_normal<float>(rng, {b, gh * gw, d}, 0.f, 1.f);
    for (View v : {View::attention, View::convolution}) {
      layer.view = v;
      MacCounter macs;
      forward(x, layer, &macs);
      ok = ok && macs.macs * 2 == count_flops(layer, b);
    }
  }
  return {ok, "closed form " + std::to_string(closed) + ", registry " + std::to_string(registry) +
                  ", MAC counts exact on 10 cases x 2 views"};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome train_determinism() {
  const fs::path dir = fs::temp_directory_path() / "lkca_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "run.cfg";
  std::ofstream(cfg) << "image_h = 8\nimage_w = 8\npatch_size = 1\ndim = 16\ndepth = 2\n"
                        "block_pattern = LA\nnum_heads = 2\ntotal_steps = 60\neval_every = 20\n"
                        "train_samples = 32\ntest_samples = 32\nseed = 3\n";
  std::ostringstream sink;
  const int a = cli::cmd_train(cfg, dir / "a", sink, sink);
  const int b = cli::cmd_train(cfg, dir / "b", sink, sink);
  const std::string ma = slurp(dir / "a" / "metrics.csv"), mb = slurp(dir / "b" / "metrics.csv");
  const bool ok = a == 0 && b == 0 && !ma.empty() && ma == mb &&
                  slurp(dir / "a" / "checkpoint.bin") == slurp(dir / "b" / "checkpoint.bin");
  fs::remove_all(dir);
  return {ok, "two train runs: metrics " + std::string(ma == mb ? "byte-identical" : "differ") + " (" +
                  std::to_string(ma.size()) + " bytes)"};
}

std::vector<std::uint8_t> idx(std::uint8_t type, std::vector<std::uint32_t> dims, std::vector<std::uint8_t> payload) {
  std::vector<std::uint8_t> b{0, 0, type, static_cast<std::uint8_t>(dims.size())};
  for (std::uint32_t d : dims)
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(d >> s));
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

Outcome idx_round_trip() {
  const IdxArray img = parse_idx(idx(0x08, {2, 2, 3}, {0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255}));
  bool ok = img.shape == Shape{2, 2, 3} &&
            img.data == std::vector<std::uint8_t>{0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255};
  const IdxArray lab = parse_idx(idx(0x08, {3}, {9, 0, 7}));
  ok = ok && lab.shape == Shape{3} && lab.data == std::vector<std::uint8_t>{9, 0, 7};

  const auto kind_of = [](const std::vector<std::uint8_t>& bytes) -> std::optional<IdxError::Kind> {
    try {
      parse_idx(bytes);
    } catch (const IdxError& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  std::vector<std::uint8_t> bad_magic = idx(0x08, {1}, {0});
  bad_magic[0] = 0x12;
  const auto k1 = kind_of(bad_magic);
  const auto k2 = kind_of(idx(0x08, {2, 2}, {1, 2, 3}));
  const auto k3 = kind_of(idx(0x0B, {1}, {0, 0}));
  ok = ok && k1 == IdxError::Kind::bad_magic && k2 == IdxError::Kind::truncated &&
       k3 == IdxError::Kind::unsupported_type;
  return {ok, "2 fixtures exact; malformed -> bad magic, truncated, unsupported type"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"view equivalence fuzz", view_equivalence_fuzz},
      {"toeplitz structure", toeplitz_structure},
      {"identity and zero kernels", identity_cases},
      {"translation equivariance", translation_equivariance},
      {"gradient checks", gradient_checks},
      {"adjoint equivalence across views", adjoint_equivalence},
      {"lockstep training across views", lockstep_training},
      {"overfit smoke", overfit_smoke},
      {"generalization to held-out offsets", generalization_smoke},
      {"parameter and MAC accounting", accounting},
      {"training determinism", train_determinism},
      {"IDX parsing", idx_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
