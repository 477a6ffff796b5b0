// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "lkca/bench.hpp"
#include "lkca/cli.hpp"
#include "lkca/ops.hpp"

namespace lkca::cli {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Runs `body`, mapping exceptions onto the exit-code contract.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

template <Real T>
LKCALayer<T> random_layer(std::size_t gh, std::size_t gw, std::size_t d, SeededRng& rng) {
  LKCAKernel<T> kernel(rand_normal<T>(rng, {2 * gh - 1, 2 * gw - 1}, T(0), T(1)), gh, gw);
  const T ws = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));
  ValueProjection<T> value(rand_normal<T>(rng, {d, d}, T(0), ws), rand_normal<T>(rng, {d}, T(0), T(1)));
  return LKCALayer<T>{std::move(kernel), std::move(value), View::attention};
}

template <Real T>
int equiv_impl(const EquivOptions& opt, std::size_t gh, std::size_t gw, std::ostream& out) {
  const bool f32 = std::is_same_v<T, float>;
  const bool spectral = spectral_view_available();
  SeededRng rng(opt.seed);
  std::size_t ok = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.cases; ++i) {
    LKCALayer<T> layer = random_layer<T>(gh, gw, opt.dim, rng);
    const Tensor<T> x = rand_normal<T>(rng, {opt.batch, gh * gw, opt.dim}, T(0), T(1));
    const Tensor<T> ref = forward_attention_view(x, layer);
    const double scale = 1.0 + static_cast<double>(max_abs(ref));
    const double conv = static_cast<double>(max_abs_diff(forward_conv_view(x, layer), ref));
    bool pass = conv <= (f32 ? 1e-5 * scale : 1e-10);
    worst = std::max(worst, conv);
    out << "case " << i << ": convolution max deviation " << fmt("%.3e", conv);
    if (spectral) {
      const double sp = static_cast<double>(max_abs_diff(forward_spectral_view(x, layer), ref));
      pass = pass && sp <= 1e-4 * scale;
      worst = std::max(worst, sp);
      out << ", spectral max deviation " << fmt("%.3e", sp);
    }
    out << (pass ? "  ok" : "  FAIL") << "\n";
    ok += pass;
  }
  out << "equiv: " << ok << "/" << opt.cases << " cases within tolerance (" << opt.precision
      << ", grid " << gh << "x" << gw << ", dim " << opt.dim << ", batch " << opt.batch
      << (spectral ? ", views attention/convolution/spectral" : ", views attention/convolution")
      << "), worst " << fmt("%.3e", worst) << "\n";
  return ok == opt.cases ? kExitOk : kExitFailure;
}

void print_config(const ParsedConfig& cfg, std::ostream& out) {
  out << "# configuration\n" << describe_config(cfg);
}

}  // namespace

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  const auto part = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 6) return 0;
    return std::stoul(s);
  };
  if (x != std::string::npos) {
    const std::size_t h = part(text.substr(0, x)), w = part(text.substr(x + 1));
    if (h > 0 && w > 0) return {h, w};
  }
  throw UsageError("--grid expects GhxGw with positive integers, e.g. 4x4 or 3x5; got '" + text + "'");
}

int cmd_equiv(const EquivOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto [gh, gw] = parse_grid(opt.grid);
    if (opt.dim == 0 || opt.batch == 0 || opt.cases == 0) {
      throw UsageError("--dim, --batch and --cases must be positive");
    }
    if (opt.precision == "f32") return equiv_impl<float>(opt, gh, gw, out);
    if (opt.precision == "f64") return equiv_impl<double>(opt, gh, gw, out);
    throw UsageError("--precision must be f32 or f64, got '" + opt.precision + "'");
  });
}

int cmd_grad_check(const GradCheckOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ParsedConfig cfg = read_config(opt.config);
    print_config(cfg, out);
    const ModelConfig& mc = cfg.train.model;
    SeededRng rng(cfg.train.seed);
    VisionModel<double> model = make_model<double>(mc, rng);
    // Move every tensor off its structured init so no gradient is trivially zero.
    for (auto& p : parameters(model)) {
      *p.tensor = add(*p.tensor, rand_normal<double>(rng, p.tensor->shape(), 0.0, 0.1));
    }
    const std::size_t batch = 2;
    const TensorD images = rand_uniform<double>(rng, {batch, mc.image_h, mc.image_w, mc.channels}, 0.0, 1.0);
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % mc.num_classes);
    const double eps = cfg.train.label_smoothing;
    const std::vector<ad::ParamRef<double>> params = parameters(model);
    std::function<void(ad::Tape<double>&)> configure;
    if (opt.inject_fault) {
      configure = [](ad::Tape<double>& t) { t.set_adjoint_fault(ad::Op::matmul, 1.5); };
      out << "# fault injected: matmul adjoints scaled by 1.5\n";
    }
    const double tol = 1e-5;
    const ad::GradCheckReport report = ad::grad_check(
        params,
        [&](ad::Tape<double>& t) { return t.cross_entropy(record_model(t, model, images), labels, eps); },
        tol, 1e-4, configure);
    for (const ad::GroupReport& g : report.groups) {
      out << g.name << "  elements " << g.elements << "  max_rel_error " << fmt("%.3e", g.max_rel_error)
          << (g.pass ? "  ok" : "  FAIL") << "\n";
    }
    const ad::GroupReport* worst = report.worst();
    out << "grad-check: " << (report.passed() ? "PASS" : "FAIL") << " (" << report.groups.size()
        << " groups, tolerance " << fmt("%.0e", tol);
    if (worst != nullptr) out << ", worst " << worst->name << " " << fmt("%.3e", worst->max_rel_error);
    out << ")\n";
    return report.passed() ? kExitOk : kExitFailure;
  });
}

int cmd_train(const std::filesystem::path& config, const std::filesystem::path& out_dir,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ParsedConfig cfg = read_config(config);
    if (out_dir.empty()) throw UsageError("--out is required");
    print_config(cfg, out);
    std::filesystem::create_directories(out_dir);
    cfg.train.metrics_path = (out_dir / "metrics.csv").string();
    cfg.train.checkpoint_path = (out_dir / "checkpoint.bin").string();
    const auto [train, test] = load_datasets(cfg.train);
    out << "# data: " << train.size() << " train, " << test.size() << " test samples\n";
    const TrainResult r = train_loop(cfg.train, train, test);
    for (const MetricRow& row : r.history) {
      if (!row.train_acc) continue;
      out << "step " << row.step << "  lr " << fmt("%.3e", row.lr) << "  loss " << fmt("%.6f", row.loss)
          << "  train_acc " << fmt("%.4f", *row.train_acc);
      if (row.test_acc) out << "  test_acc " << fmt("%.4f", *row.test_acc);
      out << "\n";
    }
    out << "wrote " << cfg.train.metrics_path << "\nwrote " << cfg.train.checkpoint_path << "\n";
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ParsedConfig cfg = read_config(opt.config);
    if (opt.checkpoint.empty()) throw UsageError("--checkpoint is required");
    print_config(cfg, out);
    VisionModel<float> model = zero_model<float>(cfg.train.model);
    load_checkpoint(opt.checkpoint, model);
    Dataset data;
    if (!opt.data.empty()) {
      const auto comma = opt.data.find(',');
      if (comma == std::string::npos || comma == 0 || comma + 1 == opt.data.size()) {
        throw UsageError("--data expects images.idx,labels.idx; got '" + opt.data + "'");
      }
      data.images = load_idx_images(opt.data.substr(0, comma));
      data.labels = load_idx_labels(opt.data.substr(comma + 1));
    } else {
      data = load_datasets(cfg.train).second;
      if (data.size() == 0) throw UsageError("no evaluation data: pass --data or set test_images/test_labels");
    }
    data.validate(cfg.train.model.num_classes);
    const double acc = evaluate(model, data);
    const auto correct = static_cast<std::size_t>(std::llround(acc * static_cast<double>(data.size())));
    out << "accuracy " << fmt("%.6f", acc) << " (" << correct << "/" << data.size() << ")\n";
    return kExitOk;
  });
}

int cmd_params(const std::filesystem::path& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ParsedConfig cfg = read_config(config);
    print_config(cfg, out);
    const VisionModel<float> model = zero_model<float>(cfg.train.model);
    std::uint64_t registry = 0;
    for (const ParamGroupCount& g : param_breakdown(model)) {
      out << g.name << "  " << shape_str(g.shape) << "  " << g.elements << "\n";
      registry += g.elements;
    }
    const std::uint64_t analytic = count_model_params(cfg.train.model);
    out << "total " << analytic << "\n";
    if (analytic != registry) {
      err << "error: closed-form count " << analytic << " differs from registry sum " << registry << "\n";
      return kExitFailure;
    }
    return kExitOk;
  });
}

int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.out.empty()) throw UsageError("--out is required");
    std::vector<BenchCase> cases;
    try {
      cases = read_bench_cases(opt.cases);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    if (cases.empty()) throw UsageError("no cases in " + opt.cases.string());
    const SuiteReport rep = run_suite(cases, opt.seed);
    write_bench_csv(opt.out, rep.results);
    bool ok = rep.mismatches.empty();
    for (const BenchResult& r : rep.results) {
      const BenchCase& c = r.bench_case;
      out << c.grid_h << "x" << c.grid_w << " dim " << c.dim << " batch " << c.batch << " "
          << view_name(c.view) << ": ";
      if (r.skipped) {
        out << "skipped (" << *r.skipped << ")\n";
        continue;
      }
      out << "min " << fmt("%.3e", r.min_s) << " s  mean " << fmt("%.3e", r.mean_s) << " s  macs "
          << r.macs_measured << " (analytic " << r.macs_analytic << ")\n";
      if (c.view != View::spectral && r.macs_measured != r.macs_analytic) {
        err << "error: measured MACs differ from the analytic count\n";
        ok = false;
      }
    }
    for (const std::string& m : rep.mismatches) err << "error: output mismatch: " << m << "\n";
    out << "wrote " << opt.out.string() << "\n";
    return ok ? kExitOk : kExitFailure;
  });
}

}  // namespace lkca::cli
