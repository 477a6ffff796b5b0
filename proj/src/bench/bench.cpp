// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include "lkca/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace lkca {

namespace {

std::uint64_t next_pow2(std::uint64_t n) {
  std::uint64_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::uint64_t scratch_floats(const BenchCase& c) {
  const std::uint64_t n = c.grid_h * c.grid_w, bd = c.batch * c.dim;
  switch (c.view) {
    case View::attention:
      return n * n;
    case View::convolution:
      return bd * (3 * c.grid_h - 2) * (3 * c.grid_w - 2) + 2 * bd * n;
    case View::spectral: {
      const std::uint64_t f = next_pow2(3 * c.grid_h - 2) * next_pow2(3 * c.grid_w - 2);
      return 2 * f * (bd + 1);
    }
  }
  return 0;
}

std::uint64_t shape_key(std::uint64_t seed, const BenchCase& c) {
  std::uint64_t k = seed;
  for (std::uint64_t v : {c.grid_h, c.grid_w, c.dim, c.batch}) {
    k = (k ^ v) * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL;
  }
  return k;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::size_t parse_count(const std::string& field, const std::string& what, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(field, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != field.size() || field.empty() || field[0] == '-') {
    throw std::invalid_argument("bench cases line " + std::to_string(line) + ": " + what +
                                " '" + field + "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

void BenchCase::validate() const {
  if (grid_h == 0 || grid_w == 0 || dim == 0 || batch == 0) {
    throw std::invalid_argument("bench case needs positive grid, dim and batch");
  }
  if (repetitions < 3) throw std::invalid_argument("bench case needs at least 3 repetitions");
  if (warmup_reps < 1) throw std::invalid_argument("bench case needs at least 1 warmup repetition");
}

BenchResult run_case(const BenchCase& c, SeededRng& rng) {
  c.validate();
  BenchResult r;
  r.bench_case = c;
  r.macs_analytic = lkca_flop_count(c.grid_h, c.grid_w, c.dim, c.batch) / 2;
  if (c.view == View::spectral && !spectral_view_available()) {
    r.skipped = "spectral view not built (configure with LKCA_WITH_FFTW=ON and FFTW3 installed)";
    return r;
  }
  LKCALayer<float> layer =
      make_lkca_layer<float>(c.grid_h, c.grid_w, c.dim, rng, KernelInit::trunc_normal, c.view);
  const TensorF x = rand_normal<float>(rng, {c.batch, c.grid_h * c.grid_w, c.dim}, 0.f, 1.f);
  r.peak_bytes_estimate = sizeof(float) * (3 * x.numel() + scratch_floats(c) +
                                           layer.kernel.weights().numel() + c.dim * (c.dim + 1));

  for (std::size_t i = 0; i < c.warmup_reps; ++i) r.output = forward(x, layer);
  using clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < c.repetitions; ++i) {
    MacCounter macs;
    const auto t0 = clock::now();
    r.output = forward(x, layer, &macs);
    const auto t1 = clock::now();
    r.samples_s.push_back(std::chrono::duration<double>(t1 - t0).count());
    if (i == 0) {
      r.macs_measured = macs.macs;
    } else if (macs.macs != r.macs_measured) {
      throw std::logic_error("MAC count changed between repetitions");
    }
  }
  const double n = static_cast<double>(r.samples_s.size());
  r.mean_s = std::accumulate(r.samples_s.begin(), r.samples_s.end(), 0.0) / n;
  r.min_s = *std::min_element(r.samples_s.begin(), r.samples_s.end());
  double ss = 0.0;
  for (double s : r.samples_s) ss += (s - r.mean_s) * (s - r.mean_s);
  r.std_s = std::sqrt(ss / (n - 1.0));
  return r;
}

SuiteReport run_suite(const std::vector<BenchCase>& cases, std::uint64_t seed) {
  if (cases.empty()) throw std::invalid_argument("run_suite needs at least one case");
  for (const BenchCase& c : cases) c.validate();
  SuiteReport report;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, std::size_t> first;
  for (const BenchCase& c : cases) {
    SeededRng rng(shape_key(seed, c));
    report.results.push_back(run_case(c, rng));
    const BenchResult& r = report.results.back();
    if (r.skipped) continue;
    const auto key = std::make_tuple(c.grid_h, c.grid_w, c.dim, c.batch);
    auto [it, fresh] = first.try_emplace(key, report.results.size() - 1);
    if (fresh) continue;
    const BenchResult& ref = report.results[it->second];
    const double dev = max_abs_diff(r.output, ref.output);
    const double scale = 1.0 + std::max(max_abs(r.output), max_abs(ref.output));
    const bool spectral = c.view == View::spectral || ref.bench_case.view == View::spectral;
    report.max_deviation = std::max(report.max_deviation, dev / scale);
    if (dev > (spectral ? 1e-4 : 1e-5) * scale) {
      report.mismatches.push_back(std::string(view_name(ref.bench_case.view)) + " vs " +
                                  std::string(view_name(c.view)) + " at grid " +
                                  std::to_string(c.grid_h) + "x" + std::to_string(c.grid_w) +
                                  " dim " + std::to_string(c.dim) + " batch " +
                                  std::to_string(c.batch) + ": max deviation " + fmt("%.3g", dev));
    }
  }
  return report;
}

std::string bench_csv(const std::vector<BenchResult>& results) {
  std::string out = "grid_h,grid_w,dim,batch,view,reps,mean_s,std_s,min_s,macs_measured,macs_analytic\n";
  for (const BenchResult& r : results) {
    const BenchCase& c = r.bench_case;
    out += std::to_string(c.grid_h) + "," + std::to_string(c.grid_w) + "," + std::to_string(c.dim) +
           "," + std::to_string(c.batch) + "," + std::string(view_name(c.view)) + "," +
           std::to_string(c.repetitions) + ",";
    if (r.skipped) {
      out += ",,,,";
    } else {
      out += fmt("%.9g", r.mean_s) + "," + fmt("%.9g", r.std_s) + "," + fmt("%.9g", r.min_s) + "," +
             std::to_string(r.macs_measured) + ",";
    }
    out += std::to_string(r.macs_analytic) + "\n";
  }
  return out;
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchResult>& results) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string csv = bench_csv(results);
  f.write(csv.data(), static_cast<std::streamsize>(csv.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::vector<BenchCase> parse_bench_cases(const std::string& text) {
  std::vector<BenchCase> cases;
  std::istringstream in(text);
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty() || s.rfind("grid_h", 0) == 0) continue;
    std::vector<std::string> f;
    std::istringstream fields(s);
    for (std::string part; std::getline(fields, part, ',');) f.push_back(trim(part));
    if (f.size() != 7) {
      throw std::invalid_argument("bench cases line " + std::to_string(line) + ": expected 7 fields " +
                                  "(grid_h,grid_w,dim,batch,view,reps,warmup), got " +
                                  std::to_string(f.size()));
    }
    BenchCase c;
    c.grid_h = parse_count(f[0], "grid_h", line);
    c.grid_w = parse_count(f[1], "grid_w", line);
    c.dim = parse_count(f[2], "dim", line);
    c.batch = parse_count(f[3], "batch", line);
    const auto view = parse_view(f[4]);
    if (!view) throw std::invalid_argument("bench cases line " + std::to_string(line) + ": unknown view '" + f[4] + "'");
    c.view = *view;
    c.repetitions = parse_count(f[5], "reps", line);
    c.warmup_reps = parse_count(f[6], "warmup", line);
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("bench cases line " + std::to_string(line) + ": " + e.what());
    }
    cases.push_back(c);
  }
  return cases;
}

std::vector<BenchCase> read_bench_cases(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open bench cases file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_bench_cases(ss.str());
}

}  // namespace lkca
