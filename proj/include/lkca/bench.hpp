// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lkca/layer.hpp"
#include "lkca/rng.hpp"
#include "lkca/tensor.hpp"

namespace lkca {

struct BenchCase {
  std::size_t grid_h = 8;
  std::size_t grid_w = 8;
  std::size_t dim = 32;
  std::size_t batch = 1;
  View view = View::attention;
  std::size_t repetitions = 5;
  std::size_t warmup_reps = 1;

  /// Throws std::invalid_argument (zero extents, repetitions < 3, warmup_reps < 1).
  void validate() const;
};

struct BenchResult {
  BenchCase bench_case;
  /// Set when the view is not built in; all timing fields are then empty.
  std::optional<std::string> skipped;
  std::vector<double> samples_s;
  double mean_s = 0.0;
  double std_s = 0.0;  ///< sample standard deviation (n - 1)
  double min_s = 0.0;
  std::uint64_t macs_measured = 0;
  std::uint64_t macs_analytic = 0;
  /// Rough bytes held by inputs, outputs and view-specific scratch.
  std::uint64_t peak_bytes_estimate = 0;
  /// Output of the last timed call (f32), kept for cross-view comparison.
  TensorF output;
};

/// Draws a fixed layer and input from `rng`, runs warmup_reps untimed calls,
/// then `repetitions` timed calls on steady_clock. Throws std::logic_error if
/// the MAC count changes between repetitions.
BenchResult run_case(const BenchCase& c, SeededRng& rng);

struct SuiteReport {
  std::vector<BenchResult> results;
  /// One line per pair of cases with the same (grid, dim, batch) whose outputs
  /// disagree beyond 1e-5 * (1 + max|out|) (1e-4 when the spectral view is involved).
  std::vector<std::string> mismatches;
  double max_deviation = 0.0;
};

/// Runs every case in input order. Inputs depend only on `seed` and the
/// (grid, dim, batch) of a case, so views of the same shape see identical data.
SuiteReport run_suite(const std::vector<BenchCase>& cases, std::uint64_t seed = 0);

/// Header `grid_h,grid_w,dim,batch,view,reps,mean_s,std_s,min_s,macs_measured,macs_analytic`
/// and one row per result; skipped cases keep empty time and measured fields.
std::string bench_csv(const std::vector<BenchResult>& results);
void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchResult>& results);

/// Comma-separated `grid_h,grid_w,dim,batch,view,reps,warmup` per line. Blank
/// lines, `#` comments and a header line starting with `grid_h` are ignored.
/// Throws std::invalid_argument naming the line on malformed input.
std::vector<BenchCase> parse_bench_cases(const std::string& text);
std::vector<BenchCase> read_bench_cases(const std::filesystem::path& path);

}  // namespace lkca
