// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "lkca/train.hpp"

namespace lkca::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flag value, unreadable or malformed config. Maps to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ParsedConfig {
  TrainConfig train;
  /// Keys that appeared in the file; everything else is defaulted.
  std::set<std::string> explicit_keys;
};

/// `key = value` lines, `#` comments. Keys are the ModelConfig and TrainConfig
/// field names (see config_keys()). Unknown or repeated keys, unparsable values
/// and configs failing validation throw UsageError naming the line or key.
ParsedConfig parse_config(const std::string& text);
ParsedConfig read_config(const std::filesystem::path& path);

/// Every accepted key in print order.
const std::vector<std::string>& config_keys();

/// One `key = value` line per key; defaulted keys are tagged `# default`.
std::string describe_config(const ParsedConfig& cfg);

struct EquivOptions {
  std::string grid = "4x4";
  std::size_t dim = 8;
  std::size_t batch = 2;
  std::size_t cases = 10;
  std::uint64_t seed = 0;
  std::string precision = "f32";
};

struct GradCheckOptions {
  std::filesystem::path config;
  /// Negative control: scales one adjoint so the check must fail.
  bool inject_fault = false;
};

struct EvalOptions {
  std::filesystem::path config;
  std::filesystem::path checkpoint;
  /// `images.idx,labels.idx`; the config's test set when empty.
  std::string data;
};

struct BenchOptions {
  std::filesystem::path cases;
  std::filesystem::path out;
  std::uint64_t seed = 0;
};

/// Parses `GhxGw`; throws UsageError unless both are positive integers.
std::pair<std::size_t, std::size_t> parse_grid(const std::string& text);

int cmd_equiv(const EquivOptions& opt, std::ostream& out, std::ostream& err);
int cmd_grad_check(const GradCheckOptions& opt, std::ostream& out, std::ostream& err);
int cmd_train(const std::filesystem::path& config, const std::filesystem::path& out_dir,
              std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);
int cmd_params(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err);

/// Full command-line entry point: `lkca <command> [flags]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lkca::cli
