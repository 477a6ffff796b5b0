// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lkca/autodiff.hpp"
#include "lkca/model.hpp"
#include "lkca/tensor.hpp"

namespace lkca {

/// Images [n, H, W, C] in [0, 1] and integer labels.
struct Dataset {
  TensorF images;
  std::vector<int> labels;
  /// Bar offset per sample for synthetic data; empty otherwise.
  std::vector<std::size_t> offsets;

  std::size_t size() const { return labels.size(); }
  /// Throws DimensionError on count mismatch or std::out_of_range on a bad label.
  void validate(std::size_t num_classes) const;
};

/// Mean over the batch of -sum target * log softmax(logits), target (1 - eps)
/// on the true class and eps / (K - 1) elsewhere.
template <Real T>
T cross_entropy_smoothed(const Tensor<T>& logits, std::span<const int> labels, T eps);

template <Real T>
struct AdamWState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
  std::uint64_t step = 0;
  std::map<std::string, Tensor<T>> m;
  std::map<std::string, Tensor<T>> v;
};

/// Decay applies to matrices and kernels only; layer-norm scales and offsets,
/// biases and other rank-1 tensors are exempt.
bool decays(const Shape& shape);

/// theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta), bias-corrected moments.
template <Real T>
void adamw_step(std::span<const ad::ParamRef<T>> params, const ad::GradientMap<T>& grads,
                AdamWState<T>& state, double lr);

struct Schedule {
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 0;
  double base_lr = 1e-3;
  double min_lr = 0.0;
};

/// Linear ramp 0 -> base_lr over the warmup, then cosine annealing to min_lr.
/// Steps past total_steps return min_lr.
double cosine_lr(std::size_t step, const Schedule& s);

/// Horizontal (label 0) or vertical (label 1) bar of thickness 2 on a
/// grid x grid single-channel image, noise sigma `noise` clipped to [0, 1].
/// Sample i has label i % 2. Offsets are drawn uniformly from `allowed_offsets`
/// (all of 0..grid-2 when empty).
Dataset gen_stripes(std::size_t n, std::size_t grid, std::uint64_t seed,
                    std::span<const std::size_t> allowed_offsets = {}, double noise = 0.05);

class IdxError : public std::runtime_error {
 public:
  enum class Kind { bad_magic, truncated, unsupported_type, trailing_bytes };
  IdxError(Kind kind, std::size_t offset, const std::string& detail);
  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }
  /// Message without the offset suffix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Kind kind_;
  std::size_t offset_;
  std::string detail_;
};

struct IdxArray {
  Shape shape;
  std::vector<std::uint8_t> data;
};

IdxArray parse_idx(std::span<const std::uint8_t> bytes);
IdxArray read_idx(const std::filesystem::path& path);
/// Rank-3 [n, H, W] (one channel) or rank-4 [n, H, W, C] file, scaled by 1/255.
TensorF load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);

/// Index of the largest entry per row; ties go to the lowest index.
std::vector<int> argmax_rows(const TensorF& logits);

double evaluate(const VisionModel<float>& model, const Dataset& data, std::size_t batch_size = 64);

enum class DataSource { stripes, idx };

struct TrainConfig {
  ModelConfig model;
  std::size_t batch_size = 16;
  std::size_t total_steps = 500;
  std::uint64_t seed = 0;
  double label_smoothing = 0.1;
  double base_lr = 1e-3;
  double min_lr = 1e-5;
  double weight_decay = 0.05;
  double warmup_fraction = 0.1;
  /// Accuracy columns are filled every eval_every steps and at the last step.
  std::size_t eval_every = 50;

  DataSource data = DataSource::stripes;
  std::size_t train_samples = 64;
  std::size_t test_samples = 64;
  /// "all", or "even" to train on even offsets and test on odd ones.
  std::string stripe_offsets = "all";
  double stripe_noise = 0.05;
  std::string train_images, train_labels, test_images, test_labels;

  /// Written at the end of train_loop when non-empty.
  std::string metrics_path;
  std::string checkpoint_path;

  void validate() const;
  Schedule schedule() const;
};

struct MetricRow {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> train_acc;
  std::optional<double> test_acc;
};

struct TrainResult {
  std::vector<MetricRow> history;
  VisionModel<float> model;
};

/// Train and test sets described by the config.
std::pair<Dataset, Dataset> load_datasets(const TrainConfig& cfg);

/// Deterministic given the config: init from seed, Fisher-Yates reshuffle of
/// the training indices each epoch, one AdamW update per step at
/// lr = cosine_lr(step + 1). Writes the metrics CSV and final checkpoint to
/// the configured paths.
TrainResult train_loop(const TrainConfig& cfg, const Dataset& train, const Dataset& test);

std::string metrics_csv(std::span<const MetricRow> history);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> history);

}  // namespace lkca
