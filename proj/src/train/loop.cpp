// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "lkca/rng.hpp"
#include "lkca/train.hpp"

namespace lkca {

namespace {

constexpr std::uint64_t kDataSalt = 0x6c6b63612d646174ULL;
constexpr std::uint64_t kOrderSalt = 0x6c6b63612d6f7264ULL;

TensorF gather_images(const TensorF& images, std::span<const std::size_t> idx) {
  Shape shape = images.shape();
  const std::size_t stride = shape_numel(shape) / std::max<std::size_t>(shape[0], 1);
  shape[0] = idx.size();
  TensorF out(shape);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::memcpy(out.ptr() + k * stride, images.ptr() + idx[k] * stride, stride * sizeof(float));
  }
  return out;
}

void check_images_match(const Dataset& d, const ModelConfig& m, const char* which) {
  const Shape want{d.images.rank() == 4 ? d.images.dim(0) : 0, m.image_h, m.image_w, m.channels};
  if (d.images.shape() != want) {
    throw DimensionError(std::string(which) + " images " + shape_str(d.images.shape()) +
                         " do not match the model input [n, " + std::to_string(m.image_h) + ", " +
                         std::to_string(m.image_w) + ", " + std::to_string(m.channels) + "]");
  }
}

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::vector<int> argmax_rows(const TensorF& logits) {
  if (logits.rank() != 2) throw DimensionError("argmax_rows expects [b, K], got " + shape_str(logits.shape()));
  std::vector<int> out(logits.dim(0), 0);
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.dim(1); ++k) {
      if (logits.at(b, k) > logits.at(b, best)) best = k;
    }
    out[b] = static_cast<int>(best);
  }
  return out;
}

double evaluate(const VisionModel<float>& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) return 0.0;
  batch_size = std::max<std::size_t>(batch_size, 1);
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    idx.resize(std::min(batch_size, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const std::vector<int> pred = argmax_rows(model_forward(gather_images(data.images, idx), model));
    for (std::size_t k = 0; k < idx.size(); ++k) correct += pred[k] == data.labels[idx[k]];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void TrainConfig::validate() const {
  model.validate();
  if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw std::invalid_argument("label_smoothing must be in [0, 1)");
  }
  if (!(base_lr >= 0.0) || !(min_lr >= 0.0)) throw std::invalid_argument("learning rates must be non-negative");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw std::invalid_argument("warmup_fraction must be in [0, 1]");
  }
  if (eval_every == 0) throw std::invalid_argument("eval_every must be at least 1");
  if (data == DataSource::stripes) {
    if (stripe_offsets != "all" && stripe_offsets != "even") {
      throw std::invalid_argument("stripe_offsets must be 'all' or 'even', got '" + stripe_offsets + "'");
    }
    if (model.image_h != model.image_w || model.channels != 1) {
      throw std::invalid_argument("stripes data needs a square single-channel image");
    }
  } else if (train_images.empty() || train_labels.empty()) {
    throw std::invalid_argument("idx data needs train_images and train_labels");
  } else if (test_images.empty() != test_labels.empty()) {
    throw std::invalid_argument("test_images and test_labels must be given together");
  }
}

Schedule TrainConfig::schedule() const {
  return Schedule{static_cast<std::size_t>(std::llround(warmup_fraction * static_cast<double>(total_steps))),
                  total_steps, base_lr, min_lr};
}

std::pair<Dataset, Dataset> load_datasets(const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.data == DataSource::stripes) {
    const std::size_t grid = cfg.model.image_h;
    std::vector<std::size_t> train_off, test_off;
    if (cfg.stripe_offsets == "even") {
      for (std::size_t o = 0; o + 1 < grid; ++o) (o % 2 == 0 ? train_off : test_off).push_back(o);
    }
    SeededRng root(cfg.seed ^ kDataSalt);
    const std::uint64_t train_seed = root.next_u64(), test_seed = root.next_u64();
    return {gen_stripes(cfg.train_samples, grid, train_seed, train_off, cfg.stripe_noise),
            gen_stripes(cfg.test_samples, grid, test_seed, test_off, cfg.stripe_noise)};
  }
  Dataset train{load_idx_images(cfg.train_images), load_idx_labels(cfg.train_labels), {}};
  Dataset test;
  if (!cfg.test_images.empty()) {
    test = Dataset{load_idx_images(cfg.test_images), load_idx_labels(cfg.test_labels), {}};
  } else {
    test.images = TensorF({0, cfg.model.image_h, cfg.model.image_w, cfg.model.channels});
  }
  return {std::move(train), std::move(test)};
}

TrainResult train_loop(const TrainConfig& cfg, const Dataset& train, const Dataset& test) {
  cfg.validate();
  const ModelConfig& mc = cfg.model;
  train.validate(mc.num_classes);
  test.validate(mc.num_classes);
  check_images_match(train, mc, "training");
  if (test.size() > 0) check_images_match(test, mc, "test");
  if (cfg.total_steps > 0 && train.size() == 0) {
    throw std::invalid_argument("training set is empty");
  }
  if (cfg.total_steps > 0 && mc.num_classes < 2) {
    throw std::invalid_argument("training needs at least 2 classes");
  }

  SeededRng init_rng(cfg.seed);
  TrainResult result{{}, make_model<float>(mc, init_rng)};
  VisionModel<float>& model = result.model;
  const std::vector<ad::ParamRef<float>> params = parameters(model);
  AdamWState<float> opt;
  opt.weight_decay = cfg.weight_decay;
  const Schedule sched = cfg.schedule();

  SeededRng order_rng(cfg.seed ^ kOrderSalt);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::vector<std::size_t> batch(cfg.batch_size);
  std::vector<int> labels(cfg.batch_size);

  for (std::size_t t = 0; t < cfg.total_steps; ++t) {
    for (std::size_t k = 0; k < cfg.batch_size; ++k) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
          std::swap(order[i], order[order_rng.uniform_index(i + 1)]);
        }
        cursor = 0;
      }
      batch[k] = order[cursor++];
      labels[k] = train.labels[batch[k]];
    }
    ad::Tape<float> tape;
    const ad::Var logits = record_model(tape, model, gather_images(train.images, batch));
    const ad::Var loss = tape.cross_entropy(logits, labels, static_cast<float>(cfg.label_smoothing));
    const ad::GradientMap<float> grads = tape.backward(loss);
    const double lr = cosine_lr(t + 1, sched);
    adamw_step<float>(params, grads, opt, lr);

    MetricRow row{t + 1, lr, static_cast<double>(tape.value(loss)[0]), {}, {}};
    if ((t + 1) % cfg.eval_every == 0 || t + 1 == cfg.total_steps) {
      row.train_acc = evaluate(model, train);
      if (test.size() > 0) row.test_acc = evaluate(model, test);
    }
    result.history.push_back(row);
  }
  if (!cfg.metrics_path.empty()) write_metrics_csv(cfg.metrics_path, result.history);
  if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, model);
  return result;
}

std::string metrics_csv(std::span<const MetricRow> history) {
  std::string out = "step,lr,loss,train_acc,test_acc\n";
  for (const MetricRow& r : history) {
    out += std::to_string(r.step) + "," + format_double(r.lr, "%.9g") + "," +
           format_double(r.loss, "%.9g") + ",";
    if (r.train_acc) out += format_double(*r.train_acc, "%.6f");
    out += ",";
    if (r.test_acc) out += format_double(*r.test_acc, "%.6f");
    out += "\n";
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> history) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string csv = metrics_csv(history);
  f.write(csv.data(), static_cast<std::streamsize>(csv.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace lkca
