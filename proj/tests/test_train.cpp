// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lkca/ops.hpp"
#include "lkca/train.hpp"

namespace lkca {
namespace {

using TD = Tensor<double>;

TEST(CrossEntropy, UniformTwoClass) {
  const std::vector<int> labels{0, 1, 1};
  EXPECT_NEAR(cross_entropy_smoothed(TD({3, 2}), labels, 0.0), std::log(2.0), 1e-15);
}

TEST(CrossEntropy, ConfidentCorrectApproachesZero) {
  const std::vector<int> labels{1};
  EXPECT_LT(cross_entropy_smoothed(TD({1, 3}, {-20, 20, -20}), labels, 0.0), 1e-15);
}

TEST(CrossEntropy, HalfSmoothingIsSymmetric) {
  SeededRng rng(1);
  for (int i = 0; i < 10; ++i) {
    const TD logits = rand_normal<double>(rng, {1, 2}, 0.0, 3.0);
    const std::vector<int> zero{0}, one{1};
    EXPECT_NEAR(cross_entropy_smoothed(logits, zero, 0.5), cross_entropy_smoothed(logits, one, 0.5),
                1e-14);
  }
}

TEST(CrossEntropy, SmoothedTargetClosedForm) {
  // K=3, eps=0.3: target (0.7, 0.15, 0.15) against uniform logits -> ln 3
  const std::vector<int> labels{2};
  EXPECT_NEAR(cross_entropy_smoothed(TD({1, 3}), labels, 0.3), std::log(3.0), 1e-15);
}

TEST(CrossEntropy, LabelOutOfRange) {
  const std::vector<int> labels{2};
  EXPECT_THROW(cross_entropy_smoothed(TD({1, 2}), labels, 0.0), std::out_of_range);
  const std::vector<int> neg{-1};
  EXPECT_THROW(cross_entropy_smoothed(TD({1, 2}), neg, 0.0), std::out_of_range);
}

TEST(AdamW, ZeroGradZeroDecayIsIdentity) {
  SeededRng rng(2);
  TD w = rand_normal<double>(rng, {3, 4}, 0.0, 1.0), b = rand_normal<double>(rng, {4}, 0.0, 1.0);
  const TD w0 = w, b0 = b;
  std::vector<ad::ParamRef<double>> params{{"w", &w}, {"b", &b}};
  AdamWState<double> st;
  st.weight_decay = 0.0;
  for (int i = 0; i < 5; ++i) {
    adamw_step<double>(params, {{"w", TD({3, 4})}, {"b", TD({4})}}, st, 1e-3);
  }
  EXPECT_EQ(w, w0);
  EXPECT_EQ(b, b0);
  EXPECT_EQ(st.step, 5u);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  TD theta(Shape{}, {0.0});
  std::vector<ad::ParamRef<double>> params{{"theta", &theta}};
  AdamWState<double> st;
  st.weight_decay = 0.0;
  adamw_step<double>(params, {{"theta", TD(Shape{}, {1.0})}}, st, 1e-3);
  // m_hat = v_hat = 1 at step 1
  EXPECT_NEAR(theta[0], -1e-3 / (1.0 + 1e-8), 1e-18);
}

TEST(AdamW, DecoupledDecayShrinksMatricesOnly) {
  TD w = TD::full({2, 2}, 2.0), b = TD::full({2}, 2.0);
  std::vector<ad::ParamRef<double>> params{{"w", &w}, {"b", &b}};
  AdamWState<double> st;
  st.weight_decay = 0.05;
  adamw_step<double>(params, {{"w", TD({2, 2})}, {"b", TD({2})}}, st, 0.1);
  for (double v : w.data()) EXPECT_DOUBLE_EQ(v, 2.0 - 0.1 * 0.05 * 2.0);
  EXPECT_EQ(b, TD::full({2}, 2.0));
  EXPECT_TRUE(decays({3, 3}));
  EXPECT_TRUE(decays({5, 5}));
  EXPECT_FALSE(decays({8}));
  EXPECT_FALSE(decays({}));
}

TEST(AdamW, ShapeAndNameErrorsLeaveParamsUntouched) {
  TD w = TD::full({2, 2}, 1.0), b = TD::full({2}, 1.0);
  std::vector<ad::ParamRef<double>> params{{"w", &w}, {"b", &b}};
  AdamWState<double> st;
  EXPECT_THROW(adamw_step<double>(params, {{"w", TD::full({2, 2}, 1.0)}, {"b", TD({3})}}, st, 0.1),
               DimensionError);
  EXPECT_THROW(adamw_step<double>(params, {{"w", TD::full({2, 2}, 1.0)}}, st, 0.1),
               std::invalid_argument);
  EXPECT_EQ(w, TD::full({2, 2}, 1.0));
  EXPECT_EQ(st.step, 0u);
}

TEST(Schedule, Endpoints) {
  const Schedule s{10, 100, 1e-3, 1e-5};
  EXPECT_EQ(cosine_lr(0, s), 0.0);
  EXPECT_DOUBLE_EQ(cosine_lr(5, s), 5e-4);
  EXPECT_EQ(cosine_lr(10, s), 1e-3);
  EXPECT_EQ(cosine_lr(100, s), 1e-5);
  EXPECT_EQ(cosine_lr(1000, s), 1e-5);
  EXPECT_NEAR(cosine_lr(55, s), (1e-3 + 1e-5) / 2, 1e-12);
}

TEST(Schedule, MonotoneAfterWarmupAndContinuous) {
  const Schedule s{7, 93, 2e-3, 0.0};
  EXPECT_EQ(std::abs(cosine_lr(7, s) - s.base_lr), 0.0);
  for (std::size_t t = 7; t < 100; ++t) EXPECT_LE(cosine_lr(t + 1, s), cosine_lr(t, s)) << t;
  for (std::size_t t = 0; t < 7; ++t) EXPECT_LT(cosine_lr(t, s), cosine_lr(t + 1, s)) << t;
}

TEST(Schedule, NoWarmup) {
  const Schedule s{0, 10, 1.0, 0.0};
  EXPECT_EQ(cosine_lr(0, s), 1.0);
  EXPECT_NEAR(cosine_lr(5, s), 0.5, 1e-12);
}

TEST(Stripes, Deterministic) {
  const Dataset a = gen_stripes(4, 8, 42), b = gen_stripes(4, 8, 42);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.offsets, b.offsets);
  EXPECT_NE(a.images, gen_stripes(4, 8, 43).images);
}

TEST(Stripes, Balanced) {
  for (std::size_t n : {1u, 4u, 5u, 17u}) {
    const Dataset d = gen_stripes(n, 6, 1);
    const auto zeros = std::count(d.labels.begin(), d.labels.end(), 0);
    EXPECT_EQ(static_cast<std::size_t>(zeros), (n + 1) / 2);
    EXPECT_EQ(d.labels.size() - zeros, n / 2);
  }
}

std::size_t px(std::size_t g, std::size_t i, std::size_t r, std::size_t c) {
  return (i * g + r) * g + c;
}

TEST(Stripes, BarGeometry) {
  const std::size_t g = 8;
  const Dataset clean = gen_stripes(20, g, 3, {}, 0.0);
  const Dataset noisy = gen_stripes(20, g, 3);
  for (std::size_t i = 0; i < 20; ++i) {
    const std::size_t off = clean.offsets[i];
    double best_row = 0, best_col = 0, total = 0;
    for (std::size_t r = 0; r < g; ++r) {
      double row = 0, col = 0;
      for (std::size_t c = 0; c < g; ++c) {
        row += clean.images[px(g, i, r, c)];
        col += clean.images[px(g, i, c, r)];
        total += clean.images[px(g, i, r, c)];
        const float v = noisy.images[px(g, i, r, c)];
        EXPECT_GE(v, 0.f);
        EXPECT_LE(v, 1.f);
      }
      best_row = std::max(best_row, row);
      best_col = std::max(best_col, col);
    }
    EXPECT_EQ(total, 2.0 * g);
    if (clean.labels[i] == 0) {
      EXPECT_GE(best_row, 0.8 * g);
      EXPECT_EQ(clean.images[px(g, i, off, 0)], 1.f);
      EXPECT_EQ(clean.images[px(g, i, off + 1, g - 1)], 1.f);
    } else {
      EXPECT_GE(best_col, 0.8 * g);
      EXPECT_EQ(clean.images[px(g, i, 0, off)], 1.f);
    }
  }
}

TEST(Stripes, AllowedOffsetsAndErrors) {
  const std::vector<std::size_t> even{0, 2, 4};
  const Dataset d = gen_stripes(50, 6, 5, even);
  for (std::size_t o : d.offsets) EXPECT_EQ(o % 2, 0u);
  EXPECT_THROW(gen_stripes(4, 3, 0), std::invalid_argument);
  const std::vector<std::size_t> bad{5};
  EXPECT_THROW(gen_stripes(4, 6, 0, bad), std::invalid_argument);
}

std::vector<std::uint8_t> idx_header(std::uint8_t type, std::vector<std::uint32_t> dims) {
  std::vector<std::uint8_t> b{0, 0, type, static_cast<std::uint8_t>(dims.size())};
  for (std::uint32_t d : dims) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(d >> s));
  }
  return b;
}

IdxError::Kind idx_error_kind(std::span<const std::uint8_t> bytes, std::size_t* offset) {
  try {
    parse_idx(bytes);
  } catch (const IdxError& e) {
    *offset = e.offset();
    return e.kind();
  }
  ADD_FAILURE() << "expected IdxError";
  return IdxError::Kind::trailing_bytes;
}

class IdxFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("lkca_idx_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path write(const std::string& name, const std::vector<std::uint8_t>& bytes) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                             static_cast<std::streamsize>(bytes.size()));
    return p;
  }
  std::filesystem::path dir_;
};

TEST_F(IdxFiles, TwoImagesTwoByTwo) {
  std::vector<std::uint8_t> b = idx_header(0x08, {2, 2, 2});
  for (std::uint8_t v : {0, 51, 102, 255, 255, 0, 17, 34}) b.push_back(v);
  const TensorF img = load_idx_images(write("img.idx", b));
  EXPECT_EQ(img.shape(), (Shape{2, 2, 2, 1}));
  const std::vector<float> expected{0.f, 51 / 255.f, 102 / 255.f, 1.f, 1.f, 0.f, 17 / 255.f, 34 / 255.f};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(img[i], expected[i]);
}

TEST_F(IdxFiles, Labels) {
  std::vector<std::uint8_t> b = idx_header(0x08, {4});
  for (std::uint8_t v : {0, 1, 1, 0}) b.push_back(v);
  EXPECT_EQ(load_idx_labels(write("lab.idx", b)), (std::vector<int>{0, 1, 1, 0}));
  EXPECT_THROW(load_idx_images(write("lab2.idx", b)), DimensionError);
}

TEST_F(IdxFiles, ErrorsNamePathAndOffset) {
  const auto p = write("empty.idx", {});
  try {
    read_idx(p);
    FAIL();
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::truncated);
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("empty.idx"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("byte offset 0"), std::string::npos);
  }
  EXPECT_THROW(read_idx(dir_ / "missing.idx"), std::runtime_error);
}

TEST(Idx, MalformedKinds) {
  std::size_t off = 99;
  EXPECT_EQ(idx_error_kind({}, &off), IdxError::Kind::truncated);
  EXPECT_EQ(off, 0u);

  std::vector<std::uint8_t> magic = idx_header(0x08, {1});
  magic[1] = 0x01;
  magic.push_back(7);
  EXPECT_EQ(idx_error_kind(magic, &off), IdxError::Kind::bad_magic);
  EXPECT_EQ(off, 1u);

  std::vector<std::uint8_t> type = idx_header(0x0D, {1});
  type.insert(type.end(), {0, 0, 0, 0});
  EXPECT_EQ(idx_error_kind(type, &off), IdxError::Kind::unsupported_type);
  EXPECT_EQ(off, 2u);

  std::vector<std::uint8_t> shortp = idx_header(0x08, {2, 3});
  shortp.insert(shortp.end(), {1, 2, 3, 4, 5});
  EXPECT_EQ(idx_error_kind(shortp, &off), IdxError::Kind::truncated);
  EXPECT_EQ(off, 17u);

  std::vector<std::uint8_t> shorth = idx_header(0x08, {2, 3});
  shorth.resize(9);
  EXPECT_EQ(idx_error_kind(shorth, &off), IdxError::Kind::truncated);
  EXPECT_EQ(off, 9u);

  std::vector<std::uint8_t> extra = idx_header(0x08, {1});
  extra.insert(extra.end(), {1, 2});
  EXPECT_EQ(idx_error_kind(extra, &off), IdxError::Kind::trailing_bytes);
  EXPECT_EQ(off, 9u);
}

TEST(Evaluate, ArgmaxTiesGoLow) {
  const TensorF l({3, 3}, {1, 1, 0, 0, 2, 2, 5, 5, 5});
  EXPECT_EQ(argmax_rows(l), (std::vector<int>{0, 1, 0}));
}

ModelConfig small_model() {
  ModelConfig c;
  c.image_h = c.image_w = 6;
  c.patch_size = 2;
  c.dim = 4;
  c.depth = 1;
  return c;
}

TEST(Evaluate, ConstantLogitsAndShift) {
  VisionModel<float> m = zero_model<float>(small_model());
  const Dataset d = gen_stripes(10, 6, 3);
  EXPECT_DOUBLE_EQ(evaluate(m, d, 3), 0.5);
  m.head.bias = TensorF({2}, {0.f, 1.f});
  EXPECT_DOUBLE_EQ(evaluate(m, d), 0.5);
  Dataset ones = d;
  std::fill(ones.labels.begin(), ones.labels.end(), 1);
  EXPECT_DOUBLE_EQ(evaluate(m, ones), 1.0);
  m.head.bias = TensorF({2}, {7.f, 8.f});
  EXPECT_DOUBLE_EQ(evaluate(m, ones), 1.0);
}

TrainConfig quick_config(std::size_t steps) {
  TrainConfig c;
  c.model = small_model();
  c.model.block_pattern = "L";
  c.total_steps = steps;
  c.batch_size = 4;
  c.train_samples = 12;
  c.test_samples = 6;
  c.eval_every = 5;
  return c;
}

TEST(TrainLoop, ZeroStepsKeepsInit) {
  const TrainConfig c = quick_config(0);
  const auto [tr, te] = load_datasets(c);
  const TrainResult r = train_loop(c, tr, te);
  EXPECT_TRUE(r.history.empty());
  SeededRng rng(c.seed);
  const VisionModel<float> init = make_model<float>(c.model, rng);
  VisionModel<float> a = r.model, b = init;
  const auto pa = parameters(a), pb = parameters(b);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i].tensor, *pb[i].tensor) << pa[i].name;
}

TEST(TrainLoop, DeterministicAndLearns) {
  const TrainConfig c = quick_config(30);
  const auto [tr, te] = load_datasets(c);
  const TrainResult a = train_loop(c, tr, te), b = train_loop(c, tr, te);
  ASSERT_EQ(a.history.size(), 30u);
  EXPECT_EQ(metrics_csv(a.history), metrics_csv(b.history));
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(a.history[i].loss, b.history[i].loss);
  EXPECT_EQ(a.history[0].step, 1u);
  EXPECT_TRUE(a.history[4].train_acc.has_value());
  EXPECT_FALSE(a.history[5].train_acc.has_value());
  EXPECT_TRUE(a.history.back().test_acc.has_value());
  TrainConfig other = c;
  other.seed = 1;
  EXPECT_NE(metrics_csv(train_loop(other, tr, te).history), metrics_csv(a.history));
}

TEST(TrainLoop, ViewLockstep) {
  TrainConfig c = quick_config(100);
  c.model.image_h = c.model.image_w = 8;
  c.model.patch_size = 1;
  c.model.dim = 8;
  c.model.depth = 2;
  c.model.block_pattern = "LL";
  c.train_samples = 32;
  c.batch_size = 8;
  c.eval_every = 1000;
  const auto [tr, te] = load_datasets(c);
  c.model.lkca_view = View::attention;
  const TrainResult a = train_loop(c, tr, te);
  c.model.lkca_view = View::convolution;
  const TrainResult b = train_loop(c, tr, te);
  ASSERT_EQ(a.history.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    const double x = a.history[i].loss, y = b.history[i].loss;
    EXPECT_LE(std::abs(x - y) / std::max({1.0, std::abs(x), std::abs(y)}), 1e-4) << "step " << i;
  }
}

TEST(TrainLoop, ShapeErrorsBeforeFirstStep) {
  const TrainConfig c = quick_config(5);
  const Dataset wrong = gen_stripes(8, 8, 0);
  const auto [tr, te] = load_datasets(c);
  EXPECT_THROW(train_loop(c, wrong, te), DimensionError);
  Dataset bad_label = tr;
  bad_label.labels[0] = 5;
  EXPECT_THROW(train_loop(c, bad_label, te), std::out_of_range);
}

TEST(TrainConfigCheck, Validation) {
  TrainConfig c = quick_config(5);
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = quick_config(5);
  c.label_smoothing = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = quick_config(5);
  c.stripe_offsets = "odd";
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = quick_config(5);
  c.data = DataSource::idx;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = quick_config(10);
  EXPECT_EQ(c.schedule().warmup_steps, 1u);
  EXPECT_EQ(c.schedule().total_steps, 10u);
}

TEST(TrainConfigCheck, EvenOffsetSplit) {
  TrainConfig c = quick_config(0);
  c.model.image_h = c.model.image_w = 8;
  c.model.patch_size = 1;
  c.stripe_offsets = "even";
  const auto [tr, te] = load_datasets(c);
  for (std::size_t o : tr.offsets) EXPECT_EQ(o % 2, 0u);
  for (std::size_t o : te.offsets) EXPECT_EQ(o % 2, 1u);
}

TEST(Metrics, CsvFormat) {
  const std::vector<MetricRow> rows{{1, 0.5, 0.25, {}, {}}, {2, 1e-3, 0.125, 1.0, 0.5}};
  EXPECT_EQ(metrics_csv(rows),
            "step,lr,loss,train_acc,test_acc\n1,0.5,0.25,,\n2,0.001,0.125,1.000000,0.500000\n");
  EXPECT_EQ(metrics_csv({}), "step,lr,loss,train_acc,test_acc\n");
}

}  // namespace
}  // namespace lkca
