// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lkca/autodiff.hpp"
#include "lkca/rng.hpp"

namespace lkca::ad {
namespace {

using TD = Tensor<double>;

TD randn(SeededRng& rng, Shape shape, double std = 1.0) {
  return rand_normal<double>(rng, std::move(shape), 0.0, std);
}

// loss = sum(op(params) * w) for a fixed random cotangent w, checked against
// central differences.
struct PrimitiveCase {
  std::vector<std::pair<std::string, TD>> inputs;
  std::function<Var(Tape<double>&, const std::vector<Var>&)> op;
};

GradCheckReport check_primitive(PrimitiveCase& pc, std::uint64_t seed) {
  SeededRng rng(seed);
  TD cot;
  bool have_cot = false;
  std::vector<ParamRef<double>> refs;
  for (auto& [name, t] : pc.inputs) refs.push_back({name, &t});
  const LossBuilder build = [&](Tape<double>& tape) {
    std::vector<Var> vars;
    for (auto& [name, t] : pc.inputs) vars.push_back(tape.parameter(name, t));
    const Var out = pc.op(tape, vars);
    if (!have_cot) {
      cot = randn(rng, tape.value(out).shape());
      have_cot = true;
    }
    return tape.sum(tape.mul(out, tape.constant(cot)));
  };
  return grad_check(refs, build, 1e-6);
}

void expect_pass(const GradCheckReport& r) {
  for (const GroupReport& g : r.groups) {
    EXPECT_TRUE(g.pass) << g.name << " max rel " << g.max_rel_error;
  }
  EXPECT_FALSE(r.groups.empty());
}

TEST(AdjointProperty, Matmul) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    SeededRng rng(100 + s);
    PrimitiveCase pc{{{"a", randn(rng, {2, 3, 4})}, {"b", randn(rng, {4, 5})}},
                     [](Tape<double>& t, const std::vector<Var>& v) { return t.matmul(v[0], v[1]); }};
    expect_pass(check_primitive(pc, s));
  }
}

TEST(AdjointProperty, MatmulSharedLeft) {
  SeededRng rng(7);
  PrimitiveCase pc{{{"a", randn(rng, {4, 4})}, {"b", randn(rng, {3, 4, 2})}},
                   [](Tape<double>& t, const std::vector<Var>& v) { return t.matmul(v[0], v[1]); }};
  expect_pass(check_primitive(pc, 1));
}

TEST(AdjointProperty, BatchedMatmulBothLayouts) {
  for (bool tb : {false, true}) {
    SeededRng rng(9);
    PrimitiveCase pc{{{"a", randn(rng, {2, 3, 4})}, {"b", randn(rng, tb ? Shape{2, 5, 4} : Shape{2, 4, 5})}},
                     [tb](Tape<double>& t, const std::vector<Var>& v) {
                       return t.batched_matmul(v[0], v[1], tb);
                     }};
    expect_pass(check_primitive(pc, 2));
  }
}

TEST(AdjointProperty, AddBroadcastMulScale) {
  SeededRng rng(11);
  PrimitiveCase add{{{"a", randn(rng, {2, 3, 4})}, {"b", randn(rng, {4})}},
                    [](Tape<double>& t, const std::vector<Var>& v) { return t.add(v[0], v[1]); }};
  expect_pass(check_primitive(add, 3));
  PrimitiveCase mul{{{"a", randn(rng, {3, 4})}, {"b", randn(rng, {3, 4})}},
                    [](Tape<double>& t, const std::vector<Var>& v) { return t.mul(v[0], v[1]); }};
  expect_pass(check_primitive(mul, 4));
  PrimitiveCase sc{{{"a", randn(rng, {5})}},
                   [](Tape<double>& t, const std::vector<Var>& v) { return t.scale(v[0], -2.5); }};
  expect_pass(check_primitive(sc, 5));
}

TEST(AdjointProperty, LayerNorm) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    SeededRng rng(20 + s);
    PrimitiveCase pc{{{"x", randn(rng, {2, 3, 6})},
                      {"gamma", randn(rng, {6})},
                      {"beta", randn(rng, {6})}},
                     [](Tape<double>& t, const std::vector<Var>& v) {
                       return t.layer_norm(v[0], v[1], v[2]);
                     }};
    expect_pass(check_primitive(pc, s));
  }
}

TEST(AdjointProperty, GeluSoftmax) {
  SeededRng rng(30);
  PrimitiveCase g{{{"x", randn(rng, {3, 7}, 2.0)}},
                  [](Tape<double>& t, const std::vector<Var>& v) { return t.gelu(v[0]); }};
  expect_pass(check_primitive(g, 6));
  PrimitiveCase sm{{{"x", randn(rng, {2, 3, 5})}},
                   [](Tape<double>& t, const std::vector<Var>& v) { return t.softmax_rows(v[0]); }};
  expect_pass(check_primitive(sm, 7));
}

TEST(AdjointProperty, Correlate) {
  for (std::size_t ph : {0u, 1u, 2u}) {
    SeededRng rng(40 + ph);
    PrimitiveCase pc{{{"x", randn(rng, {2, 3, 4})}, {"k", randn(rng, {3, 5})}},
                     [ph](Tape<double>& t, const std::vector<Var>& v) {
                       return t.correlate_2d(v[0], v[1], ph, 2);
                     }};
    expect_pass(check_primitive(pc, 8));
  }
}

TEST(AdjointProperty, FoldUnfoldUnroll) {
  SeededRng rng(50);
  PrimitiveCase fold{{{"x", randn(rng, {2, 6, 3})}},
                     [](Tape<double>& t, const std::vector<Var>& v) { return t.grid_fold(v[0], 2, 3); }};
  expect_pass(check_primitive(fold, 9));
  PrimitiveCase unfold{{{"g", randn(rng, {6, 2, 3})}},
                       [](Tape<double>& t, const std::vector<Var>& v) { return t.grid_unfold(v[0], 2, 3); }};
  expect_pass(check_primitive(unfold, 10));
  PrimitiveCase unroll{{{"k", randn(rng, {5, 3})}},
                       [](Tape<double>& t, const std::vector<Var>& v) { return t.unroll(v[0], 3, 2); }};
  expect_pass(check_primitive(unroll, 11));
}

TEST(AdjointProperty, MeanHeadsReshape) {
  SeededRng rng(60);
  PrimitiveCase mean{{{"x", randn(rng, {2, 5, 3})}},
                     [](Tape<double>& t, const std::vector<Var>& v) { return t.mean_tokens(v[0]); }};
  expect_pass(check_primitive(mean, 12));
  PrimitiveCase split{{{"x", randn(rng, {2, 3, 6})}},
                      [](Tape<double>& t, const std::vector<Var>& v) { return t.split_heads(v[0], 3); }};
  expect_pass(check_primitive(split, 13));
  PrimitiveCase merge{{{"x", randn(rng, {4, 3, 2})}},
                      [](Tape<double>& t, const std::vector<Var>& v) { return t.merge_heads(v[0], 2); }};
  expect_pass(check_primitive(merge, 14));
  PrimitiveCase rs{{{"x", randn(rng, {2, 6})}},
                   [](Tape<double>& t, const std::vector<Var>& v) { return t.reshape(v[0], {3, 4}); }};
  expect_pass(check_primitive(rs, 15));
}

TEST(AdjointProperty, CrossEntropy) {
  for (double eps : {0.0, 0.1, 0.5}) {
    SeededRng rng(70);
    TD logits = randn(rng, {4, 3});
    std::vector<ParamRef<double>> refs{{"logits", &logits}};
    const LossBuilder build = [&](Tape<double>& t) {
      return t.cross_entropy(t.parameter("logits", logits), {0, 2, 1, 2}, eps);
    };
    expect_pass(grad_check(refs, build, 1e-6));
  }
}

TEST(Backward, SumGivesOnes) {
  Tape<double> t;
  const Var x = t.parameter("x", TD({2, 3}, {1, -2, 3, 4, 5, -6}));
  const GradientMap<double> g = t.backward(t.sum(x));
  EXPECT_EQ(g.at("x"), TD::full({2, 3}, 1.0));
}

TEST(Backward, SumOfProductMatchesHandAdjoint) {
  SeededRng rng(80);
  const TD a = randn(rng, {3, 4}), b = randn(rng, {4, 2});
  Tape<double> t;
  const Var va = t.parameter("A", a), vb = t.parameter("B", b);
  const GradientMap<double> g = t.backward(t.sum(t.matmul(va, vb)));
  const TD ones = TD::full({3, 2}, 1.0);
  const TD ga = matmul_nt(ones, b), gb = matmul_tn(a, ones);
  EXPECT_LE(max_abs_diff(g.at("A"), ga), 1e-14);
  EXPECT_LE(max_abs_diff(g.at("B"), gb), 1e-14);
}

TEST(Backward, NonScalarLossRejected) {
  Tape<double> t;
  const Var x = t.parameter("x", TD({2}, {1, 2}));
  EXPECT_THROW(t.backward(x), std::invalid_argument);
}

TEST(Backward, OpaqueRaisesUnsupported) {
  Tape<double> t;
  const Var x = t.parameter("x", TD({2}, {1, 2}));
  const Var y = t.opaque("mystery", TD({2}, {3, 4}), {x});
  EXPECT_THROW(t.backward(t.sum(y)), UnsupportedOpError);
  // No gradient demanded: fine.
  Tape<double> u;
  const Var c = u.constant(TD({2}, {1, 2}));
  const Var z = u.opaque("mystery", TD({2}, {3, 4}), {c});
  EXPECT_NO_THROW(u.backward(u.sum(z)));
}

TEST(Backward, SpectralViewIsForwardOnly) {
  if (!spectral_view_available()) GTEST_SKIP() << "spectral view not built";
  SeededRng rng(90);
  Tape<double> t;
  const Var x = t.constant(randn(rng, {1, 4, 2}));
  const Var k = t.parameter("k", randn(rng, {3, 3}));
  const Var w = t.parameter("w", randn(rng, {2, 2}));
  const Var b = t.parameter("b", TD({2}));
  const Var out = record_lkca(t, x, k, w, b, 2, 2, View::spectral);
  EXPECT_EQ(t.op(out), Op::opaque);
  EXPECT_THROW(t.backward(t.sum(out)), UnsupportedOpError);
}

TEST(Backward, UnusedParameterGetsZeros) {
  Tape<double> t;
  const Var x = t.parameter("x", TD({2}, {1, 2}));
  t.parameter("unused", TD({3}, {1, 1, 1}));
  const GradientMap<double> g = t.backward(t.sum(x));
  EXPECT_EQ(g.at("unused"), TD({3}));
}

TEST(Backward, DuplicateParameterNameRejected) {
  Tape<double> t;
  t.parameter("x", TD({1}));
  EXPECT_THROW(t.parameter("x", TD({1})), std::invalid_argument);
}

Var small_lkca_loss(Tape<double>& t, const TD& x, const TD& k, const TD& w, const TD& b,
                    const TD& cot, View view) {
  const Var out = record_lkca(t, t.parameter("x", x), t.parameter("kernel", k),
                              t.parameter("value.weight", w), t.parameter("value.bias", b), 3, 3,
                              view);
  return t.sum(t.mul(out, t.constant(cot)));
}

TEST(TapeInvariants, DeterministicReplayAndOrder) {
  SeededRng rng(100);
  const TD x = randn(rng, {2, 9, 4}), k = randn(rng, {5, 5}), w = randn(rng, {4, 4}),
           b = randn(rng, {4}), cot = randn(rng, {2, 9, 4});
  for (View view : {View::attention, View::convolution}) {
    Tape<double> t;
    const Var loss = small_lkca_loss(t, x, k, w, b, cot, view);
    EXPECT_TRUE(t.topologically_ordered());
    EXPECT_TRUE(t.replay());
    const GradientMap<double> g1 = t.backward(loss);
    const GradientMap<double> g2 = t.backward(loss);
    EXPECT_EQ(g1, g2);
  }
}

TEST(TapeInvariants, ReplayWithLayerNormAndCrossEntropy) {
  SeededRng rng(101);
  Tape<float> t;
  const Var x = t.parameter("x", rand_normal<float>(rng, {3, 4}, 0.f, 1.f));
  const Var g = t.parameter("g", Tensor<float>::full({4}, 1.f));
  const Var bt = t.parameter("b", Tensor<float>({4}));
  const Var y = t.gelu(t.layer_norm(x, g, bt));
  t.cross_entropy(y, {0, 1, 3}, 0.1f);
  EXPECT_TRUE(t.replay());
}

TEST(LkcaTape, BothViewsPassGradcheck) {
  SeededRng rng(110);
  TD x = randn(rng, {2, 9, 4}), k = randn(rng, {5, 5}), w = randn(rng, {4, 4}), b = randn(rng, {4});
  const TD cot = randn(rng, {2, 9, 4});
  std::vector<ParamRef<double>> refs{
      {"x", &x}, {"kernel", &k}, {"value.weight", &w}, {"value.bias", &b}};
  for (View view : {View::attention, View::convolution}) {
    const GradCheckReport r = grad_check(refs, [&](Tape<double>& t) {
      return small_lkca_loss(t, x, k, w, b, cot, view);
    }, 1e-6);
    expect_pass(r);
    EXPECT_EQ(r.groups.size(), 4u);
  }
}

TEST(LkcaTape, KernelAdjointAgreesAcrossViews) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    SeededRng rng(120 + s);
    const TD x = randn(rng, {2, 9, 4}), k = randn(rng, {5, 5}), w = randn(rng, {4, 4}),
             b = randn(rng, {4}), cot = randn(rng, {2, 9, 4});
    Tape<double> ta, tc;
    const GradientMap<double> ga = ta.backward(small_lkca_loss(ta, x, k, w, b, cot, View::attention));
    const GradientMap<double> gc = tc.backward(small_lkca_loss(tc, x, k, w, b, cot, View::convolution));
    EXPECT_LE(max_abs_diff(ga.at("kernel"), gc.at("kernel")), 1e-10);
    EXPECT_LE(max_abs_diff(ga.at("x"), gc.at("x")), 1e-10);
  }
}

TEST(LkcaTape, AgreesWithAnalyticBackward) {
  SeededRng rng(130);
  const TD x = randn(rng, {2, 9, 4}), k = randn(rng, {5, 5}), w = randn(rng, {4, 4}),
           b = randn(rng, {4}), cot = randn(rng, {2, 9, 4});
  Tape<double> t;
  const GradientMap<double> g = t.backward(small_lkca_loss(t, x, k, w, b, cot, View::convolution));
  const LKCALayer<double> layer{LKCAKernel<double>(k, 3, 3), ValueProjection<double>(w, b),
                                View::attention};
  const LKCAGrads<double> a = lkca::backward(x, layer, cot);
  EXPECT_LE(max_abs_diff(g.at("x"), a.x), 1e-12);
  EXPECT_LE(max_abs_diff(g.at("kernel"), a.kernel), 1e-12);
  EXPECT_LE(max_abs_diff(g.at("value.weight"), a.value_weight), 1e-12);
  EXPECT_LE(max_abs_diff(g.at("value.bias"), a.value_bias), 1e-12);
}

TEST(FiniteDiff, SquareAtThree) {
  TD theta({1}, {3.0});
  std::vector<ParamRef<double>> refs{{"theta", &theta}};
  const GradientMap<double> g = finite_diff([&] { return theta[0] * theta[0]; }, refs, 1e-4);
  EXPECT_NEAR(g.at("theta")[0], 6.0, 1e-7);
  EXPECT_EQ(theta[0], 3.0);  // restored
}

TEST(FiniteDiff, ConstantFunctionIsZero) {
  TD a({2, 2}, {1, 2, 3, 4});
  std::vector<ParamRef<double>> refs{{"a", &a}};
  const GradientMap<double> g = finite_diff([] { return 42.0; }, refs, 1e-4);
  EXPECT_LE(max_abs(g.at("a")), 1e-9);
}

TEST(FiniteDiff, NonPositiveStepRejected) {
  TD a({1});
  std::vector<ParamRef<double>> refs{{"a", &a}};
  EXPECT_THROW(finite_diff([] { return 0.0; }, refs, 0.0), std::invalid_argument);
}

TEST(GradCheck, EmptyParameterSetPasses) {
  const GradCheckReport r = grad_check({}, [](Tape<double>& t) {
    return t.sum(t.constant(TD({2}, {1, 2})));
  }, 1e-5);
  EXPECT_TRUE(r.groups.empty());
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.worst(), nullptr);
}

TEST(GradCheck, CorruptedAdjointNamesGroup) {
  SeededRng rng(140);
  TD x = randn(rng, {1, 4, 3}), k = randn(rng, {3, 3}), w = randn(rng, {3, 3}), b = randn(rng, {3});
  const TD cot = randn(rng, {1, 4, 3});
  std::vector<ParamRef<double>> refs{
      {"x", &x}, {"kernel", &k}, {"value.weight", &w}, {"value.bias", &b}};
  const LossBuilder build = [&](Tape<double>& t) {
    const Var out = record_lkca(t, t.parameter("x", x), t.parameter("kernel", k),
                                t.parameter("value.weight", w), t.parameter("value.bias", b), 2, 2,
                                View::attention);
    return t.sum(t.mul(out, t.constant(cot)));
  };
  const GradCheckReport r = grad_check(refs, build, 1e-6, 1e-4, [](Tape<double>& t) {
    t.set_adjoint_fault(Op::unroll, 1.5);
  });
  EXPECT_FALSE(r.passed());
  ASSERT_NE(r.worst(), nullptr);
  EXPECT_EQ(r.worst()->name, "kernel");
  for (const GroupReport& g : r.groups) EXPECT_EQ(g.pass, g.name != "kernel") << g.name;
}

TEST(GradCheck, MissingGroupFails) {
  GradientMap<double> a{{"p", TD({1}, {1.0})}};
  GradientMap<double> n{{"p", TD({1}, {1.0})}, {"q", TD({1}, {0.0})}};
  const GradCheckReport r = compare_gradients(a, n, 1e-6);
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.worst()->name, "q");
}

TEST(GradCheck, RelativeErrorDefinition) {
  EXPECT_DOUBLE_EQ(relative_error(0.5, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(relative_error(100.0, 101.0), 1.0 / 101.0);
}

TEST(CrossEntropyValue, UniformTwoClassIsLn2) {
  Tape<double> t;
  const Var l = t.cross_entropy(t.constant(TD({3, 2})), {0, 1, 0}, 0.0);
  EXPECT_NEAR(t.value(l)[0], std::log(2.0), 1e-15);
  EXPECT_THROW(t.cross_entropy(t.constant(TD({1, 2})), {2}, 0.0), std::out_of_range);
  EXPECT_THROW(t.cross_entropy(t.constant(TD({1, 1})), {0}, 0.0), DimensionError);
}

}  // namespace
}  // namespace lkca::ad
