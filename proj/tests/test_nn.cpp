// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "tdg/error.hpp"
#include "tdg/nn.hpp"
#include "layer_checks.hpp"

namespace tdg::nn {
namespace {

using namespace tdg::testing;

constexpr double kGradTol = 1e-3;

TEST(Linear, ForwardMatchesDefinition) {
  ParamStore<double> store;
  Rng rng(1);
  const auto l = make_linear(store, "l", 3, 2, true, rng);
  store[l.weight].value = {1, 2, 3, 4, 5, 6};  // out x in
  store[l.bias].value = {0.5, -1};
  std::vector<double> x = {1, -1, 2}, y(2);
  linear_forward<double>(store, l, x, y);
  EXPECT_DOUBLE_EQ(y[0], 1 - 2 + 6 + 0.5);
  EXPECT_DOUBLE_EQ(y[1], 4 - 5 + 12 - 1);
  EXPECT_EQ(store[l.weight].rows, 2u);
  EXPECT_EQ(store[l.weight].cols, 3u);
  std::vector<double> bad(4);
  EXPECT_THROW(linear_forward<double>(store, l, bad, y), Error);
}

TEST(Linear, GradCheck) {
  const auto r = linear_gradcheck(2);
  EXPECT_LT(r.max_rel_error, kGradTol) << r.worst;
}

TEST(Mlp, StraightLineOracle) {
  ParamStore<double> store;
  Rng rng(3);
  const auto m = make_mlp(store, "m", 2, 3, 1, 2, rng);
  ASSERT_EQ(m.layers.size(), 2u);
  store[m.layers[0].weight].value = {1, 0, 0, 1, 1, 1};
  store[m.layers[0].bias].value = {0, -5, 0};
  store[m.layers[1].weight].value = {1, 10, -2};
  store[m.layers[1].bias].value = {0.25};
  const std::vector<double> x = {2, -3};
  // Hidden pre-activations: 2, -8, -1 -> ReLU -> 2, 0, 0.
  const double h0 = std::max(0.0, 1.0 * x[0]);
  const double h1 = std::max(0.0, x[1] - 5.0);
  const double h2 = std::max(0.0, x[0] + x[1]);
  const double expect = h0 + 10 * h1 - 2 * h2 + 0.25;
  MlpCache<double> cache;
  const auto y = mlp_forward<double>(store, m, x, cache);
  ASSERT_EQ(y.size(), 1u);
  EXPECT_DOUBLE_EQ(y[0], expect);
  // Last layer is linear: negative outputs survive.
  store[m.layers[1].bias].value = {-7};
  EXPECT_DOUBLE_EQ(mlp_forward<double>(store, m, x, cache)[0], expect - 7.25);
}

TEST(Mlp, GradCheckAcrossDepths) {
  for (std::size_t depth = 1; depth <= 4; ++depth) {
    const auto r = mlp_gradcheck(depth, 10 + depth);
    EXPECT_LT(r.max_rel_error, kGradTol) << "depth " << depth << " " << r.worst;
  }
}

TEST(Gru, HandExample) {
  ParamStore<double> store;
  Rng rng(4);
  const auto g = make_gru(store, "g", 1, 1, rng);
  for (auto& p : store) std::fill(p.value.begin(), p.value.end(), 0.0);
  store[g.wz.weight].value = {0.5};
  store[g.uz.weight].value = {-1.0};
  store[g.wr.bias].value = {0.2};
  store[g.ur.weight].value = {0.3};
  store[g.wh.weight].value = {1.5};
  store[g.uh.weight].value = {-0.7};
  const double x = 0.8, s = 0.4;
  auto sigm = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double z = sigm(0.5 * x - 1.0 * s);
  const double r = sigm(0.2 + 0.3 * s);
  const double n = std::tanh(1.5 * x - 0.7 * r * s);
  const double expect = (1 - z) * s + z * n;
  std::vector<double> xv = {x}, sv = {s}, out(1);
  gru_step<double>(store, g, xv, sv, out, nullptr);
  EXPECT_NEAR(out[0], expect, 1e-15);

  // Zero input and zero weights keep a zero state at zero.
  for (auto& p : store) std::fill(p.value.begin(), p.value.end(), 0.0);
  std::vector<double> zero = {0.0};
  gru_step<double>(store, g, zero, zero, out, nullptr);
  EXPECT_EQ(out[0], 0.0);
}

TEST(Gru, GradCheck) {
  const auto r = gru_gradcheck(5);
  EXPECT_LT(r.max_rel_error, kGradTol) << r.worst;
}

TEST(TemporalAttention, HandExample) {
  // q . s_k = {0, ln 3} -> alpha = {1/4, 3/4}.
  const std::vector<double> q = {1.0, 0.0};
  const std::vector<double> states = {0.0, 5.0, std::log(3.0), -2.0};
  const std::vector<double> latents = {4.0, 8.0};
  std::vector<double> alpha(2), out(1);
  temporal_attention<double>(q, states, latents, 2, alpha, out);
  EXPECT_NEAR(alpha[0], 0.25, 1e-15);
  EXPECT_NEAR(alpha[1], 0.75, 1e-15);
  EXPECT_NEAR(out[0], 7.0, 1e-14);
}

TEST(TemporalAttention, WeightsSumToOne) {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t steps = 1 + rng.below(6), d = 1 + rng.below(8);
    std::vector<float> q(d), st(steps * d), lat(steps * d), alpha(steps), out(d);
    for (auto& v : q) v = static_cast<float>(rng.uniform(-10, 10));
    for (auto& v : st) v = static_cast<float>(rng.uniform(-10, 10));
    for (auto& v : lat) v = static_cast<float>(rng.normal());
    temporal_attention<float>(q, st, lat, steps, alpha, out);
    double total = 0;
    for (float a : alpha) {
      ASSERT_GE(a, 0.0f);
      total += a;
    }
    ASSERT_NEAR(total, 1.0, 1e-6);
  }
  std::vector<float> q(2), st, lat, alpha, out(2);
  EXPECT_THROW(temporal_attention<float>(q, st, lat, 0, alpha, out), Error);
}

TEST(TemporalAttention, GradCheck) {
  EXPECT_LT(attention_gradcheck(7).max_rel_error, kGradTol);
}

TEST(MeanPool, Subset) {
  const std::vector<double> rows = {1, 2, 3, 4, 5, 6};
  const std::vector<std::uint8_t> mask = {1, 0, 1};
  std::vector<double> out(2);
  mean_pool<double>(rows, 2, mask, out);
  EXPECT_EQ(out, (std::vector<double>{3, 4}));
  const std::vector<std::uint8_t> none = {0, 0, 0};
  EXPECT_THROW(mean_pool<double>(rows, 2, none, out), Error);
}

TEST(Dropout, MaskValues) {
  Rng rng(8);
  std::vector<double> m(10000);
  dropout_mask<double>(m, 0.25, rng);
  std::size_t dropped = 0;
  for (double v : m) {
    if (v == 0.0) {
      ++dropped;
    } else {
      EXPECT_DOUBLE_EQ(v, 1.0 / 0.75);
    }
  }
  EXPECT_NEAR(static_cast<double>(dropped) / m.size(), 0.25, 0.02);
  dropout_mask<double>(m, 0.0, rng);
  for (double v : m) EXPECT_EQ(v, 1.0);
}

TEST(Bce, ValuesAndGradient) {
  EXPECT_NEAR(bce_loss(0.8, 1), -std::log(0.8), 1e-15);
  EXPECT_NEAR(bce_loss(0.8, 0), -std::log(0.2), 1e-15);
  EXPECT_NEAR(bce_loss(0.0, 1), -std::log(1e-7), 1e-9);
  EXPECT_NEAR(bce_loss(1.0, 0), -std::log(1e-7), 1e-6);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  for (double z : {-3.0, -0.2, 0.0, 1.7}) {
    for (int h : {0, 1}) {
      const double num = (bce_loss(sigmoid(z + 1e-6), h) - bce_loss(sigmoid(z - 1e-6), h)) / 2e-6;
      EXPECT_NEAR(bce_logit_grad(z, h), num, 1e-6);
    }
  }
  // Saturated logits sit on the clamp's flat region.
  EXPECT_EQ(bce_logit_grad(40.0, 0), 0.0);
  EXPECT_EQ(bce_logit_grad(-40.0, 1), 0.0);
}

TEST(ParamStore, CastAndAccumulate) {
  ParamStore<float> f;
  Rng rng(9);
  make_linear(f, "a", 2, 2, true, rng);
  EXPECT_EQ(f.num_values(), 6u);
  EXPECT_THROW(f.add("a.weight", 1, 1), Error);
  EXPECT_THROW(f.find("nope"), Error);
  const auto d = f.cast<double>();
  ASSERT_EQ(d.size(), 2u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(static_cast<float>(d[0].value[k]), f[0].value[k]);
  }
  ParamStore<float> g = f;
  g[0].grad = {1, 2, 3, 4};
  f.zero_grad();
  f.accumulate_grad(g);
  f.accumulate_grad(g);
  EXPECT_EQ(f[0].grad, (std::vector<float>{2, 4, 6, 8}));
}

}  // namespace
}  // namespace tdg::nn
