// Copyright 2026 The notegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "notegen/optim.hpp"

namespace notegen {
namespace {

ModelParams tiny_model(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.hidden = 2;
  cfg.window = 2;
  Rng rng(seed);
  return ModelParams::init(cfg, rng);
}

TEST(Mse, Examples) {
  const Tensor a({2, 3}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  const auto same = mse(a, a);
  EXPECT_EQ(same.mse, 0.0);
  for (double v : same.grad.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(mse(Tensor({2}, {1, 1}), Tensor({2}, {0, 3})).mse, 2.5);
  try {
    mse(Tensor({2, 3}), Tensor({3, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ShapeMismatch);
  }
}

TEST(Mse, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  Tensor p({4, 3}), t({4, 3});
  for (double& v : p.data()) v = rng.uniform();
  for (double& v : t.data()) v = rng.uniform();
  const auto loss = mse(p, t);
  EXPECT_GT(loss.mse, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    Tensor up = p, down = p;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    const double numeric = (mse(up, t).mse - mse(down, t).mse) / 2e-6;
    EXPECT_LT(std::abs(numeric - loss.grad[i]) / std::abs(loss.grad[i]), 1e-9);
  }
}

TEST(Accuracy, Examples) {
  const ScalingParams s{480};
  const Tensor t({2, 3}, {60 / 127.0, 64 / 127.0, 0.5, 70 / 127.0, 90 / 127.0, 0.25});
  EXPECT_EQ(accuracy(t, t, s), 1.0);

  Tensor nudged = t;
  nudged(0, 0) += 0.3 / 127.0;
  EXPECT_EQ(accuracy(nudged, t, s), 1.0);

  Tensor off = t;
  for (std::size_t i = 0; i < 2; ++i) {
    off(i, 0) += 0.6 / 127.0;
    off(i, 1) -= 0.6 / 127.0;
    off(i, 2) += 0.6 / 480.0;
  }
  EXPECT_EQ(accuracy(off, t, s), 0.0);

  Tensor one_wrong = t;
  one_wrong(1, 2) = 1.0;
  EXPECT_DOUBLE_EQ(accuracy(one_wrong, t, s), 5.0 / 6.0);
  EXPECT_THROW(accuracy(Tensor({2, 2}), Tensor({2, 2}), s), Error);
}

TEST(Accuracy, IdentityProperty) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor x({5, 3});
    for (double& v : x.data()) v = rng.uniform(-0.5, 1.5);
    const ScalingParams s{1 + rng.below(2000)};
    EXPECT_EQ(accuracy(x, x, s), 1.0);
    Tensor y({5, 3});
    for (double& v : y.data()) v = rng.uniform();
    const double a = accuracy(x, y, s);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(Rmsprop, ScalarHandStep) {
  // p = 0, g = 1, lr = 0.1, rho = 0.9, eps = 0: v = 0.1, p = -0.1/sqrt(0.1)
  ModelParams p = tiny_model(1);
  p.dense.bias.fill(0.0);
  ParamGrads g = ParamGrads::zeros_like(p);
  g.dense.bias[0] = 1.0;
  auto state = RmspropState::for_params(p, {0.1, 0.9, 0.0});
  const ModelParams before = p;
  rmsprop_step(p, g, state);
  EXPECT_NEAR(state.mean_square.dense.bias[0], 0.1, 1e-15);
  EXPECT_NEAR(p.dense.bias[0], -0.31622776601683794, 1e-12);
  EXPECT_EQ(p.dense.bias[1], 0.0);
  EXPECT_EQ(p.lstm.kernel, before.lstm.kernel);
}

TEST(Rmsprop, ZeroGradientDecaysState) {
  ModelParams p = tiny_model(2);
  auto state = RmspropState::for_params(p);
  state.mean_square.lstm.bias.fill(2.0);
  const ModelParams before = p;
  rmsprop_step(p, ParamGrads::zeros_like(p), state);
  EXPECT_EQ(p, before);
  for (double v : state.mean_square.lstm.bias.data()) EXPECT_DOUBLE_EQ(v, 1.8);
}

TEST(Rmsprop, DeterministicAndBounded) {
  ModelParams a = tiny_model(3), b = a;
  Rng rng(5);
  ParamGrads g = ParamGrads::zeros_like(a);
  for_each_tensor(g, [&rng](std::string_view, Tensor& t) {
    for (double& v : t.data()) v = rng.uniform(-3, 3);
  });
  auto sa = RmspropState::for_params(a), sb = RmspropState::for_params(b);
  const ModelParams start = a;
  rmsprop_step(a, g, sa);
  rmsprop_step(b, g, sb);
  EXPECT_EQ(a, b);
  for_each_tensor_pair(sa.mean_square, sb.mean_square, [](std::string_view, const Tensor& x, const Tensor& y) {
    EXPECT_EQ(x, y);
    for (double v : x.data()) EXPECT_GE(v, 0.0);
  });
  // |delta| <= lr*|g|/eps and, from a zero state, lr/sqrt(1-rho) exactly bounds it
  for_each_tensor_pair(a, start, [](std::string_view, const Tensor& x, const Tensor& y) {
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(x[i] - y[i]), 1e-4 / std::sqrt(0.1) + 1e-15);
  });
}

TEST(Rmsprop, NonFiniteGradientLeavesEverythingUntouched) {
  ModelParams p = tiny_model(4);
  ParamGrads g = ParamGrads::zeros_like(p);
  g.dense.weights.fill(0.5);
  g.lstm.bias[3] = std::numeric_limits<double>::quiet_NaN();
  auto state = RmspropState::for_params(p);
  const ModelParams before = p;
  try {
    rmsprop_step(p, g, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFiniteGradient);
  }
  EXPECT_EQ(p, before);
  for (double v : state.mean_square.dense.weights.data()) EXPECT_EQ(v, 0.0);
}

TEST(Rmsprop, ShapeMismatch) {
  ModelParams p = tiny_model(5);
  ParamGrads g = ParamGrads::zeros_like(p);
  g.dense.bias = Tensor({4});
  auto state = RmspropState::for_params(p);
  EXPECT_THROW(rmsprop_step(p, g, state), Error);
}

TEST(Clip, GlobalNorm) {
  ModelParams p = tiny_model(6);
  ParamGrads g = ParamGrads::zeros_like(p);
  g.dense.bias = Tensor({3}, {3, 4, 0});
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 10.0), 5.0);
  EXPECT_EQ(g.dense.bias, Tensor({3}, {3, 4, 0}));
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.dense.bias[0], 0.6, 1e-15);
  EXPECT_NEAR(g.dense.bias[1], 0.8, 1e-15);
  EXPECT_NEAR(global_norm(g), 1.0, 1e-15);
}

}  // namespace
}  // namespace notegen
