// Copyright (c) 2026 The WAM Authors. All Rights Reserved.
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

#include "wam/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace wam {
namespace {

GradientMap grads_of(const Tensor& loss) { return backward(loss); }

TEST(Adam, ZeroGradientLeavesParamsAndMoments) {
  std::vector<Tensor> params = {Tensor::from({2}, {1.5, -2.0}, true)};
  AdamState state;
  const auto g = grads_of(scale(sum(params[0]), 0.0));
  adam_step(params, g, state, 0.1);
  EXPECT_EQ(params[0].at(0), 1.5);
  EXPECT_EQ(params[0].at(1), -2.0);
  EXPECT_EQ(state.first_moment[0], (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(state.second_moment[0], (std::vector<double>{0.0, 0.0}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<Tensor> params = {Tensor::from({1}, {0.0}, true)};
  AdamState state;
  adam_step(params, grads_of(sum(params[0])), state, 0.1);
  EXPECT_NEAR(params[0].at(0), -0.1, 1e-9);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, ConstantGradientKeepsDescending) {
  std::vector<Tensor> params = {Tensor::from({1}, {0.0}, true)};
  AdamState state;
  double previous = params[0].at(0);
  for (int i = 0; i < 2; ++i) {
    params[0].zero_grad();
    adam_step(params, grads_of(sum(params[0])), state, 0.1);
    EXPECT_LT(params[0].at(0), previous);
    previous = params[0].at(0);
  }
}

TEST(Adam, MatchesHandRecurrence) {
  std::vector<Tensor> params = {Tensor::from({1}, {1.0}, true)};
  AdamState state;
  double x = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 5; ++t) {
    params[0].zero_grad();
    adam_step(params, grads_of(squared_l2(params[0])), state, 0.01);
    const double g = 2.0 * x;
    m = 0.9 * m + 0.1 * g;
    v = 0.98 * v + 0.02 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.98, t));
    x -= 0.01 * mh / (std::sqrt(vh) + 1e-9);
    EXPECT_NEAR(params[0].at(0), x, 1e-12);
  }
}

TEST(Adam, MissingGradientThrows) {
  std::vector<Tensor> params = {Tensor::from({1}, {0.0}, true), Tensor::from({1}, {0.0}, true)};
  AdamState state;
  EXPECT_THROW(adam_step(params, grads_of(sum(params[0])), state, 0.1), std::invalid_argument);
}

TEST(LrSchedule, KnownValues) {
  const LrSchedule s{512, 2000};
  EXPECT_NEAR(lr_at(2000, s), 9.8821e-4, 1e-8);
  EXPECT_NEAR(lr_at(1, s), 4.941e-7, 1e-10);
  EXPECT_DOUBLE_EQ(lr_at(2000, s), 1.0 / std::sqrt(512.0 * 2000.0));
  EXPECT_THROW(lr_at(0, s), std::invalid_argument);
}

TEST(LrSchedule, WarmupThenDecay) {
  const LrSchedule s{32, 200};
  for (int step = 2; step <= 200; ++step) EXPECT_GT(lr_at(step, s), lr_at(step - 1, s));
  for (int step = 201; step <= 1000; ++step) EXPECT_LT(lr_at(step, s), lr_at(step - 1, s));
}

}  // namespace
}  // namespace wam
