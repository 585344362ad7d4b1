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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wam/tensor.hpp"

namespace wam {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

/// Moment estimates for a fixed, ordered parameter list. Moments are sized
/// lazily on the first step.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// One bias-corrected Adam update of every parameter in `params`, in place.
/// Throws std::invalid_argument if a parameter has no gradient in `grads`
/// or if the state was built for a different parameter layout.
void adam_step(std::span<Tensor> params, const GradientMap& grads, AdamState& state,
               double lr);

/// Linear warmup followed by inverse-square-root decay.
struct LrSchedule {
  int d_model = 512;
  int warmup_steps = 2000;
};

/// d_model^-0.5 * min(step^-0.5, step * warmup^-1.5); step counts from 1.
double lr_at(std::int64_t step, const LrSchedule& schedule);

}  // namespace wam
