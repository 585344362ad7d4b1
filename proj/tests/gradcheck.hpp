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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "wam/tensor.hpp"

namespace wam::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = u(rng);
  return Tensor::from(std::move(shape), std::move(values), requires_grad);
}

/// Projects any output onto a fixed random direction so every component
/// contributes to the checked scalar.
inline Tensor project(const Tensor& out, std::mt19937_64& rng) {
  if (out.numel() == 1 && out.rank() == 0) return out;
  const Tensor w = random_tensor(out.shape(), rng, -1.0, 1.0, false);
  return sum(mul(out, w));
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t refined = 0;  // elements re-measured because a kink lay within h
};

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
/// element of every input, with central differences of step h. When the two
/// one-sided slopes disagree by more than 0.1% a ReLU kink may lie inside the
/// stencil and the central difference is meaningless there; such elements
/// are re-measured with step h / 100.
inline GradCheck check_gradients(const std::function<Tensor()>& loss_fn, std::vector<Tensor> inputs,
                                 double h = 1e-5, double floor = 1e-3) {
  for (auto& t : inputs) t.zero_grad();
  GradientMap grads;
  {
    const Tensor loss = loss_fn();
    grads = backward(loss);
  }
  double base;
  {
    NoGradGuard ng;
    base = loss_fn().item();
  }
  GradCheck result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_data();
    std::vector<double> analytic(values.size(), 0.0);
    if (grads.contains(inputs[k])) {
      auto g = grads.at(inputs[k]);
      std::copy(g.begin(), g.end(), analytic.begin());
    }
    auto slopes = [&](std::size_t i, double step) {
      const double saved = values[i];
      NoGradGuard ng;
      values[i] = saved + step;
      const double plus = loss_fn().item();
      values[i] = saved - step;
      const double minus = loss_fn().item();
      values[i] = saved;
      return std::pair{(plus - base) / step, (base - minus) / step};
    };
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto [up, down] = slopes(i, h);
      if (std::abs(up - down) > 1e-3 * std::max({std::abs(up), std::abs(down), floor})) {
        std::tie(up, down) = slopes(i, h / 100.0);
        ++result.refined;
      }
      const double numeric = 0.5 * (up + down);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = "input " + std::to_string(k) + " element " + std::to_string(i) + ": analytic " +
                       std::to_string(analytic[i]) + " numeric " + std::to_string(numeric);
      }
    }
  }
  return result;
}

}  // namespace wam::testing
