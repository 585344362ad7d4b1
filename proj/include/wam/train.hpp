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
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wam/corpus.hpp"
#include "wam/mmd.hpp"
#include "wam/optim.hpp"
#include "wam/transformer.hpp"

namespace wam {

enum class TrainMode { kWam, kTransformerOnly, kSupervisedLandmark };

std::string_view to_string(TrainMode mode);
/// Accepts "wam", "transformer-only", "supervised-landmark".
TrainMode parse_train_mode(std::string_view text);

struct TrainOptions {
  TrainMode mode = TrainMode::kWam;
  TransformerConfig model;
  KernelConfig kernel;
  AlignConfig align;
  AdamConfig adam;
  int warmup_steps = 200;
  BatchingOptions batching{512, 256};
  std::int64_t steps = 3000;
  std::uint64_t seed = 1;
};

struct TrainData {
  std::vector<EncodedPair> pairs;
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;
  LandmarkSet landmarks;  // used by kSupervisedLandmark only
};

/// One metrics-log record. Terms that do not apply to a mode are NaN.
struct StepRecord {
  std::int64_t step = 0;
  double total = 0.0;
  double translation = 0.0;
  double mmd = 0.0;
  double landmark = 0.0;
  double lr = 0.0;
};

/// Tab-separated: step, L, L_T, L_M, landmark_loss, lr (17 significant digits).
std::string format_step_record(const StepRecord& record);
StepRecord parse_step_record(std::string_view line);

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(const StepRecord& record, std::string dump);
  const StepRecord& record() const { return record_; }
  /// Human-readable state at the failing step (losses, parameter norms).
  const std::string& dump() const { return dump_; }

 private:
  StepRecord record_;
  std::string dump_;
};

using StepCallback = std::function<void(const StepRecord&, const ModelParams&)>;

struct TrainResult {
  ModelParams params;
  std::vector<StepRecord> log;
};

/// Deterministic per-purpose seed derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

/// Fixed-step loop: batch, forward, mode-specific loss, backward, Adam with
/// the warmup schedule. Epochs reshuffle batches and redraw landmarks.
TrainResult train(const TrainData& data, const TrainOptions& options, ModelParams params,
                  const StepCallback& on_step = {});

/// Same, starting from init_params(model, vocab sizes, seed).
TrainResult train(const TrainData& data, const TrainOptions& options,
                  const StepCallback& on_step = {});

}  // namespace wam
