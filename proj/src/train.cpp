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

#include "wam/train.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace wam {

namespace {

constexpr std::uint64_t kStreamBatches = 1;
constexpr std::uint64_t kStreamLandmarks = 2;
constexpr std::uint64_t kStreamDropout = 3;

constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

std::string describe_state(const StepRecord& r, const ModelParams& params) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite loss at step " << r.step << "\n"
     << "L=" << r.total << " L_T=" << r.translation << " L_M=" << r.mmd
     << " landmark=" << r.landmark << " lr=" << r.lr << "\n";
  for (const auto& [name, t] : params.named()) {
    double norm = 0.0;
    bool finite = true;
    for (double v : t.data()) {
      norm += v * v;
      finite = finite && std::isfinite(v);
    }
    os << name << " " << shape_str(t.shape()) << " norm=" << std::sqrt(norm)
       << (finite ? "" : " NON-FINITE") << "\n";
  }
  return os.str();
}

double value_or_nan(const Tensor& t) { return t.defined() ? t.item() : kNotApplicable; }

}  // namespace

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kWam: return "wam";
    case TrainMode::kTransformerOnly: return "transformer-only";
    case TrainMode::kSupervisedLandmark: return "supervised-landmark";
  }
  return "unknown";
}

TrainMode parse_train_mode(std::string_view text) {
  if (text == "wam") return TrainMode::kWam;
  if (text == "transformer-only") return TrainMode::kTransformerOnly;
  if (text == "supervised-landmark") return TrainMode::kSupervisedLandmark;
  throw std::invalid_argument("unknown training mode '" + std::string(text) +
                              "' (expected wam, transformer-only or supervised-landmark)");
}

std::string format_step_record(const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g",
                static_cast<long long>(r.step), r.total, r.translation, r.mmd, r.landmark, r.lr);
  return buf;
}

StepRecord parse_step_record(std::string_view line) {
  std::istringstream in{std::string(line)};
  StepRecord r;
  std::string fields[6];
  for (auto& f : fields)
    if (!(in >> f)) throw std::invalid_argument("metrics record needs 6 fields: " + std::string(line));
  r.step = std::stoll(fields[0]);
  double* targets[5] = {&r.total, &r.translation, &r.mmd, &r.landmark, &r.lr};
  for (int i = 0; i < 5; ++i) *targets[i] = std::stod(fields[i + 1]);
  return r;
}

NonFiniteLoss::NonFiniteLoss(const StepRecord& record, std::string dump)
    : std::runtime_error("non-finite loss at step " + std::to_string(record.step)),
      record_(record),
      dump_(std::move(dump)) {}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 over the combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1) + 0xBF58476D1CE4E5B9ULL * index;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrainResult train(const TrainData& data, const TrainOptions& options, ModelParams params,
                  const StepCallback& on_step) {
  options.model.validate();
  options.kernel.validate();
  if (data.pairs.empty()) throw std::invalid_argument("train: no training pairs");
  if (options.steps < 0) throw std::invalid_argument("train: steps must be >= 0");
  if (options.mode == TrainMode::kSupervisedLandmark && data.landmarks.pairs.empty())
    throw std::invalid_argument("train: supervised-landmark mode needs landmarks");

  TrainResult result;
  std::vector<Tensor> tensors = params.all();
  AdamState adam{options.adam, 0, {}, {}};
  const LrSchedule schedule{static_cast<int>(options.model.d_model), options.warmup_steps};
  std::mt19937_64 dropout_rng(derive_seed(options.seed, kStreamDropout));
  const ForwardOptions forward_options{true, &dropout_rng};

  std::uint64_t epoch = 0;
  std::vector<Batch> batches;
  std::size_t next_batch = 0;
  std::vector<std::size_t> landmark_sample;

  for (std::int64_t step = 1; step <= options.steps; ++step) {
    if (next_batch == batches.size()) {
      batches = make_batches(data.pairs, options.batching, derive_seed(options.seed, kStreamBatches, epoch));
      if (options.mode == TrainMode::kSupervisedLandmark)
        landmark_sample = sample_landmarks(data.landmarks, derive_seed(options.seed, kStreamLandmarks, epoch));
      next_batch = 0;
      ++epoch;
    }
    const Batch& batch = batches[next_batch++];

    for (auto& t : tensors) t.zero_grad();
    StepRecord record;
    record.step = step;
    record.lr = lr_at(step, schedule);

    Tensor loss;
    Tensor translation;
    Tensor mmd;
    Tensor landmark;
    switch (options.mode) {
      case TrainMode::kWam: {
        auto parts = wam_loss(batch, params, options.model, options.kernel, options.align, forward_options);
        loss = parts.total;
        translation = parts.translation;
        mmd = parts.mmd;
        break;
      }
      case TrainMode::kTransformerOnly:
      case TrainMode::kSupervisedLandmark: {
        const Tensor logits = forward(batch, params, options.model, forward_options);
        translation = label_smoothed_loss(logits, decoder_targets(batch), options.model.label_smoothing);
        loss = translation;
        if (options.mode == TrainMode::kSupervisedLandmark) {
          landmark = landmark_l2_loss(params, data.landmarks, landmark_sample);
          loss = add(loss, landmark);
        }
        NoGradGuard no_grad;
        mmd = batch_mmd_loss(batch, params, options.kernel, options.align).loss;
        break;
      }
    }
    record.total = loss.item();
    record.translation = translation.item();
    record.mmd = value_or_nan(mmd);
    record.landmark = value_or_nan(landmark);
    if (!std::isfinite(record.total))
      throw NonFiniteLoss(record, describe_state(record, params));

    const GradientMap grads = backward(loss);
    adam_step(tensors, grads, adam, record.lr);

    result.log.push_back(record);
    if (on_step) on_step(record, params);
  }
  for (auto& t : tensors) t.zero_grad();
  result.params = std::move(params);
  return result;
}

TrainResult train(const TrainData& data, const TrainOptions& options, const StepCallback& on_step) {
  return train(data, options,
               init_params(options.model, data.source_vocab, data.target_vocab, options.seed),
               on_step);
}

}  // namespace wam
