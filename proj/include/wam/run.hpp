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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wam/checkpoint.hpp"
#include "wam/corpus.hpp"
#include "wam/eval.hpp"
#include "wam/mmd.hpp"
#include "wam/optim.hpp"
#include "wam/train.hpp"
#include "wam/transformer.hpp"

namespace wam {

/// Everything that determines a training run. Parsed from an INI-style file:
///
///   [run]       mode, seed, steps, output_dir, checkpoint_every
///   [corpus]    source, target, dictionary, max_len, max_ratio,
///               train_fraction, min_count, token_budget, bucket_size
///   [model]     d_model, n_heads, n_encoder_layers, n_decoder_layers, d_ff,
///               dropout, label_smoothing, max_position
///   [kernel]    scale_lo, scale_hi
///   [align]     mmd_weight, use_unscaled_embeddings, exclude_special_tokens
///   [landmark]  fraction, split (first-half | all)
///   [optim]     beta1, beta2, epsilon, warmup_steps
///
/// Relative paths resolve against the directory holding the config file.
struct RunConfig {
  TrainMode mode = TrainMode::kWam;
  std::optional<std::uint64_t> seed;
  std::int64_t steps = 3000;
  std::filesystem::path output_dir;
  std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints

  std::filesystem::path source_corpus;
  std::filesystem::path target_corpus;
  std::optional<std::filesystem::path> dictionary;
  FilterOptions filter;
  double train_fraction = 0.9;
  std::size_t min_count = 1;
  BatchingOptions batching{512, 256};

  TransformerConfig model;
  KernelConfig kernel;
  AlignConfig align;
  AdamConfig adam;
  int warmup_steps = 200;

  double landmark_fraction = 0.5;
  std::string landmark_split = "first-half";
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> problems);
  std::vector<std::string> problems;
};

/// Parse errors (bad numbers, unknown keys) are collected and thrown together.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Every problem with the config, including missing input files. Empty when valid.
std::vector<std::string> validate_run_config(const RunConfig& config);

/// Fully resolved config in the same file format, absolute paths.
std::string format_run_config(const RunConfig& config);

TrainOptions make_train_options(const RunConfig& config);

struct PreparedCorpus {
  std::vector<SentencePair> train;
  std::vector<SentencePair> valid;
  std::size_t total_pairs = 0;
  std::size_t filtered_pairs = 0;
  Vocab source_vocab;
  Vocab target_vocab;
  TrainData data;
};

/// Read, filter, split, build vocabularies, encode and collect landmarks.
PreparedCorpus prepare_corpus(const RunConfig& config);

struct RunOutcome {
  Checkpoint checkpoint;
  std::vector<StepRecord> log;
  double valid_translation_loss = 0.0;
  std::filesystem::path checkpoint_path;
  std::filesystem::path metrics_path;
};

/// Train per config and write config.cfg, metrics.tsv, model.ckpt,
/// checkpoints/step_N.ckpt and summary.json into the output directory.
/// On a non-finite loss the state dump goes to nonfinite_dump.txt and the
/// NonFiniteLoss is rethrown.
RunOutcome run_training(const RunConfig& config, std::ostream* progress = nullptr);

/// Mean label-smoothed loss over `pairs` without gradient tracking.
double translation_loss(const std::vector<EncodedPair>& pairs, const ModelParams& params,
                        const TransformerConfig& config, std::size_t token_budget);

EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, const Dictionary& dict,
                               Similarity similarity = Similarity::kCosine);

}  // namespace wam
