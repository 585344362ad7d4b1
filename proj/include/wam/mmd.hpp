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
#include <utility>
#include <vector>

#include "wam/corpus.hpp"
#include "wam/tensor.hpp"
#include "wam/transformer.hpp"

namespace wam {

/// Bandwidths sigma = 10^i for every integer i in [lo, hi].
struct KernelConfig {
  int lo = -3;
  int hi = 2;

  std::vector<double> sigmas() const;
  void validate() const;
};

struct AlignConfig {
  double mmd_weight = 10.0;
  bool use_unscaled_embeddings = true;
  bool exclude_special_tokens = true;
};

/// sum over sigma of exp(-|x - y|^2 / (2 sigma^2)).
double multiscale_rbf(std::span<const double> x, std::span<const double> y,
                      const KernelConfig& config = {});

/// Differentiable kernel matrix between the rows of x [n, d] and y [m, d].
Tensor multiscale_rbf_matrix(const Tensor& x, const Tensor& y, const KernelConfig& config = {});

/// Biased (diagonal-inclusive) squared MMD between two token sets, each side
/// normalized by its own size.
Tensor sentence_mmd(const Tensor& source_tokens, const Tensor& target_tokens,
                    const KernelConfig& config = {});

struct MmdResult {
  Tensor loss;  // mean over used pairs; zero scalar if none was usable
  std::size_t used = 0;
  std::size_t skipped = 0;  // pairs whose filtered token set was empty
};

/// Mean of sentence_mmd over paired token sets. Empty sets are skipped.
MmdResult batch_mmd_loss(const std::vector<std::pair<Tensor, Tensor>>& token_sets,
                         const KernelConfig& config = {});

/// Token sets of a batch looked up in the two embedding tables.
std::vector<std::pair<Tensor, Tensor>> batch_token_sets(const Batch& batch,
                                                        const ModelParams& params,
                                                        const AlignConfig& align);

MmdResult batch_mmd_loss(const Batch& batch, const ModelParams& params,
                         const KernelConfig& kernel, const AlignConfig& align);

struct WamLoss {
  Tensor total;        // translation + mmd_weight * mmd
  Tensor translation;  // label-smoothed KL
  Tensor mmd;
  std::size_t mmd_skipped = 0;
};

WamLoss wam_loss(const Batch& batch, const ModelParams& params, const TransformerConfig& model,
                 const KernelConfig& kernel, const AlignConfig& align,
                 const ForwardOptions& options = {});

struct LandmarkSet {
  std::vector<std::pair<int, int>> pairs;  // (source id, target id)
  double sample_fraction = 0.5;
};

/// Landmarks for every dictionary entry whose two words are in vocabulary.
LandmarkSet landmarks_from_dictionary(const Dictionary& dict, const Vocab& source,
                                      const Vocab& target, double sample_fraction = 0.5);

/// Indices of ceil(fraction * n) landmarks drawn without replacement, sorted.
std::vector<std::size_t> sample_landmarks(const LandmarkSet& set, std::uint64_t seed);

/// Mean Euclidean distance between the raw source and target rows of a
/// seeded landmark sample.
Tensor landmark_l2_loss(const ModelParams& params, const LandmarkSet& set, std::uint64_t seed);
Tensor landmark_l2_loss(const ModelParams& params, const LandmarkSet& set,
                        std::span<const std::size_t> sample);

}  // namespace wam
