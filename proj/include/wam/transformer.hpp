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
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wam/corpus.hpp"
#include "wam/tensor.hpp"

namespace wam {

struct TransformerConfig {
  std::size_t d_model = 32;
  std::size_t n_heads = 2;
  std::size_t n_encoder_layers = 2;
  std::size_t n_decoder_layers = 2;
  std::size_t d_ff = 64;
  double dropout = 0.0;
  double label_smoothing = 0.1;
  std::size_t max_position = 256;

  std::size_t d_k() const { return d_model / n_heads; }
  std::size_t d_v() const { return d_model / n_heads; }
  /// Empty when valid.
  std::vector<std::string> problems() const;
  void validate() const;
};

/// One language's word table, rows indexed by vocabulary id.
struct EmbeddingTable {
  std::string language;
  Tensor weight;  // [vocab, d_model]

  std::size_t rows() const { return weight.dim(0); }
};

struct AttentionParams {
  Tensor w_q, w_k, w_v;  // [d_model, d_model], heads side by side
  Tensor w_o, b_o;
};

struct FeedForwardParams {
  Tensor w1, b1, w2, b2;
};

struct LayerNormParams {
  Tensor gain, bias;
};

struct EncoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams norm1;
  FeedForwardParams ff;
  LayerNormParams norm2;
};

struct DecoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams norm1;
  AttentionParams cross_attn;
  LayerNormParams norm2;
  FeedForwardParams ff;
  LayerNormParams norm3;
};

struct ModelParams {
  EmbeddingTable source;
  EmbeddingTable target;
  std::vector<EncoderLayerParams> encoder;
  std::vector<DecoderLayerParams> decoder;
  Tensor out_w;  // [d_model, |V_T|]
  Tensor out_b;

  /// Every learnable tensor in a fixed order, paired with a stable name.
  std::vector<std::pair<std::string, Tensor>> named() const;
  std::vector<Tensor> all() const;
  std::size_t parameter_count() const;
};

/// Xavier-uniform weights, zero biases, unit layer-norm gains.
ModelParams init_params(const TransformerConfig& config, std::size_t source_vocab,
                        std::size_t target_vocab, std::uint64_t seed);

std::size_t expected_parameter_count(const TransformerConfig& config, std::size_t source_vocab,
                                     std::size_t target_vocab);

/// Raw table rows for `ids` -> [ids.size(), d_model]. This is the view the
/// alignment losses use.
Tensor embed_unscaled(std::span<const int> ids, const EmbeddingTable& table);
/// Table rows scaled by sqrt(d_model), as fed to the transformer stacks.
Tensor embed(std::span<const int> ids, const EmbeddingTable& table);

/// Sinusoidal encodings [len, d_model]; throws if len > max_position.
Tensor positional_encoding(std::size_t len, std::size_t d_model, std::size_t max_position);

constexpr double kMaskedScore = -1e9;

/// Per-(batch, query, key) flags; true marks a key the query must ignore.
struct AttentionMask {
  std::size_t batch = 0, len_q = 0, len_k = 0;
  std::vector<std::uint8_t> blocked;

  static AttentionMask none(std::size_t batch, std::size_t len_q, std::size_t len_k);
  /// Blocks keys at positions >= lengths[b].
  static AttentionMask padding(std::size_t len_q, std::span<const std::size_t> key_lengths,
                               std::size_t len_k);
  /// Padding mask combined with blocking of future positions.
  static AttentionMask causal(std::span<const std::size_t> key_lengths, std::size_t len);

  /// Additive scores [batch * heads, len_q, len_k] with kMaskedScore on blocked keys.
  Tensor additive(std::size_t heads) const;
};

struct AttentionOutput {
  Tensor output;   // [b, len_q, d_v]
  Tensor weights;  // [b, len_q, len_k]
};

/// softmax(Q K^T / sqrt(d_k) + mask) V over batched [b, len, d] inputs.
/// `additive_mask` may be undefined for no masking.
AttentionOutput attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          const Tensor& additive_mask = {});

struct MultiHeadOutput {
  Tensor output;   // [batch * len_q, d_model]
  Tensor weights;  // [batch * heads, len_q, len_k]
};

/// Inputs are flattened [batch * len, d_model] activations.
MultiHeadOutput multi_head_attention(const Tensor& x_q, const Tensor& x_kv,
                                     const AttentionParams& params, std::size_t n_heads,
                                     const AttentionMask& mask);

struct ForwardOptions {
  bool train_mode = false;
  std::mt19937_64* rng = nullptr;  // required when train_mode and dropout > 0
};

/// Teacher-forced logits [batch, target_len - 1, |V_T|]: the decoder reads
/// target[:, :-1] and position t predicts target[:, t + 1].
Tensor forward(const Batch& batch, const ModelParams& params, const TransformerConfig& config,
               const ForwardOptions& options = {});

/// Gold ids the logits of `forward` are scored against, flattened row-major.
std::vector<int> decoder_targets(const Batch& batch);

/// Smoothed reference row: (1 - eps) on `true_id`, eps / (V - 2) on every
/// other non-pad id, 0 on pad.
std::vector<double> smoothed_distribution(std::size_t vocab, int true_id, double epsilon,
                                          int pad_id = Vocab::kPad);

/// Mean over non-pad positions of KL(smoothed || softmax(logits)).
Tensor label_smoothed_loss(const Tensor& logits, std::span<const int> targets, double epsilon,
                           int pad_id = Vocab::kPad);

/// Greedy decoding of one encoded source (BOS ... EOS). Returns the produced
/// ids without BOS and without the terminating EOS.
std::vector<int> greedy_decode(const std::vector<int>& source, const ModelParams& params,
                               const TransformerConfig& config, std::size_t max_len);

}  // namespace wam
