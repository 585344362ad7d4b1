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

#include "wam/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wam {

namespace {

Tensor xavier(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(fan_in * fan_out);
  for (auto& v : values) v = dist(rng);
  return Tensor::from({fan_in, fan_out}, std::move(values), true);
}

Tensor zeros_param(std::size_t n) { return Tensor::zeros({n}, true); }

AttentionParams init_attention(std::size_t d, std::mt19937_64& rng) {
  AttentionParams p;
  p.w_q = xavier(d, d, rng);
  p.w_k = xavier(d, d, rng);
  p.w_v = xavier(d, d, rng);
  p.w_o = xavier(d, d, rng);
  p.b_o = zeros_param(d);
  return p;
}

FeedForwardParams init_ff(std::size_t d, std::size_t d_ff, std::mt19937_64& rng) {
  return {xavier(d, d_ff, rng), zeros_param(d_ff), xavier(d_ff, d, rng), zeros_param(d)};
}

LayerNormParams init_norm(std::size_t d) {
  return {Tensor::full({d}, 1.0, true), zeros_param(d)};
}

void name_attention(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                    const AttentionParams& p) {
  out.emplace_back(prefix + ".w_q", p.w_q);
  out.emplace_back(prefix + ".w_k", p.w_k);
  out.emplace_back(prefix + ".w_v", p.w_v);
  out.emplace_back(prefix + ".w_o", p.w_o);
  out.emplace_back(prefix + ".b_o", p.b_o);
}

void name_ff(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
             const FeedForwardParams& p) {
  out.emplace_back(prefix + ".w1", p.w1);
  out.emplace_back(prefix + ".b1", p.b1);
  out.emplace_back(prefix + ".w2", p.w2);
  out.emplace_back(prefix + ".b2", p.b2);
}

void name_norm(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
               const LayerNormParams& p) {
  out.emplace_back(prefix + ".gain", p.gain);
  out.emplace_back(prefix + ".bias", p.bias);
}

Tensor dropout(const Tensor& x, const TransformerConfig& config, const ForwardOptions& options) {
  if (!options.train_mode || config.dropout <= 0.0) return x;
  if (options.rng == nullptr) throw std::invalid_argument("forward: dropout needs an rng");
  std::bernoulli_distribution keep(1.0 - config.dropout);
  const double factor = 1.0 / (1.0 - config.dropout);
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = keep(*options.rng) ? factor : 0.0;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

// Positional encodings repeated for each sentence of a flattened batch.
Tensor tiled_positions(std::size_t batch, std::size_t len, const TransformerConfig& config) {
  const Tensor pe = positional_encoding(len, config.d_model, config.max_position);
  std::vector<double> values;
  values.reserve(batch * pe.numel());
  for (std::size_t b = 0; b < batch; ++b) values.insert(values.end(), pe.data().begin(), pe.data().end());
  return Tensor::from({batch * len, config.d_model}, std::move(values));
}

Tensor feed_forward(const Tensor& x, const FeedForwardParams& p) {
  return add(matmul(relu(add(matmul(x, p.w1), p.b1)), p.w2), p.b2);
}

Tensor norm(const Tensor& x, const LayerNormParams& p) { return layer_norm(x, p.gain, p.bias, 1e-6); }

Tensor split_heads(const Tensor& x, std::size_t batch, std::size_t len, std::size_t heads) {
  const std::size_t dk = x.dim(1) / heads;
  return reshape(permute(reshape(x, {batch, len, heads, dk}), {0, 2, 1, 3}),
                 {batch * heads, len, dk});
}

Tensor merge_heads(const Tensor& x, std::size_t batch, std::size_t len, std::size_t heads) {
  const std::size_t dk = x.dim(2);
  return reshape(permute(reshape(x, {batch, heads, len, dk}), {0, 2, 1, 3}),
                 {batch * len, heads * dk});
}

Tensor encode(const Batch& batch, const ModelParams& params, const TransformerConfig& config,
              const ForwardOptions& options) {
  Tensor x = add(embed(batch.source, params.source),
                 tiled_positions(batch.size, batch.source_len, config));
  x = dropout(x, config, options);
  const auto mask = AttentionMask::padding(batch.source_len, batch.source_lengths, batch.source_len);
  for (const auto& layer : params.encoder) {
    Tensor a = multi_head_attention(x, x, layer.self_attn, config.n_heads, mask).output;
    x = norm(add(x, dropout(a, config, options)), layer.norm1);
    Tensor f = feed_forward(x, layer.ff);
    x = norm(add(x, dropout(f, config, options)), layer.norm2);
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config and parameters

std::vector<std::string> TransformerConfig::problems() const {
  std::vector<std::string> out;
  if (d_model == 0) out.emplace_back("d_model must be positive");
  if (n_heads == 0) out.emplace_back("n_heads must be positive");
  else if (d_model % n_heads != 0) out.emplace_back("d_model must be divisible by n_heads");
  if (d_ff == 0) out.emplace_back("d_ff must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) out.emplace_back("dropout must lie in [0, 1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
    out.emplace_back("label_smoothing must lie in [0, 1)");
  if (max_position < 2) out.emplace_back("max_position must be at least 2");
  return out;
}

void TransformerConfig::validate() const {
  const auto issues = problems();
  if (issues.empty()) return;
  std::ostringstream os;
  os << "invalid transformer config:";
  for (const auto& p : issues) os << ' ' << p << ';';
  throw std::invalid_argument(os.str());
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("embed.source", source.weight);
  out.emplace_back("embed.target", target.weight);
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    const std::string p = "encoder." + std::to_string(i);
    name_attention(out, p + ".self_attn", encoder[i].self_attn);
    name_norm(out, p + ".norm1", encoder[i].norm1);
    name_ff(out, p + ".ff", encoder[i].ff);
    name_norm(out, p + ".norm2", encoder[i].norm2);
  }
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    const std::string p = "decoder." + std::to_string(i);
    name_attention(out, p + ".self_attn", decoder[i].self_attn);
    name_norm(out, p + ".norm1", decoder[i].norm1);
    name_attention(out, p + ".cross_attn", decoder[i].cross_attn);
    name_norm(out, p + ".norm2", decoder[i].norm2);
    name_ff(out, p + ".ff", decoder[i].ff);
    name_norm(out, p + ".norm3", decoder[i].norm3);
  }
  out.emplace_back("output.w", out_w);
  out.emplace_back("output.b", out_b);
  return out;
}

std::vector<Tensor> ModelParams::all() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : all()) n += t.numel();
  return n;
}

ModelParams init_params(const TransformerConfig& config, std::size_t source_vocab,
                        std::size_t target_vocab, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = config.d_model;
  ModelParams p;
  p.source = {"source", xavier(source_vocab, d, rng)};
  p.target = {"target", xavier(target_vocab, d, rng)};
  for (std::size_t i = 0; i < config.n_encoder_layers; ++i) {
    EncoderLayerParams layer;
    layer.self_attn = init_attention(d, rng);
    layer.norm1 = init_norm(d);
    layer.ff = init_ff(d, config.d_ff, rng);
    layer.norm2 = init_norm(d);
    p.encoder.push_back(std::move(layer));
  }
  for (std::size_t i = 0; i < config.n_decoder_layers; ++i) {
    DecoderLayerParams layer;
    layer.self_attn = init_attention(d, rng);
    layer.norm1 = init_norm(d);
    layer.cross_attn = init_attention(d, rng);
    layer.norm2 = init_norm(d);
    layer.ff = init_ff(d, config.d_ff, rng);
    layer.norm3 = init_norm(d);
    p.decoder.push_back(std::move(layer));
  }
  p.out_w = xavier(d, target_vocab, rng);
  p.out_b = zeros_param(target_vocab);
  return p;
}

std::size_t expected_parameter_count(const TransformerConfig& config, std::size_t source_vocab,
                                     std::size_t target_vocab) {
  const std::size_t d = config.d_model;
  const std::size_t attn = 4 * d * d + d;
  const std::size_t ff = 2 * d * config.d_ff + config.d_ff + d;
  const std::size_t ln = 2 * d;
  return (source_vocab + target_vocab) * d + config.n_encoder_layers * (attn + ff + 2 * ln) +
         config.n_decoder_layers * (2 * attn + ff + 3 * ln) + d * target_vocab + target_vocab;
}

// ---------------------------------------------------------------------------
// Embedding and positions

Tensor embed_unscaled(std::span<const int> ids, const EmbeddingTable& table) {
  return gather_rows(table.weight, ids);
}

Tensor embed(std::span<const int> ids, const EmbeddingTable& table) {
  const double factor = std::sqrt(static_cast<double>(table.weight.dim(1)));
  return scale(embed_unscaled(ids, table), factor);
}

Tensor positional_encoding(std::size_t len, std::size_t d_model, std::size_t max_position) {
  if (len > max_position)
    throw std::invalid_argument("positional_encoding: length " + std::to_string(len) +
                                " exceeds max_position " + std::to_string(max_position));
  std::vector<double> pe(len * d_model);
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t i = 0; 2 * i < d_model; ++i) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
      pe[pos * d_model + 2 * i] = std::sin(angle);
      if (2 * i + 1 < d_model) pe[pos * d_model + 2 * i + 1] = std::cos(angle);
    }
  }
  return Tensor::from({len, d_model}, std::move(pe));
}

// ---------------------------------------------------------------------------
// Attention

AttentionMask AttentionMask::none(std::size_t batch, std::size_t len_q, std::size_t len_k) {
  return {batch, len_q, len_k, std::vector<std::uint8_t>(batch * len_q * len_k, 0)};
}

AttentionMask AttentionMask::padding(std::size_t len_q, std::span<const std::size_t> key_lengths,
                                     std::size_t len_k) {
  AttentionMask m = none(key_lengths.size(), len_q, len_k);
  for (std::size_t b = 0; b < m.batch; ++b)
    for (std::size_t q = 0; q < len_q; ++q)
      for (std::size_t k = key_lengths[b]; k < len_k; ++k) m.blocked[(b * len_q + q) * len_k + k] = 1;
  return m;
}

AttentionMask AttentionMask::causal(std::span<const std::size_t> key_lengths, std::size_t len) {
  AttentionMask m = padding(len, key_lengths, len);
  for (std::size_t b = 0; b < m.batch; ++b)
    for (std::size_t q = 0; q < len; ++q)
      for (std::size_t k = q + 1; k < len; ++k) m.blocked[(b * len + q) * len + k] = 1;
  return m;
}

Tensor AttentionMask::additive(std::size_t heads) const {
  const std::size_t plane = len_q * len_k;
  std::vector<double> values(batch * heads * plane, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < plane; ++i)
        if (blocked[b * plane + i]) values[(b * heads + h) * plane + i] = kMaskedScore;
  return Tensor::from({batch * heads, len_q, len_k}, std::move(values));
}

AttentionOutput attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          const Tensor& additive_mask) {
  if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3 || q.dim(2) != k.dim(2) ||
      k.dim(1) != v.dim(1) || q.dim(0) != k.dim(0) || k.dim(0) != v.dim(0))
    throw ShapeError("attention", {q.shape(), k.shape(), v.shape()});
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.dim(2))));
  if (additive_mask.defined()) scores = add(scores, additive_mask);
  Tensor weights = softmax(scores);
  return {matmul(weights, v), weights};
}

MultiHeadOutput multi_head_attention(const Tensor& x_q, const Tensor& x_kv,
                                     const AttentionParams& params, std::size_t n_heads,
                                     const AttentionMask& mask) {
  const std::size_t batch = mask.batch, len_q = mask.len_q, len_k = mask.len_k;
  if (x_q.rank() != 2 || x_kv.rank() != 2 || x_q.dim(0) != batch * len_q ||
      x_kv.dim(0) != batch * len_k || n_heads == 0 || x_q.dim(1) % n_heads != 0)
    throw ShapeError("multi_head_attention", {x_q.shape(), x_kv.shape()},
                     "mask is " + std::to_string(batch) + "x" + std::to_string(len_q) + "x" +
                         std::to_string(len_k));
  Tensor q = split_heads(matmul(x_q, params.w_q), batch, len_q, n_heads);
  Tensor k = split_heads(matmul(x_kv, params.w_k), batch, len_k, n_heads);
  Tensor v = split_heads(matmul(x_kv, params.w_v), batch, len_k, n_heads);
  auto att = attention(q, k, v, mask.additive(n_heads));
  Tensor merged = merge_heads(att.output, batch, len_q, n_heads);
  return {add(matmul(merged, params.w_o), params.b_o), att.weights};
}

// ---------------------------------------------------------------------------
// Full model

Tensor forward(const Batch& batch, const ModelParams& params, const TransformerConfig& config,
               const ForwardOptions& options) {
  if (batch.size == 0 || batch.target_len < 2)
    throw std::invalid_argument("forward: batch needs targets with BOS and EOS");
  const Tensor memory = encode(batch, params, config, options);

  const std::size_t len = batch.target_len - 1;
  std::vector<int> decoder_in;
  decoder_in.reserve(batch.size * len);
  std::vector<std::size_t> in_lengths;
  for (std::size_t b = 0; b < batch.size; ++b) {
    for (std::size_t t = 0; t < len; ++t) decoder_in.push_back(batch.target_at(b, t));
    in_lengths.push_back(batch.target_lengths[b] - 1);
  }
  Tensor y = add(embed(decoder_in, params.target), tiled_positions(batch.size, len, config));
  y = dropout(y, config, options);
  const auto self_mask = AttentionMask::causal(in_lengths, len);
  const auto cross_mask = AttentionMask::padding(len, batch.source_lengths, batch.source_len);
  for (const auto& layer : params.decoder) {
    Tensor s = multi_head_attention(y, y, layer.self_attn, config.n_heads, self_mask).output;
    y = norm(add(y, dropout(s, config, options)), layer.norm1);
    Tensor c = multi_head_attention(y, memory, layer.cross_attn, config.n_heads, cross_mask).output;
    y = norm(add(y, dropout(c, config, options)), layer.norm2);
    Tensor f = feed_forward(y, layer.ff);
    y = norm(add(y, dropout(f, config, options)), layer.norm3);
  }
  Tensor logits = add(matmul(y, params.out_w), params.out_b);
  return reshape(logits, {batch.size, len, params.out_w.dim(1)});
}

std::vector<int> decoder_targets(const Batch& batch) {
  std::vector<int> out;
  out.reserve(batch.size * (batch.target_len - 1));
  for (std::size_t b = 0; b < batch.size; ++b)
    for (std::size_t t = 1; t < batch.target_len; ++t) out.push_back(batch.target_at(b, t));
  return out;
}

// ---------------------------------------------------------------------------
// Loss

std::vector<double> smoothed_distribution(std::size_t vocab, int true_id, double epsilon,
                                          int pad_id) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("label smoothing epsilon must lie in [0, 1)");
  if (true_id < 0 || static_cast<std::size_t>(true_id) >= vocab || true_id == pad_id)
    throw std::invalid_argument("smoothed_distribution: invalid true id " + std::to_string(true_id));
  if (epsilon > 0.0 && vocab < 3)
    throw std::invalid_argument("smoothed_distribution: vocabulary too small to smooth");
  std::vector<double> q(vocab, epsilon > 0.0 ? epsilon / static_cast<double>(vocab - 2) : 0.0);
  if (pad_id >= 0 && static_cast<std::size_t>(pad_id) < vocab) q[static_cast<std::size_t>(pad_id)] = 0.0;
  q[static_cast<std::size_t>(true_id)] = 1.0 - epsilon;
  return q;
}

Tensor label_smoothed_loss(const Tensor& logits, std::span<const int> targets, double epsilon,
                           int pad_id) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("label smoothing epsilon must lie in [0, 1)");
  if (logits.rank() < 2) throw ShapeError("label_smoothed_loss", {logits.shape()});
  const std::size_t vocab = logits.shape().back();
  const std::size_t rows = logits.numel() / vocab;
  if (rows != targets.size())
    throw ShapeError("label_smoothed_loss", {logits.shape(), {targets.size()}},
                     "one target per logit row expected");
  std::size_t count = 0;
  for (int t : targets) count += t != pad_id;
  if (count == 0) throw std::invalid_argument("label_smoothed_loss: no non-pad targets");

  const double inv = 1.0 / static_cast<double>(count);
  std::vector<double> weights(rows * vocab, 0.0);
  double negentropy = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] == pad_id) continue;
    const auto q = smoothed_distribution(vocab, targets[r], epsilon, pad_id);
    for (std::size_t c = 0; c < vocab; ++c) {
      weights[r * vocab + c] = q[c] * inv;
      if (q[c] > 0.0) negentropy += q[c] * std::log(q[c]) * inv;
    }
  }
  Tensor logp = log_softmax(reshape(logits, {rows, vocab}));
  Tensor cross = sum(mul(logp, Tensor::from({rows, vocab}, std::move(weights))));
  return add(scale(cross, -1.0), Tensor::scalar(negentropy));
}

std::vector<int> greedy_decode(const std::vector<int>& source, const ModelParams& params,
                               const TransformerConfig& config, std::size_t max_len) {
  NoGradGuard no_grad;
  std::vector<EncodedPair> pair(1);
  pair[0].source = source;
  std::vector<int> produced;
  std::vector<int> prefix{Vocab::kBos};
  for (std::size_t step = 0; step < max_len; ++step) {
    pair[0].target = prefix;
    pair[0].target.push_back(Vocab::kPad);  // slot for the predicted position
    Batch batch = make_batch(pair, {0});
    batch.target_lengths[0] = pair[0].target.size();
    const Tensor logits = forward(batch, params, config);
    const std::size_t vocab = logits.dim(2);
    const auto row = logits.data().subspan((prefix.size() - 1) * vocab, vocab);
    int best = -1;
    double best_score = -INFINITY;
    for (std::size_t c = 0; c < vocab; ++c) {
      if (static_cast<int>(c) == Vocab::kPad || static_cast<int>(c) == Vocab::kBos) continue;
      if (row[c] > best_score) {
        best_score = row[c];
        best = static_cast<int>(c);
      }
    }
    if (best == Vocab::kEos) break;
    produced.push_back(best);
    prefix.push_back(best);
  }
  return produced;
}

}  // namespace wam
