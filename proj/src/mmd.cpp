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

#include "wam/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace wam {

std::vector<double> KernelConfig::sigmas() const {
  validate();
  std::vector<double> out;
  for (int i = lo; i <= hi; ++i) out.push_back(std::pow(10.0, i));
  return out;
}

void KernelConfig::validate() const {
  if (lo > hi) throw std::invalid_argument("KernelConfig: lo must not exceed hi");
}

double multiscale_rbf(std::span<const double> x, std::span<const double> y,
                      const KernelConfig& config) {
  if (x.size() != y.size())
    throw ShapeError("multiscale_rbf", {{x.size()}, {y.size()}}, "dimension mismatch");
  double dist = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dist += (x[i] - y[i]) * (x[i] - y[i]);
  double k = 0.0;
  for (double sigma : config.sigmas()) k += std::exp(-dist / (2.0 * sigma * sigma));
  return k;
}

Tensor multiscale_rbf_matrix(const Tensor& x, const Tensor& y, const KernelConfig& config) {
  const Tensor dist = pairwise_sqdist(x, y);
  Tensor k;
  for (double sigma : config.sigmas()) {
    Tensor term = exp(scale(dist, -1.0 / (2.0 * sigma * sigma)));
    k = k.defined() ? add(k, term) : term;
  }
  return k;
}

Tensor sentence_mmd(const Tensor& source_tokens, const Tensor& target_tokens,
                    const KernelConfig& config) {
  if (source_tokens.rank() != 2 || target_tokens.rank() != 2 ||
      source_tokens.dim(1) != target_tokens.dim(1))
    throw ShapeError("sentence_mmd", {source_tokens.shape(), target_tokens.shape()});
  if (source_tokens.dim(0) == 0 || target_tokens.dim(0) == 0)
    throw std::invalid_argument("sentence_mmd: empty token set");
  const Tensor ss = mean(multiscale_rbf_matrix(source_tokens, source_tokens, config));
  const Tensor tt = mean(multiscale_rbf_matrix(target_tokens, target_tokens, config));
  const Tensor st = mean(multiscale_rbf_matrix(source_tokens, target_tokens, config));
  return sub(add(ss, tt), scale(st, 2.0));
}

MmdResult batch_mmd_loss(const std::vector<std::pair<Tensor, Tensor>>& token_sets,
                         const KernelConfig& config) {
  MmdResult result;
  Tensor total;
  for (const auto& [s, t] : token_sets) {
    if (!s.defined() || !t.defined() || s.dim(0) == 0 || t.dim(0) == 0) {
      ++result.skipped;
      continue;
    }
    Tensor term = sentence_mmd(s, t, config);
    total = total.defined() ? add(total, term) : term;
    ++result.used;
  }
  result.loss = result.used == 0 ? Tensor::scalar(0.0)
                                 : scale(total, 1.0 / static_cast<double>(result.used));
  return result;
}

std::vector<std::pair<Tensor, Tensor>> batch_token_sets(const Batch& batch,
                                                        const ModelParams& params,
                                                        const AlignConfig& align) {
  auto keep = [&](int id) {
    if (id == Vocab::kPad) return false;
    if (align.exclude_special_tokens && (id == Vocab::kBos || id == Vocab::kEos)) return false;
    return true;
  };
  auto lookup = [&](const std::vector<int>& ids, const EmbeddingTable& table) -> Tensor {
    if (ids.empty()) return {};
    return align.use_unscaled_embeddings ? embed_unscaled(ids, table) : embed(ids, table);
  };
  std::vector<std::pair<Tensor, Tensor>> sets;
  sets.reserve(batch.size);
  for (std::size_t b = 0; b < batch.size; ++b) {
    std::vector<int> src, tgt;
    for (std::size_t i = 0; i < batch.source_lengths[b]; ++i)
      if (keep(batch.source_at(b, i))) src.push_back(batch.source_at(b, i));
    for (std::size_t i = 0; i < batch.target_lengths[b]; ++i)
      if (keep(batch.target_at(b, i))) tgt.push_back(batch.target_at(b, i));
    sets.emplace_back(lookup(src, params.source), lookup(tgt, params.target));
  }
  return sets;
}

MmdResult batch_mmd_loss(const Batch& batch, const ModelParams& params,
                         const KernelConfig& kernel, const AlignConfig& align) {
  return batch_mmd_loss(batch_token_sets(batch, params, align), kernel);
}

WamLoss wam_loss(const Batch& batch, const ModelParams& params, const TransformerConfig& model,
                 const KernelConfig& kernel, const AlignConfig& align,
                 const ForwardOptions& options) {
  if (align.mmd_weight < 0.0) throw std::invalid_argument("AlignConfig: mmd_weight must be >= 0");
  WamLoss out;
  const Tensor logits = forward(batch, params, model, options);
  out.translation = label_smoothed_loss(logits, decoder_targets(batch), model.label_smoothing);
  auto mmd = batch_mmd_loss(batch, params, kernel, align);
  out.mmd = mmd.loss;
  out.mmd_skipped = mmd.skipped;
  out.total = add(out.translation, scale(out.mmd, align.mmd_weight));
  return out;
}

LandmarkSet landmarks_from_dictionary(const Dictionary& dict, const Vocab& source,
                                      const Vocab& target, double sample_fraction) {
  LandmarkSet set;
  set.sample_fraction = sample_fraction;
  for (const auto& [s, t] : dict.pairs)
    if (source.contains(s) && target.contains(t)) set.pairs.emplace_back(source.id(s), target.id(t));
  return set;
}

std::vector<std::size_t> sample_landmarks(const LandmarkSet& set, std::uint64_t seed) {
  if (set.pairs.empty()) throw std::invalid_argument("landmark set is empty");
  if (!(set.sample_fraction > 0.0 && set.sample_fraction <= 1.0))
    throw std::invalid_argument("landmark sample fraction must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(
      std::ceil(set.sample_fraction * static_cast<double>(set.pairs.size()) - 1e-9));
  std::vector<std::size_t> order(set.pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::max<std::size_t>(1, k));
  std::sort(order.begin(), order.end());
  return order;
}

Tensor landmark_l2_loss(const ModelParams& params, const LandmarkSet& set,
                        std::span<const std::size_t> sample) {
  if (sample.empty()) throw std::invalid_argument("landmark sample is empty");
  std::vector<int> src, tgt;
  for (auto i : sample) {
    src.push_back(set.pairs.at(i).first);
    tgt.push_back(set.pairs.at(i).second);
  }
  const Tensor diff = sub(embed_unscaled(src, params.source), embed_unscaled(tgt, params.target));
  const std::size_t d = diff.dim(1);
  const Tensor sq_norms = matmul(mul(diff, diff), Tensor::full({d, 1}, 1.0));
  return mean(sqrt(sq_norms));
}

Tensor landmark_l2_loss(const ModelParams& params, const LandmarkSet& set, std::uint64_t seed) {
  const auto sample = sample_landmarks(set, seed);
  return landmark_l2_loss(params, set, sample);
}

}  // namespace wam
