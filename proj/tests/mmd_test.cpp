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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "gradcheck.hpp"

namespace wam {
namespace {

using testing::check_gradients;
using testing::random_tensor;

// Independent term-by-term kernel used as the oracle below.
double naive_kernel(const double* x, const double* y, std::size_t d) {
  double d2 = 0;
  for (std::size_t i = 0; i < d; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  double k = 0;
  for (double s : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}) k += std::exp(-d2 / (2 * s * s));
  return k;
}

double naive_set_mean(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.dim(0), m = b.dim(0), d = a.dim(1);
  double s = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) s += naive_kernel(&a.data()[i * d], &b.data()[j * d], d);
  return s / static_cast<double>(n * m);
}

double naive_batch_mmd(const std::vector<std::pair<Tensor, Tensor>>& sets) {
  double total = 0;
  for (const auto& [xs, xt] : sets)
    total += naive_set_mean(xs, xs) + naive_set_mean(xt, xt) - 2 * naive_set_mean(xs, xt);
  return total / static_cast<double>(sets.size());
}

TEST(Kernel, KnownValues) {
  const std::vector<double> x = {1, 0}, y = {0, 0};
  EXPECT_EQ(multiscale_rbf(x, x), 6.0);
  EXPECT_NEAR(multiscale_rbf(x, y), std::exp(-50.0) + std::exp(-0.5) + std::exp(-0.005) + std::exp(-0.00005), 1e-15);
  EXPECT_NEAR(multiscale_rbf(x, y), 2.60146, 1e-4);
  EXPECT_EQ(KernelConfig{}.sigmas().size(), 6u);
  EXPECT_THROW((KernelConfig{3, 1}.validate()), std::invalid_argument);
}

TEST(Kernel, MatrixMatchesScalar) {
  std::mt19937_64 rng(1);
  const auto x = random_tensor({3, 4}, rng, -1, 1, false);
  const auto y = random_tensor({2, 4}, rng, -1, 1, false);
  const auto k = multiscale_rbf_matrix(x, y);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_NEAR(k.at(i * 2 + j),
                  multiscale_rbf(x.data().subspan(i * 4, 4), y.data().subspan(j * 4, 4)), 1e-14);
}

TEST(SentenceMmd, SingletonAndIdentity) {
  const auto x = Tensor::from({1, 2}, {1, 0});
  const auto y = Tensor::from({1, 2}, {0, 0});
  EXPECT_NEAR(sentence_mmd(x, y).item(), 6.79708, 1e-4);
  std::mt19937_64 rng(2);
  const auto a = random_tensor({5, 6}, rng, -1, 1, false);
  EXPECT_LE(std::abs(sentence_mmd(a, a).item()), 1e-12);
}

TEST(SentenceMmd, SymmetricAndNonNegative) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_tensor({1 + static_cast<std::size_t>(i % 5), 4}, rng, -1, 1, false);
    const auto b = random_tensor({1 + static_cast<std::size_t>(i % 7), 4}, rng, -1, 1, false);
    const double ab = sentence_mmd(a, b).item();
    EXPECT_NEAR(ab, sentence_mmd(b, a).item(), 1e-12);
    EXPECT_GE(ab, -1e-9);
  }
}

TEST(BatchMmd, MatchesTripleLoopOracle) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> len(1, 10);
  for (std::size_t m = 1; m <= 5; ++m) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<std::pair<Tensor, Tensor>> sets;
      for (std::size_t i = 0; i < m; ++i)
        sets.emplace_back(random_tensor({len(rng), 16}, rng, -0.3, 0.3, false),
                          random_tensor({len(rng), 16}, rng, -0.3, 0.3, false));
      const auto got = batch_mmd_loss(sets);
      EXPECT_EQ(got.used, m);
      EXPECT_NEAR(got.loss.item(), naive_batch_mmd(sets), 1e-12);
    }
  }
}

TEST(BatchMmd, MeanProperties) {
  std::mt19937_64 rng(5);
  const auto a = random_tensor({3, 4}, rng, -1, 1, false);
  const auto b = random_tensor({4, 4}, rng, -1, 1, false);
  const double single = sentence_mmd(a, b).item();
  EXPECT_NEAR(batch_mmd_loss({{a, b}}).loss.item(), single, 1e-15);
  EXPECT_NEAR(batch_mmd_loss({{a, b}, {a, b}}).loss.item(), single, 1e-15);
  EXPECT_NEAR(batch_mmd_loss({{a, a}, {b, b}}).loss.item(), 0.0, 1e-12);
  const auto skipped = batch_mmd_loss({{a, b}, {Tensor::zeros({0, 4}), b}});
  EXPECT_EQ(skipped.used, 1u);
  EXPECT_EQ(skipped.skipped, 1u);
  EXPECT_NEAR(skipped.loss.item(), single, 1e-15);
  EXPECT_EQ(batch_mmd_loss({}).loss.item(), 0.0);
}

TEST(BatchMmd, TokenSetsUseRawRowsWithoutSpecials) {
  TransformerConfig c;
  c.d_model = 4;
  c.n_heads = 1;
  const auto params = init_params(c, 10, 10, 6);
  const std::vector<EncodedPair> pairs = {{{1, 4, 5, 2}, {1, 6, 2}}, {{1, 7, 2}, {1, 8, 9, 9, 2}}};
  const auto batch = make_batch(pairs, {0, 1});
  const auto sets = batch_token_sets(batch, params, AlignConfig{});
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets[0].first.dim(0), 2u);
  EXPECT_EQ(sets[0].second.dim(0), 1u);
  EXPECT_EQ(sets[1].first.dim(0), 1u);
  EXPECT_EQ(sets[1].second.dim(0), 3u);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(sets[0].first.at(4 + j), params.source.weight.at(5 * 4 + j));
    EXPECT_EQ(sets[1].second.at(j), params.target.weight.at(8 * 4 + j));
  }
  const auto with_specials = batch_token_sets(batch, params, AlignConfig{10.0, true, false});
  EXPECT_EQ(with_specials[0].first.dim(0), 4u);
}

TEST(BatchMmd, GradientOnEmbeddingRows) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(700 + seed);
    std::vector<std::pair<Tensor, Tensor>> sets;
    for (int i = 0; i < 2; ++i)
      sets.emplace_back(random_tensor({4, 8}, rng, -0.3, 0.3), random_tensor({4, 8}, rng, -0.3, 0.3));
    auto r = check_gradients([&] { return batch_mmd_loss(sets).loss; },
                             {sets[0].first, sets[0].second, sets[1].first, sets[1].second});
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  }
}

TEST(BatchMmd, KernelGradient) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(800 + seed);
    auto x = random_tensor({3, 5}, rng, -0.5, 0.5);
    auto y = random_tensor({4, 5}, rng, -0.5, 0.5);
    const auto w = random_tensor({3, 4}, rng, -1, 1, false);
    auto r = check_gradients([&] { return sum(mul(multiscale_rbf_matrix(x, y), w)); }, {x, y});
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
    auto s = check_gradients([&] { return sentence_mmd(x, y); }, {x, y});
    EXPECT_LT(s.max_rel_error, 1e-4) << s.worst;
  }
}

TEST(BatchMmd, GradientStepDescends) {
  std::mt19937_64 rng(9);
  auto xs = random_tensor({4, 8}, rng, -0.3, 0.3);
  auto xt = random_tensor({4, 8}, rng, -0.3, 0.3);
  const double before = sentence_mmd(xs, xt).item();
  const auto grads = backward(sentence_mmd(xs, xt));
  for (Tensor* t : {&xs, &xt}) {
    auto values = t->mutable_data();
    const auto g = grads.at(*t);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= 1e-3 * g[i];
  }
  EXPECT_LT(sentence_mmd(xs, xt).item(), before);
}

TEST(WamLoss, Combination) {
  TransformerConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 1;
  c.d_ff = 16;
  const auto params = init_params(c, 10, 10, 10);
  const std::vector<EncodedPair> pairs = {{{1, 4, 5, 2}, {1, 6, 7, 2}}};
  const auto batch = make_batch(pairs, {0});
  const auto l10 = wam_loss(batch, params, c, {}, AlignConfig{10.0, true, true});
  EXPECT_NEAR(l10.total.item(), l10.translation.item() + 10 * l10.mmd.item(), 1e-12);
  const auto l0 = wam_loss(batch, params, c, {}, AlignConfig{0.0, true, true});
  EXPECT_EQ(l0.total.item(), l0.translation.item());
}

TEST(Landmarks, LossAndSampling) {
  TransformerConfig c;
  c.d_model = 4;
  c.n_heads = 1;
  auto params = init_params(c, 6, 6, 11);
  LandmarkSet one{{{4, 5}}, 1.0};
  auto src = params.source.weight.mutable_data();
  auto tgt = params.target.weight.mutable_data();
  const double e_s[4] = {3, 4, 0, 0};
  for (std::size_t j = 0; j < 4; ++j) {
    src[4 * 4 + j] = e_s[j];
    tgt[5 * 4 + j] = 0.0;
  }
  EXPECT_NEAR(landmark_l2_loss(params, one, 1).item(), 5.0, 1e-12);
  for (std::size_t j = 0; j < 4; ++j) tgt[5 * 4 + j] = e_s[j];
  EXPECT_EQ(landmark_l2_loss(params, one, 1).item(), 0.0);

  LandmarkSet ten;
  for (int i = 0; i < 10; ++i) ten.pairs.emplace_back(4, 4);
  const auto a = sample_landmarks(ten, 3);
  EXPECT_EQ(a.size(), 5u);
  EXPECT_EQ(a, sample_landmarks(ten, 3));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  ten.pairs.pop_back();
  EXPECT_EQ(sample_landmarks(ten, 3).size(), 5u);
}

TEST(Landmarks, FromDictionary) {
  const Vocab s("s", {"a", "b"});
  const Vocab t("t", {"x", "y"});
  const auto d = parse_dictionary("a x\nb y\nc z\na q\n");
  const auto set = landmarks_from_dictionary(d, s, t);
  ASSERT_EQ(set.pairs.size(), 2u);
  EXPECT_EQ(set.pairs[0], (std::pair<int, int>{4, 4}));
  EXPECT_EQ(set.pairs[1], (std::pair<int, int>{5, 5}));
}

}  // namespace
}  // namespace wam
