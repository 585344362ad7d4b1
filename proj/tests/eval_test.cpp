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

#include "wam/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace wam {
namespace {

namespace fs = std::filesystem;

WordVectors make_vectors(const std::string& lang, const std::vector<std::string>& words, std::size_t dim,
                         std::vector<double> values) {
  return WordVectors(lang, words, dim, std::move(values));
}

WordVectors random_vectors(const std::string& prefix, std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<std::string> words;
  std::vector<double> values;
  for (std::size_t i = 0; i < n; ++i) {
    words.push_back(prefix + std::to_string(i));
    for (std::size_t j = 0; j < dim; ++j) values.push_back(g(rng));
  }
  return make_vectors(prefix, words, dim, values);
}

double oracle_r2(const std::vector<double>& xs, const std::vector<double>& xt) {
  const double mean = std::accumulate(xt.begin(), xt.end(), 0.0) / static_cast<double>(xt.size());
  double res = 0, tot = 0;
  for (std::size_t i = 0; i < xt.size(); ++i) {
    res += (xs[i] - xt[i]) * (xs[i] - xt[i]);
    tot += (xt[i] - mean) * (xt[i] - mean);
  }
  return 1 - res / tot;
}

double oracle_knn(const Dictionary& dict, const WordVectors& s, const WordVectors& t, std::size_t n) {
  std::map<std::string, std::set<std::string>> gold;
  for (const auto& [a, b] : dict.pairs)
    if (s.find(a) && t.find(b)) gold[a].insert(b);
  std::size_t hits = 0;
  for (const auto& [word, golds] : gold) {
    const auto q = s.row(*s.find(word));
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t r = 0; r < t.size(); ++r) {
      const auto v = t.row(r);
      double dot = 0, nq = 0, nv = 0;
      for (std::size_t j = 0; j < q.size(); ++j) {
        dot += q[j] * v[j];
        nq += q[j] * q[j];
        nv += v[j] * v[j];
      }
      scored.emplace_back(-dot / std::sqrt(nq * nv), r);
    }
    std::sort(scored.begin(), scored.end());
    bool hit = false;
    for (std::size_t k = 0; k < std::min(n, scored.size()); ++k) hit |= golds.count(t.words()[scored[k].second]) > 0;
    hits += hit;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

TEST(PairR2, Examples) {
  const std::vector<double> t = {0, 1, 2};
  EXPECT_EQ(*pair_r2(t, t), 1.0);
  const std::vector<double> m = {1, 1, 1};
  EXPECT_NEAR(*pair_r2(m, t), 0.0, 1e-15);
  const std::vector<double> z = {0, 0, 0};
  EXPECT_NEAR(*pair_r2(z, t), -1.5, 1e-15);
  EXPECT_FALSE(pair_r2(t, m).has_value());
  const std::vector<double> two = {1, 2};
  EXPECT_THROW(pair_r2(two, t), std::invalid_argument);
}

TEST(PairR2, MatchesOracleOnRandomVectors) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(32), b(32);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    EXPECT_NEAR(*pair_r2(a, b), oracle_r2(a, b), 1e-12);
  }
}

TEST(AvgR2, Examples) {
  std::mt19937_64 rng(2);
  const auto s = random_vectors("w", 10, 4, rng);
  const auto t = make_vectors("t", s.words(), 4, s.values());
  Dictionary identity;
  for (const auto& w : s.words()) identity.pairs.emplace_back(w, w);
  EXPECT_EQ(avg_r2(identity, s, t).mean, 1.0);

  identity.pairs.emplace_back("w0", "missing");
  const auto with_oov = avg_r2(identity, s, t);
  EXPECT_EQ(with_oov.used, 10u);
  EXPECT_NEAR(with_oov.coverage, 10.0 / 11.0, 1e-15);

  const auto src = make_vectors("s", {"a", "b"}, 3, {0, 1, 2, 1, 1, 1});
  const auto tgt = make_vectors("t", {"x", "y"}, 3, {0, 1, 2, 0, 1, 2});
  EXPECT_NEAR(avg_r2(parse_dictionary("a x\nb y\n"), src, tgt).mean, 0.5, 1e-15);
}

TEST(Knn, IdentityAndToy) {
  std::mt19937_64 rng(3);
  const auto s = random_vectors("w", 30, 5, rng);
  const auto t = make_vectors("t", s.words(), 5, s.values());
  Dictionary identity;
  for (const auto& w : s.words()) identity.pairs.emplace_back(w, w);
  for (std::size_t n : {1u, 5u, 10u}) EXPECT_EQ(knn_accuracy(identity, s, t, n), 1.0);

  const auto tgt = make_vectors("t", {"a", "b", "c"}, 2, {1, 0, 0, 1, -1, 0});
  const auto src = make_vectors("s", {"x"}, 2, {0.1, 0.9});
  EXPECT_EQ(knn_accuracy(parse_dictionary("x b\n"), src, tgt, 1), 1.0);
  EXPECT_EQ(NeighborIndex(tgt).query(src.row(0), 3), (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_THROW(knn_accuracy(parse_dictionary("q b\n"), src, tgt, 1), std::invalid_argument);
}

TEST(Knn, TiesBreakByVocabularyOrder) {
  const auto tgt = make_vectors("t", {"a", "b", "c"}, 2, {1, 0, 2, 0, 0, 1});
  const std::vector<double> q = {1, 0};
  EXPECT_EQ(NeighborIndex(tgt).query(q, 2), (std::vector<std::size_t>{0, 1}));
}

TEST(Knn, MatchesOracleOnRandomInstances) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto s = random_vectors("s", 100, 8, rng);
    const auto t = random_vectors("t", 100, 8, rng);
    Dictionary dict;
    std::uniform_int_distribution<int> pick(0, 99);
    for (int i = 0; i < 100; ++i) {
      dict.pairs.emplace_back("s" + std::to_string(i), "t" + std::to_string(pick(rng)));
      if (i % 7 == 0) dict.pairs.emplace_back("s" + std::to_string(i), "t" + std::to_string(pick(rng)));
    }
    double previous = 0;
    for (std::size_t n : {1u, 5u, 10u}) {
      const double got = knn_accuracy(dict, s, t, n);
      EXPECT_EQ(got, oracle_knn(dict, s, t, n)) << "n=" << n;
      EXPECT_GE(got, previous);
      previous = got;
    }
  }
}

TEST(Knn, CosineIgnoresPositiveRowScaling) {
  std::mt19937_64 rng(4);
  const auto s = random_vectors("s", 60, 6, rng);
  const auto t = random_vectors("t", 60, 6, rng);
  Dictionary dict;
  for (int i = 0; i < 60; ++i) dict.pairs.emplace_back("s" + std::to_string(i), "t" + std::to_string((i * 7) % 60));
  auto values = t.values();
  std::uniform_real_distribution<double> c(0.1, 10.0);
  for (std::size_t r = 0; r < 60; ++r) {
    const double f = c(rng);
    for (std::size_t j = 0; j < 6; ++j) values[r * 6 + j] *= f;
  }
  const auto scaled = make_vectors("t", t.words(), 6, values);
  for (std::size_t n : {1u, 5u, 10u}) EXPECT_EQ(knn_accuracy(dict, s, t, n), knn_accuracy(dict, s, scaled, n));
}

TEST(Report, JsonRoundTripAndMonotone) {
  std::mt19937_64 rng(5);
  const auto s = random_vectors("s", 40, 6, rng);
  const auto t = random_vectors("t", 40, 6, rng);
  Dictionary dict;
  for (int i = 0; i < 40; ++i) dict.pairs.emplace_back("s" + std::to_string(i), "t" + std::to_string(i));
  const auto r = evaluate(dict, s, t);
  EXPECT_LE(r.acc1, r.acc5);
  EXPECT_LE(r.acc5, r.acc10);
  const auto back = EvalReport::from_json(r.to_json());
  EXPECT_EQ(back.acc1, r.acc1);
  EXPECT_EQ(back.acc10, r.acc10);
  EXPECT_EQ(back.avg_r2, r.avg_r2);
  EXPECT_EQ(back.n_pairs, r.n_pairs);
}

TEST(Export, RoundTripIsExact) {
  const fs::path dir = fs::path(WAM_TEST_TMP) / "eval_export";
  fs::create_directories(dir);
  std::mt19937_64 rng(6);
  const auto v = random_vectors("w", 25, 7, rng);
  export_embeddings(v, dir / "v.vec");
  std::ifstream in(dir / "v.vec");
  std::size_t count = 0, dim = 0;
  in >> count >> dim;
  EXPECT_EQ(count, 25u);
  EXPECT_EQ(dim, 7u);
  const auto back = import_embeddings(dir / "v.vec", "w");
  EXPECT_EQ(back.words(), v.words());
  EXPECT_EQ(back.values(), v.values());
}

TEST(Export, FromVocabularyExcludesReserved) {
  TransformerConfig c;
  c.d_model = 4;
  c.n_heads = 1;
  const Vocab vocab("s", {"a", "b", "c"});
  const auto params = init_params(c, vocab.size(), vocab.size(), 1);
  const auto v = word_vectors(vocab, params.source);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.dim(), 4u);
  EXPECT_EQ(v.row(0)[0], params.source.weight.at(4 * 4));
}

TEST(Projection, ExactOnPlanarData) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  const std::size_t d = 6, n = 12;
  std::vector<double> u(d), w(d), values;
  for (auto& x : u) x = g(rng);
  for (auto& x : w) x = g(rng);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = g(rng), b = g(rng);
    for (std::size_t j = 0; j < d; ++j) values.push_back(1.5 + a * u[j] + b * w[j]);
    words.push_back("w" + std::to_string(i));
  }
  const WordVectors s("s", {words.begin(), words.begin() + 6}, d, {values.begin(), values.begin() + 36});
  const WordVectors t("t", {words.begin() + 6, words.end()}, d, {values.begin() + 36, values.end()});
  const auto pts = project_2d({s, t}, parse_dictionary("w0 w6\n"));
  ASSERT_EQ(pts.size(), n);
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += p.x / n;
    my += p.y / n;
  }
  EXPECT_NEAR(mx, 0.0, 1e-9);
  EXPECT_NEAR(my, 0.0, 1e-9);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      double full = 0;
      for (std::size_t j = 0; j < d; ++j) full += std::pow(values[i * d + j] - values[k * d + j], 2);
      const double proj = std::pow(pts[i].x - pts[k].x, 2) + std::pow(pts[i].y - pts[k].y, 2);
      EXPECT_NEAR(std::sqrt(proj), std::sqrt(full), 1e-9);
    }
  EXPECT_TRUE(pts[0].is_dictionary_word);
  EXPECT_TRUE(pts[6].is_dictionary_word);
  EXPECT_FALSE(pts[1].is_dictionary_word);
  EXPECT_EQ(pts[6].language, "t");
}

TEST(Projection, RejectsDegenerateInput) {
  const WordVectors line("s", {"a", "b", "c"}, 2, {0, 0, 1, 1, 2, 2});
  EXPECT_THROW(project_2d({line}, {}), std::invalid_argument);
  const WordVectors two("s", {"a", "b"}, 2, {0, 0, 1, 0});
  EXPECT_THROW(project_2d({two}, {}), std::invalid_argument);
}

TEST(Untrained, AccuracyNearChance) {
  const auto corpus = synth_cipher_corpus({200, 2000, 5, 15, 1.0, 1});
  const auto sv = build_vocab(corpus.pairs, Side::kSource);
  const auto tv = build_vocab(corpus.pairs, Side::kTarget);
  const auto params = init_params(TransformerConfig{}, sv.size(), tv.size(), 1);
  const auto report = evaluate(corpus.gold, word_vectors(sv, params.source), word_vectors(tv, params.target));
  EXPECT_EQ(report.n_in_vocab_pairs, 200u);
  EXPECT_LE(report.acc1, 5.0 / 200.0);
}

}  // namespace
}  // namespace wam
