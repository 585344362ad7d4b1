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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wam/corpus.hpp"
#include "wam/transformer.hpp"

namespace wam {

/// A language's word vectors in vocabulary order, reserved tokens excluded.
class WordVectors {
 public:
  WordVectors() = default;
  WordVectors(std::string language, std::vector<std::string> words, std::size_t dim,
              std::vector<double> values);

  const std::string& language() const { return language_; }
  std::size_t size() const { return words_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> row(std::size_t i) const;
  std::optional<std::size_t> find(const std::string& word) const;

 private:
  std::string language_;
  std::vector<std::string> words_;
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Rows of `table` for every non-reserved vocabulary word.
WordVectors word_vectors(const Vocab& vocab, const EmbeddingTable& table);

/// Text export: "count dim" header, then "word v1 ... vdim" per line with
/// 17 significant digits, in vocabulary order.
void export_embeddings(const WordVectors& vectors, const std::filesystem::path& path);
WordVectors import_embeddings(const std::filesystem::path& path, std::string language = {});

/// 1 - |x_s - x_t|^2 / |x_t - mean(x_t)|^2, the source vector read as a
/// prediction of the target vector's coordinates. nullopt when x_t is constant.
std::optional<double> pair_r2(std::span<const double> source, std::span<const double> target);

enum class Similarity { kCosine, kEuclidean };

std::string_view to_string(Similarity s);
Similarity parse_similarity(std::string_view text);

/// Exhaustive nearest-neighbor search over a target vocabulary. Results are
/// ordered by decreasing similarity, ties by increasing row (vocabulary id).
class NeighborIndex {
 public:
  NeighborIndex(const WordVectors& targets, Similarity similarity = Similarity::kCosine);

  std::vector<std::size_t> query(std::span<const double> vector, std::size_t n) const;
  double similarity(std::span<const double> vector, std::size_t row) const;

 private:
  WordVectors targets_;
  Similarity similarity_;
  std::vector<double> norms_;
};

struct R2Summary {
  double mean = 0.0;
  double coverage = 0.0;      // in-vocabulary pairs / all pairs
  std::size_t used = 0;       // pairs averaged
  std::size_t skipped = 0;    // in-vocabulary pairs with constant target vector
};

R2Summary avg_r2(const Dictionary& dict, const WordVectors& source, const WordVectors& target);

/// Fraction of in-vocabulary source words with any gold translation among
/// their n nearest target words.
double knn_accuracy(const Dictionary& dict, const WordVectors& source, const WordVectors& target,
                    std::size_t n, Similarity similarity = Similarity::kCosine);

struct EvalReport {
  double avg_r2 = 0.0;
  double acc1 = 0.0;
  double acc5 = 0.0;
  double acc10 = 0.0;
  double coverage = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_in_vocab_pairs = 0;
  std::size_t n_sources = 0;
  std::size_t r2_skipped = 0;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

/// Full report. Throws std::logic_error if accuracies are not monotone in n.
EvalReport evaluate(const Dictionary& dict, const WordVectors& source, const WordVectors& target,
                    Similarity similarity = Similarity::kCosine);

struct ProjectedPoint {
  std::string word;
  std::string language;
  double x = 0.0;
  double y = 0.0;
  bool is_dictionary_word = false;
};

/// Top-2 principal components of the mean-centered concatenation of all
/// tables. The first table is matched against dictionary source words, the
/// others against target words. Throws if fewer than 3 vectors or the data
/// has rank < 2.
std::vector<ProjectedPoint> project_2d(const std::vector<WordVectors>& tables,
                                       const Dictionary& dict);
void write_projection(const std::vector<ProjectedPoint>& points, const std::filesystem::path& path);

}  // namespace wam
