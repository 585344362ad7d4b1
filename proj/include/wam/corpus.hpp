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
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace wam {

using Tokens = std::vector<std::string>;

/// Lowercases, splits on whitespace and emits every punctuation character as
/// its own token. Operates on UTF-8; case folding covers Latin, Greek and
/// Cyrillic letters.
Tokens tokenize(std::string_view text);

/// Case folding used by the tokenizer, exposed for dictionary normalization.
std::string normalize_word(std::string_view word);

struct SentencePair {
  Tokens source;
  Tokens target;
  bool operator==(const SentencePair&) const = default;
};

struct FilterOptions {
  std::size_t max_len = 80;
  double max_ratio = 1.5;
};

/// Keeps pairs whose sides are non-empty, at most `max_len` tokens long and
/// within `max_ratio` of each other (longer / shorter). Order is preserved.
std::vector<SentencePair> filter_pairs(const std::vector<SentencePair>& pairs,
                                       const FilterOptions& options = {});

struct TrainValidSplit {
  std::vector<SentencePair> train;
  std::vector<SentencePair> valid;
};

TrainValidSplit split_train_valid(const std::vector<SentencePair>& pairs, double fraction,
                                  std::uint64_t seed);

enum class Side { kSource, kTarget };

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;
  static constexpr std::string_view kReservedWords[kReserved] = {"<pad>", "<s>", "</s>",
                                                                  "<unk>"};

  Vocab() : Vocab("", {}) {}
  /// `words` are the corpus words in id order, excluding reserved tokens.
  Vocab(std::string language, const std::vector<std::string>& words);

  const std::string& language() const { return language_; }
  std::size_t size() const { return words_.size(); }
  /// Id of `word`, or kUnk when absent.
  int id(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(int id) const;
  const std::vector<std::string>& words() const { return words_; }
  static bool is_reserved(int id) { return id >= 0 && id < kReserved; }

  std::vector<int> encode(const Tokens& tokens, bool add_bos_eos = true) const;
  /// Maps ids back to words, dropping PAD/BOS/EOS.
  Tokens decode(const std::vector<int>& ids) const;

 private:
  std::string language_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

/// Vocabulary of one side: words with count >= min_count ordered by
/// descending count, ties broken lexicographically, after the reserved ids.
Vocab build_vocab(const std::vector<SentencePair>& pairs, Side side, std::size_t min_count = 1,
                  std::string language = {});

struct EncodedPair {
  std::vector<int> source;  // BOS ... EOS
  std::vector<int> target;  // BOS ... EOS
};

std::vector<EncodedPair> encode_pairs(const std::vector<SentencePair>& pairs,
                                      const Vocab& source, const Vocab& target);

/// Padded id matrices for a group of pairs, row-major [size x len].
struct Batch {
  std::size_t size = 0;
  std::size_t source_len = 0;
  std::size_t target_len = 0;
  std::vector<int> source;
  std::vector<int> target;
  std::vector<std::size_t> source_lengths;
  std::vector<std::size_t> target_lengths;
  std::size_t token_count = 0;  // non-pad target ids
  std::vector<std::size_t> pair_indices;

  int source_at(std::size_t row, std::size_t col) const { return source[row * source_len + col]; }
  int target_at(std::size_t row, std::size_t col) const { return target[row * target_len + col]; }
};

Batch make_batch(const std::vector<EncodedPair>& pairs, const std::vector<std::size_t>& indices);

struct BatchingOptions {
  std::size_t token_budget = 2500;
  std::size_t bucket_size = 256;  // pairs per shuffled bucket sorted by target length
};

/// Seeded shuffle, length-sorted buckets, greedy packing under the budget.
/// Every pair lands in exactly one batch; a pair longer than the budget gets
/// a batch of its own. Batch order is shuffled too.
std::vector<Batch> make_batches(const std::vector<EncodedPair>& pairs,
                                const BatchingOptions& options, std::uint64_t seed);

struct Dictionary {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string provenance;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

class DictionaryError : public std::runtime_error {
 public:
  DictionaryError(const std::string& path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses the "source target" per-line layout used by MUSE dictionaries.
Dictionary load_dictionary(const std::filesystem::path& path);
Dictionary parse_dictionary(std::string_view text, std::string provenance = "inline");
void write_dictionary(const Dictionary& dict, const std::filesystem::path& path);

/// First ceil(n/2) entries and the remainder, in file order.
std::pair<Dictionary, Dictionary> split_dictionary_halves(const Dictionary& dict);

/// Reads two line-aligned files and tokenizes each line.
std::vector<SentencePair> read_parallel_corpus(const std::filesystem::path& source,
                                               const std::filesystem::path& target);
void write_parallel_corpus(const std::vector<SentencePair>& pairs,
                           const std::filesystem::path& source,
                           const std::filesystem::path& target);

struct SynthOptions {
  std::size_t vocab_size = 200;
  std::size_t n_sentences = 2000;
  std::size_t min_len = 5;
  std::size_t max_len = 15;
  double zipf_exponent = 1.0;
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  std::vector<SentencePair> pairs;
  Dictionary gold;  // source word -> its cipher image, ordered by source frequency rank
};

/// Source sentences sample a Zipf unigram distribution over synthetic words;
/// each target sentence is the token-wise image of its source under a fixed
/// random bijection.
SynthCorpus synth_cipher_corpus(const SynthOptions& options);

}  // namespace wam
