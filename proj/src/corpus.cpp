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

#include "wam/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace wam {

namespace {

// Decodes one UTF-8 code point starting at `pos`; malformed bytes decode to
// themselves so nothing is lost.
char32_t next_code_point(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  }
  for (int i = 1; i < len; ++i) {
    const int c = cont(static_cast<std::size_t>(i));
    if (c < 0) {
      len = 0;
      break;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  if (len == 0) {
    ++pos;
    return b0;
  }
  pos += static_cast<std::size_t>(len);
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f' ||
         c == 0x00A0 || (c >= 0x2000 && c <= 0x200B) || c == 0x202F || c == 0x205F ||
         c == 0x3000 || c == 0xFEFF;
}

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
                       (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  return (c >= 0x00A1 && c <= 0x00BF && c != 0x00AA && c != 0x00B5 && c != 0x00BA) ||
         c == 0x00D7 || c == 0x00F7 || (c >= 0x2010 && c <= 0x2027) ||
         (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x303F);
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c < 0xC0) return c;
  if (c <= 0xDE) return c == 0xD7 ? c : c + 0x20;
  if ((c >= 0x0100 && c <= 0x0137) || (c >= 0x014A && c <= 0x0177))
    return (c % 2 == 0) ? c + 1 : c;
  if ((c >= 0x0139 && c <= 0x0148) || (c >= 0x0179 && c <= 0x017E))
    return (c % 2 == 1) ? c + 1 : c;
  if (c == 0x0178) return 0x00FF;
  if (c >= 0x0391 && c <= 0x03A9 && c != 0x03A2) return c + 0x20;
  if (c >= 0x0410 && c <= 0x042F) return c + 0x20;
  if (c >= 0x0400 && c <= 0x040F) return c + 0x50;
  return c;
}

std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t c = next_code_point(text, pos);
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      std::string p;
      append_utf8(p, c);
      tokens.push_back(std::move(p));
    } else {
      append_utf8(current, to_lower(c));
    }
  }
  flush();
  return tokens;
}

std::string normalize_word(std::string_view word) {
  std::string out;
  std::size_t pos = 0;
  while (pos < word.size()) append_utf8(out, to_lower(next_code_point(word, pos)));
  return out;
}

std::vector<SentencePair> filter_pairs(const std::vector<SentencePair>& pairs,
                                       const FilterOptions& options) {
  std::vector<SentencePair> kept;
  for (const auto& p : pairs) {
    const std::size_t ls = p.source.size(), lt = p.target.size();
    if (ls == 0 || lt == 0) continue;
    if (ls > options.max_len || lt > options.max_len) continue;
    const double ratio = static_cast<double>(std::max(ls, lt)) / static_cast<double>(std::min(ls, lt));
    if (ratio > options.max_ratio) continue;
    kept.push_back(p);
  }
  return kept;
}

TrainValidSplit split_train_valid(const std::vector<SentencePair>& pairs, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_train_valid: fraction must lie in (0, 1)");
  if (pairs.size() < 2) throw std::invalid_argument("split_train_valid: need at least 2 pairs");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pairs.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, pairs.size() - 1);
  TrainValidSplit split;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_train ? split.train : split.valid).push_back(pairs[order[i]]);
  return split;
}

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab(std::string language, const std::vector<std::string>& words)
    : language_(std::move(language)) {
  for (auto w : kReservedWords) words_.emplace_back(w);
  for (const auto& w : words) {
    if (std::find(std::begin(kReservedWords), std::end(kReservedWords), w) !=
        std::end(kReservedWords))
      throw std::invalid_argument("Vocab: corpus word collides with reserved token " + w);
    words_.push_back(w);
  }
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("Vocab: duplicate word " + words_[i]);
  }
}

int Vocab::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it != index_.end() && !is_reserved(it->second);
}

const std::string& Vocab::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size())
    throw std::out_of_range("Vocab::word: id " + std::to_string(id) + " out of range");
  return words_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const Tokens& tokens, bool add_bos_eos) const {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  if (add_bos_eos) ids.push_back(kBos);
  for (const auto& t : tokens) ids.push_back(id(t));
  if (add_bos_eos) ids.push_back(kEos);
  return ids;
}

Tokens Vocab::decode(const std::vector<int>& ids) const {
  Tokens out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    out.push_back(word(id));
  }
  return out;
}

Vocab build_vocab(const std::vector<SentencePair>& pairs, Side side, std::size_t min_count,
                  std::string language) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : pairs)
    for (const auto& t : side == Side::kSource ? p.source : p.target) ++counts[t];
  if (counts.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
  // std::map iteration is lexicographic, so a stable sort on count keeps ties ordered.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (const auto& [w, c] : entries)
    if (c >= min_count) words.push_back(w);
  if (language.empty()) language = side == Side::kSource ? "source" : "target";
  return Vocab(std::move(language), words);
}

std::vector<EncodedPair> encode_pairs(const std::vector<SentencePair>& pairs,
                                      const Vocab& source, const Vocab& target) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({source.encode(p.source), target.encode(p.target)});
  return out;
}

// ---------------------------------------------------------------------------
// Batching

Batch make_batch(const std::vector<EncodedPair>& pairs, const std::vector<std::size_t>& indices) {
  Batch b;
  b.size = indices.size();
  b.pair_indices = indices;
  for (auto i : indices) {
    b.source_len = std::max(b.source_len, pairs.at(i).source.size());
    b.target_len = std::max(b.target_len, pairs.at(i).target.size());
  }
  b.source.assign(b.size * b.source_len, Vocab::kPad);
  b.target.assign(b.size * b.target_len, Vocab::kPad);
  for (std::size_t r = 0; r < b.size; ++r) {
    const auto& p = pairs[indices[r]];
    std::copy(p.source.begin(), p.source.end(), b.source.begin() + static_cast<std::ptrdiff_t>(r * b.source_len));
    std::copy(p.target.begin(), p.target.end(), b.target.begin() + static_cast<std::ptrdiff_t>(r * b.target_len));
    b.source_lengths.push_back(p.source.size());
    b.target_lengths.push_back(p.target.size());
    b.token_count += p.target.size();
  }
  return b;
}

std::vector<Batch> make_batches(const std::vector<EncodedPair>& pairs,
                                const BatchingOptions& options, std::uint64_t seed) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t bucket = std::max<std::size_t>(1, options.bucket_size);
  for (std::size_t start = 0; start < order.size(); start += bucket) {
    auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + bucket));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return pairs[a].target.size() < pairs[b].target.size();
    });
  }

  std::vector<Batch> batches;
  std::vector<std::size_t> current;
  std::size_t tokens = 0;
  for (auto idx : order) {
    const std::size_t len = pairs[idx].target.size();
    if (!current.empty() && tokens + len > options.token_budget) {
      batches.push_back(make_batch(pairs, current));
      current.clear();
      tokens = 0;
    }
    current.push_back(idx);
    tokens += len;
  }
  if (!current.empty()) batches.push_back(make_batch(pairs, current));
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

// ---------------------------------------------------------------------------
// Dictionary

DictionaryError::DictionaryError(const std::string& path, std::size_t line,
                                 const std::string& what)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

Dictionary parse_dictionary(std::string_view text, std::string provenance) {
  Dictionary dict;
  dict.provenance = provenance;
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream fields(line);
    std::vector<std::string> parts;
    for (std::string f; fields >> f;) parts.push_back(std::move(f));
    if (parts.empty()) continue;
    if (parts.size() != 2)
      throw DictionaryError(provenance, number,
                            "expected 2 whitespace-separated fields, got " +
                                std::to_string(parts.size()));
    std::pair<std::string, std::string> entry{normalize_word(parts[0]), normalize_word(parts[1])};
    if (seen.insert(entry).second) dict.pairs.push_back(std::move(entry));
  }
  return dict;
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dictionary " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dictionary(buf.str(), path.string());
}

void write_dictionary(const Dictionary& dict, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dictionary " + path.string());
  for (const auto& [s, t] : dict.pairs) out << s << ' ' << t << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::pair<Dictionary, Dictionary> split_dictionary_halves(const Dictionary& dict) {
  const std::size_t half = (dict.size() + 1) / 2;
  Dictionary first{{dict.pairs.begin(), dict.pairs.begin() + static_cast<std::ptrdiff_t>(half)},
                   dict.provenance + "#first-half"};
  Dictionary second{{dict.pairs.begin() + static_cast<std::ptrdiff_t>(half), dict.pairs.end()},
                    dict.provenance + "#second-half"};
  return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------
// Parallel corpus files

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

std::vector<SentencePair> read_parallel_corpus(const std::filesystem::path& source,
                                               const std::filesystem::path& target) {
  const auto src = read_lines(source);
  const auto tgt = read_lines(target);
  if (src.size() != tgt.size())
    throw std::runtime_error("parallel corpus line counts differ: " + source.string() + " has " +
                             std::to_string(src.size()) + ", " + target.string() + " has " +
                             std::to_string(tgt.size()));
  std::vector<SentencePair> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) pairs.push_back({tokenize(src[i]), tokenize(tgt[i])});
  return pairs;
}

void write_parallel_corpus(const std::vector<SentencePair>& pairs,
                           const std::filesystem::path& source,
                           const std::filesystem::path& target) {
  std::ofstream s(source, std::ios::binary), t(target, std::ios::binary);
  if (!s) throw std::runtime_error("cannot write " + source.string());
  if (!t) throw std::runtime_error("cannot write " + target.string());
  auto join = [](std::ostream& os, const Tokens& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) os << (i ? " " : "") << tokens[i];
    os << '\n';
  };
  for (const auto& p : pairs) {
    join(s, p.source);
    join(t, p.target);
  }
  if (!s || !t) throw std::runtime_error("write failed for parallel corpus");
}

// ---------------------------------------------------------------------------
// Synthetic cipher corpus

SynthCorpus synth_cipher_corpus(const SynthOptions& options) {
  if (options.vocab_size < 10) throw std::invalid_argument("synth: vocab_size must be >= 10");
  if (options.min_len == 0 || options.min_len > options.max_len)
    throw std::invalid_argument("synth: need 1 <= min_len <= max_len");
  const std::size_t width = std::to_string(options.vocab_size - 1).size();
  auto name = [width](char prefix, std::size_t i) {
    std::string digits = std::to_string(i);
    return std::string(1, prefix) + std::string(width - digits.size(), '0') + digits;
  };

  auto rng = make_rng(options.seed);
  std::vector<std::size_t> cipher(options.vocab_size);
  std::iota(cipher.begin(), cipher.end(), std::size_t{0});
  std::shuffle(cipher.begin(), cipher.end(), rng);

  std::vector<double> weights(options.vocab_size);
  for (std::size_t r = 0; r < weights.size(); ++r)
    weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), options.zipf_exponent);
  std::discrete_distribution<std::size_t> unigram(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> length(options.min_len, options.max_len);

  SynthCorpus corpus;
  corpus.pairs.reserve(options.n_sentences);
  for (std::size_t s = 0; s < options.n_sentences; ++s) {
    SentencePair pair;
    const std::size_t len = length(rng);
    for (std::size_t k = 0; k < len; ++k) {
      const std::size_t w = unigram(rng);
      pair.source.push_back(name('s', w));
      pair.target.push_back(name('t', cipher[w]));
    }
    corpus.pairs.push_back(std::move(pair));
  }
  corpus.gold.provenance = "synthetic-cipher seed=" + std::to_string(options.seed);
  for (std::size_t w = 0; w < options.vocab_size; ++w)
    corpus.gold.pairs.emplace_back(name('s', w), name('t', cipher[w]));
  return corpus;
}

}  // namespace wam
