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

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace wam {

WordVectors::WordVectors(std::string language, std::vector<std::string> words, std::size_t dim,
                         std::vector<double> values)
    : language_(std::move(language)), words_(std::move(words)), dim_(dim), values_(std::move(values)) {
  if (values_.size() != words_.size() * dim_)
    throw std::invalid_argument("WordVectors: expected " + std::to_string(words_.size() * dim_) +
                                " values, got " + std::to_string(values_.size()));
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (!index_.emplace(words_[i], i).second)
      throw std::invalid_argument("WordVectors: duplicate word " + words_[i]);
}

std::span<const double> WordVectors::row(std::size_t i) const {
  return std::span<const double>(values_).subspan(i * dim_, dim_);
}

std::optional<std::size_t> WordVectors::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordVectors word_vectors(const Vocab& vocab, const EmbeddingTable& table) {
  if (table.weight.dim(0) != vocab.size())
    throw std::invalid_argument("word_vectors: table has " + std::to_string(table.weight.dim(0)) +
                                " rows for a vocabulary of " + std::to_string(vocab.size()));
  const std::size_t dim = table.weight.dim(1);
  std::vector<std::string> words(vocab.words().begin() + Vocab::kReserved, vocab.words().end());
  const auto data = table.weight.data();
  std::vector<double> values(data.begin() + static_cast<std::ptrdiff_t>(Vocab::kReserved * dim), data.end());
  return WordVectors(vocab.language(), std::move(words), dim, std::move(values));
}

void export_embeddings(const WordVectors& vectors, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embeddings to " + path.string());
  out << vectors.size() << ' ' << vectors.dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out << vectors.words()[i];
    for (double v : vectors.row(i)) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

WordVectors import_embeddings(const std::filesystem::path& path, std::string language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embeddings " + path.string());
  std::size_t count = 0, dim = 0;
  if (!(in >> count >> dim)) throw std::runtime_error(path.string() + ": malformed header");
  std::vector<std::string> words(count);
  std::vector<double> values(count * dim);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> words[i])) throw std::runtime_error(path.string() + ": truncated at word " + std::to_string(i));
    for (std::size_t j = 0; j < dim; ++j) {
      std::string field;
      if (!(in >> field))
        throw std::runtime_error(path.string() + ": truncated vector for " + words[i]);
      values[i * dim + j] = std::stod(field);
    }
  }
  if (language.empty()) language = path.stem().string();
  return WordVectors(std::move(language), std::move(words), dim, std::move(values));
}

std::optional<double> pair_r2(std::span<const double> source, std::span<const double> target) {
  if (source.size() != target.size())
    throw ShapeError("pair_r2", {{source.size()}, {target.size()}}, "dimension mismatch");
  if (target.size() < 2) throw std::invalid_argument("pair_r2: dimension must be at least 2");
  const double mu = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(target.size());
  double residual = 0.0, total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    residual += (source[i] - target[i]) * (source[i] - target[i]);
    total += (target[i] - mu) * (target[i] - mu);
  }
  if (total == 0.0) return std::nullopt;
  return 1.0 - residual / total;
}

std::string_view to_string(Similarity s) {
  return s == Similarity::kCosine ? "cosine" : "euclidean";
}

Similarity parse_similarity(std::string_view text) {
  if (text == "cosine") return Similarity::kCosine;
  if (text == "euclidean") return Similarity::kEuclidean;
  throw std::invalid_argument("unknown similarity '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// NeighborIndex

NeighborIndex::NeighborIndex(const WordVectors& targets, Similarity similarity)
    : targets_(targets), similarity_(similarity) {
  norms_.reserve(targets_.size());
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    double n = 0.0;
    for (double v : targets_.row(i)) n += v * v;
    norms_.push_back(std::sqrt(n));
  }
}

double NeighborIndex::similarity(std::span<const double> vector, std::size_t row) const {
  const auto t = targets_.row(row);
  if (vector.size() != t.size())
    throw ShapeError("NeighborIndex", {{vector.size()}, {t.size()}}, "dimension mismatch");
  if (similarity_ == Similarity::kEuclidean) {
    double d = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) d += (vector[i] - t[i]) * (vector[i] - t[i]);
    return -d;
  }
  double dot = 0.0, qn = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    dot += vector[i] * t[i];
    qn += vector[i] * vector[i];
  }
  const double denom = std::sqrt(qn) * norms_[row];
  return denom > 0.0 ? dot / denom : 0.0;
}

std::vector<std::size_t> NeighborIndex::query(std::span<const double> vector, std::size_t n) const {
  std::vector<double> sims(targets_.size());
  for (std::size_t i = 0; i < sims.size(); ++i) sims[i] = similarity(vector, i);
  std::vector<std::size_t> order(sims.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return sims[a] != sims[b] ? sims[a] > sims[b] : a < b;
                    });
  order.resize(k);
  return order;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

// Gold target rows per in-vocabulary source row, sources in first-seen order.
std::vector<std::pair<std::size_t, std::set<std::size_t>>> gold_targets(
    const Dictionary& dict, const WordVectors& source, const WordVectors& target) {
  std::vector<std::pair<std::size_t, std::set<std::size_t>>> out;
  std::map<std::size_t, std::size_t> slot;
  for (const auto& [s, t] : dict.pairs) {
    auto si = source.find(s);
    auto ti = target.find(t);
    if (!si || !ti) continue;
    auto [it, inserted] = slot.emplace(*si, out.size());
    if (inserted) out.push_back({*si, {}});
    out[it->second].second.insert(*ti);
  }
  return out;
}

std::size_t in_vocab_pairs(const Dictionary& dict, const WordVectors& source, const WordVectors& target) {
  std::size_t n = 0;
  for (const auto& [s, t] : dict.pairs) n += source.find(s) && target.find(t);
  return n;
}

}  // namespace

R2Summary avg_r2(const Dictionary& dict, const WordVectors& source, const WordVectors& target) {
  if (dict.empty()) throw std::invalid_argument("avg_r2: empty dictionary");
  R2Summary out;
  double total = 0.0;
  std::size_t in_vocab = 0;
  for (const auto& [s, t] : dict.pairs) {
    auto si = source.find(s);
    auto ti = target.find(t);
    if (!si || !ti) continue;
    ++in_vocab;
    auto r2 = pair_r2(source.row(*si), target.row(*ti));
    if (!r2) {
      ++out.skipped;
      continue;
    }
    total += *r2;
    ++out.used;
  }
  if (in_vocab == 0) throw std::invalid_argument("avg_r2: no dictionary pair is in vocabulary");
  if (out.used == 0) throw std::invalid_argument("avg_r2: every in-vocabulary pair was skipped");
  out.mean = total / static_cast<double>(out.used);
  out.coverage = static_cast<double>(in_vocab) / static_cast<double>(dict.size());
  return out;
}

double knn_accuracy(const Dictionary& dict, const WordVectors& source, const WordVectors& target,
                    std::size_t n, Similarity similarity) {
  if (dict.empty()) throw std::invalid_argument("knn_accuracy: empty dictionary");
  const auto gold = gold_targets(dict, source, target);
  if (gold.empty()) throw std::invalid_argument("knn_accuracy: no dictionary pair is in vocabulary");
  const NeighborIndex index(target, similarity);
  std::size_t hits = 0;
  for (const auto& [row, targets] : gold) {
    for (auto candidate : index.query(source.row(row), n)) {
      if (targets.count(candidate)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

EvalReport evaluate(const Dictionary& dict, const WordVectors& source, const WordVectors& target,
                    Similarity similarity) {
  EvalReport report;
  const auto r2 = avg_r2(dict, source, target);
  report.avg_r2 = r2.mean;
  report.coverage = r2.coverage;
  report.r2_skipped = r2.skipped;
  report.n_pairs = dict.size();
  report.n_in_vocab_pairs = in_vocab_pairs(dict, source, target);
  report.n_sources = gold_targets(dict, source, target).size();
  report.acc1 = knn_accuracy(dict, source, target, 1, similarity);
  report.acc5 = knn_accuracy(dict, source, target, 5, similarity);
  report.acc10 = knn_accuracy(dict, source, target, 10, similarity);
  if (!(report.acc1 <= report.acc5 && report.acc5 <= report.acc10))
    throw std::logic_error("evaluate: accuracies not monotone in n");
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["avg_r2"] = avg_r2;
  j["acc1"] = acc1;
  j["acc5"] = acc5;
  j["acc10"] = acc10;
  j["coverage"] = coverage;
  j["n_pairs"] = n_pairs;
  j["n_in_vocab_pairs"] = n_in_vocab_pairs;
  j["n_sources"] = n_sources;
  j["r2_skipped"] = r2_skipped;
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EvalReport r;
  r.avg_r2 = j.at("avg_r2").get<double>();
  r.acc1 = j.at("acc1").get<double>();
  r.acc5 = j.at("acc5").get<double>();
  r.acc10 = j.at("acc10").get<double>();
  r.coverage = j.at("coverage").get<double>();
  r.n_pairs = j.at("n_pairs").get<std::size_t>();
  r.n_in_vocab_pairs = j.value("n_in_vocab_pairs", std::size_t{0});
  r.n_sources = j.value("n_sources", std::size_t{0});
  r.r2_skipped = j.value("r2_skipped", std::size_t{0});
  return r;
}

// ---------------------------------------------------------------------------
// Projection

std::vector<ProjectedPoint> project_2d(const std::vector<WordVectors>& tables,
                                       const Dictionary& dict) {
  std::size_t rows = 0, dim = 0;
  for (const auto& t : tables) {
    if (rows > 0 && t.size() > 0 && t.dim() != dim)
      throw std::invalid_argument("project_2d: tables differ in dimension");
    if (t.size() > 0) dim = t.dim();
    rows += t.size();
  }
  if (rows < 3) throw std::invalid_argument("project_2d: need at least 3 vectors");

  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  Eigen::Index r = 0;
  for (const auto& t : tables)
    for (std::size_t i = 0; i < t.size(); ++i, ++r)
      for (std::size_t j = 0; j < dim; ++j) data(r, static_cast<Eigen::Index>(j)) = t.row(i)[j];
  const Eigen::RowVectorXd centroid = data.colwise().mean();
  data.rowwise() -= centroid;
  const Eigen::MatrixXd cov = data.transpose() * data / static_cast<double>(rows);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("project_2d: eigensolver failed");
  // eigenvalues ascending
  const Eigen::Index d = static_cast<Eigen::Index>(dim);
  if (d < 2) throw std::invalid_argument("project_2d: rank-deficient input (dimension < 2)");
  const double top = solver.eigenvalues()(d - 1);
  const double second = solver.eigenvalues()(d - 2);
  if (!(top > 0.0) || second <= 1e-12 * top)
    throw std::invalid_argument("project_2d: rank-deficient input (rank < 2)");
  Eigen::MatrixXd basis(d, 2);
  basis.col(0) = solver.eigenvectors().col(d - 1);
  basis.col(1) = solver.eigenvectors().col(d - 2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0.0) basis.col(c) *= -1.0;
  }
  const Eigen::MatrixXd coords = data * basis;

  std::set<std::string> sources, targets;
  for (const auto& [s, t] : dict.pairs) {
    sources.insert(s);
    targets.insert(t);
  }
  std::vector<ProjectedPoint> points;
  points.reserve(rows);
  r = 0;
  for (std::size_t ti = 0; ti < tables.size(); ++ti) {
    const auto& flagged = ti == 0 ? sources : targets;
    for (std::size_t i = 0; i < tables[ti].size(); ++i, ++r) {
      const auto& w = tables[ti].words()[i];
      points.push_back({w, tables[ti].language(), coords(r, 0), coords(r, 1), flagged.count(w) > 0});
    }
  }
  return points;
}

void write_projection(const std::vector<ProjectedPoint>& points, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write projection to " + path.string());
  out << "word\tlang\tx\ty\tis_dictionary_word\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\t%d\n", p.x, p.y, p.is_dictionary_word ? 1 : 0);
    out << p.word << '\t' << p.language << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace wam
