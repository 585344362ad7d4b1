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

#include <iostream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wam/checkpoint.hpp"
#include "wam/corpus.hpp"
#include "wam/eval.hpp"
#include "wam/mmd.hpp"
#include "wam/run.hpp"

namespace py = pybind11;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

wam::Tensor to_tensor(const Matrix& m) {
  if (m.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  const auto* p = m.data();
  return wam::Tensor::from({static_cast<std::size_t>(m.shape(0)), static_cast<std::size_t>(m.shape(1))},
                           std::vector<double>(p, p + m.size()));
}

Matrix to_array(const wam::WordVectors& v) {
  Matrix out({v.size(), v.dim()});
  std::copy(v.values().begin(), v.values().end(), out.mutable_data());
  return out;
}

wam::WordVectors to_vectors(const std::vector<std::string>& words, const Matrix& m, const std::string& lang) {
  if (m.ndim() != 2 || static_cast<std::size_t>(m.shape(0)) != words.size())
    throw std::invalid_argument("need one matrix row per word");
  return wam::WordVectors(lang, words, static_cast<std::size_t>(m.shape(1)),
                          std::vector<double>(m.data(), m.data() + m.size()));
}

wam::Dictionary to_dictionary(const std::vector<std::pair<std::string, std::string>>& pairs) {
  return {pairs, "python"};
}

py::dict report_dict(const wam::EvalReport& r) {
  py::dict d;
  d["avg_r2"] = r.avg_r2;
  d["acc1"] = r.acc1;
  d["acc5"] = r.acc5;
  d["acc10"] = r.acc10;
  d["coverage"] = r.coverage;
  d["n_pairs"] = r.n_pairs;
  d["n_in_vocab_pairs"] = r.n_in_vocab_pairs;
  d["n_sources"] = r.n_sources;
  d["r2_skipped"] = r.r2_skipped;
  return d;
}

wam::Similarity similarity_of(const std::string& s) { return wam::parse_similarity(s); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Word embedding alignment with a localized multi-scale MMD loss";

  m.def("tokenize", &wam::tokenize, py::arg("text"));

  m.def(
      "synth_cipher_corpus",
      [](std::size_t vocab_size, std::size_t n_sentences, std::size_t min_len, std::size_t max_len,
         double zipf, std::uint64_t seed) {
        const auto c = wam::synth_cipher_corpus({vocab_size, n_sentences, min_len, max_len, zipf, seed});
        std::vector<std::pair<wam::Tokens, wam::Tokens>> pairs;
        for (const auto& p : c.pairs) pairs.emplace_back(p.source, p.target);
        return py::make_tuple(pairs, c.gold.pairs);
      },
      py::arg("vocab_size") = 200, py::arg("n_sentences") = 2000, py::arg("min_len") = 5,
      py::arg("max_len") = 15, py::arg("zipf") = 1.0, py::arg("seed") = 1,
      "Returns (sentence pairs, gold dictionary pairs).");

  m.def(
      "write_cipher_corpus",
      [](const std::filesystem::path& dir, std::size_t vocab_size, std::size_t n_sentences, std::uint64_t seed) {
        const auto c = wam::synth_cipher_corpus({vocab_size, n_sentences, 5, 15, 1.0, seed});
        std::filesystem::create_directories(dir);
        wam::write_parallel_corpus(c.pairs, dir / "train.src", dir / "train.tgt");
        wam::write_dictionary(c.gold, dir / "gold.dict");
      },
      py::arg("output_dir"), py::arg("vocab_size") = 200, py::arg("n_sentences") = 2000, py::arg("seed") = 1);

  m.def(
      "load_dictionary", [](const std::filesystem::path& p) { return wam::load_dictionary(p).pairs; },
      py::arg("path"));

  m.def(
      "multiscale_rbf",
      [](const std::vector<double>& x, const std::vector<double>& y, int lo, int hi) {
        return wam::multiscale_rbf(x, y, {lo, hi});
      },
      py::arg("x"), py::arg("y"), py::arg("scale_lo") = -3, py::arg("scale_hi") = 2);

  m.def(
      "sentence_mmd",
      [](const Matrix& xs, const Matrix& xt, int lo, int hi) {
        return wam::sentence_mmd(to_tensor(xs), to_tensor(xt), {lo, hi}).item();
      },
      py::arg("source_tokens"), py::arg("target_tokens"), py::arg("scale_lo") = -3, py::arg("scale_hi") = 2);

  m.def(
      "batch_mmd_loss",
      [](const std::vector<std::pair<Matrix, Matrix>>& sets, int lo, int hi) {
        std::vector<std::pair<wam::Tensor, wam::Tensor>> tensors;
        for (const auto& [a, b] : sets) tensors.emplace_back(to_tensor(a), to_tensor(b));
        return wam::batch_mmd_loss(tensors, {lo, hi}).loss.item();
      },
      py::arg("token_sets"), py::arg("scale_lo") = -3, py::arg("scale_hi") = 2);

  m.def(
      "pair_r2",
      [](const std::vector<double>& xs, const std::vector<double>& xt) { return wam::pair_r2(xs, xt); },
      py::arg("source"), py::arg("target"));

  m.def(
      "evaluate",
      [](const std::vector<std::pair<std::string, std::string>>& dict, const std::vector<std::string>& src_words,
         const Matrix& src, const std::vector<std::string>& tgt_words, const Matrix& tgt,
         const std::string& similarity) {
        return report_dict(wam::evaluate(to_dictionary(dict), to_vectors(src_words, src, "source"),
                                         to_vectors(tgt_words, tgt, "target"), similarity_of(similarity)));
      },
      py::arg("dictionary"), py::arg("source_words"), py::arg("source_vectors"), py::arg("target_words"),
      py::arg("target_vectors"), py::arg("similarity") = "cosine");

  m.def(
      "knn_accuracy",
      [](const std::vector<std::pair<std::string, std::string>>& dict, const std::vector<std::string>& src_words,
         const Matrix& src, const std::vector<std::string>& tgt_words, const Matrix& tgt, std::size_t n,
         const std::string& similarity) {
        return wam::knn_accuracy(to_dictionary(dict), to_vectors(src_words, src, "source"),
                                 to_vectors(tgt_words, tgt, "target"), n, similarity_of(similarity));
      },
      py::arg("dictionary"), py::arg("source_words"), py::arg("source_vectors"), py::arg("target_words"),
      py::arg("target_vectors"), py::arg("n"), py::arg("similarity") = "cosine");

  m.def(
      "train",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> output_dir,
         std::optional<std::string> mode, bool verbose) {
        auto c = wam::load_run_config(config);
        if (output_dir) c.output_dir = std::filesystem::absolute(*output_dir);
        if (mode) c.mode = wam::parse_train_mode(*mode);
        wam::RunOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = wam::run_training(c, verbose ? &std::cout : nullptr);
        }
        py::dict d;
        d["checkpoint"] = outcome.checkpoint_path.string();
        d["metrics"] = outcome.metrics_path.string();
        d["valid_translation_loss"] = outcome.valid_translation_loss;
        d["final_loss"] = outcome.log.empty() ? 0.0 : outcome.log.back().total;
        d["steps"] = outcome.log.size();
        return d;
      },
      py::arg("config"), py::arg("output_dir") = py::none(), py::arg("mode") = py::none(),
      py::arg("verbose") = false, "Train from a config file; returns paths and final losses.");

  m.def(
      "load_embeddings",
      [](const std::filesystem::path& checkpoint) {
        const auto ck = wam::load_checkpoint(checkpoint);
        const auto s = wam::word_vectors(ck.source_vocab, ck.params.source);
        const auto t = wam::word_vectors(ck.target_vocab, ck.params.target);
        return py::make_tuple(s.words(), to_array(s), t.words(), to_array(t));
      },
      py::arg("checkpoint"), "Returns (source words, source matrix, target words, target matrix).");

  m.def(
      "evaluate_checkpoint",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& dictionary,
         const std::string& similarity) {
        return report_dict(wam::evaluate_checkpoint(wam::load_checkpoint(checkpoint),
                                                    wam::load_dictionary(dictionary), similarity_of(similarity)));
      },
      py::arg("checkpoint"), py::arg("dictionary"), py::arg("similarity") = "cosine");

  py::register_exception<wam::ConfigError>(m, "ConfigError", PyExc_ValueError);
}
