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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wam/checkpoint.hpp"
#include "wam/corpus.hpp"
#include "wam/eval.hpp"
#include "wam/run.hpp"
#include "wam/train.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int cmd_synth(const wam::SynthOptions& options, const fs::path& out_dir) {
  if (options.vocab_size < 1 || options.n_sentences < 1 || options.min_len < 1 ||
      options.min_len > options.max_len)
    throw ValidationError("synth: need vocab-size >= 1, sentences >= 1 and 1 <= min-len <= max-len");
  const auto corpus = wam::synth_cipher_corpus(options);
  fs::create_directories(out_dir);
  wam::write_parallel_corpus(corpus.pairs, out_dir / "train.src", out_dir / "train.tgt");
  wam::write_dictionary(corpus.gold, out_dir / "gold.dict");
  std::cout << "wrote " << corpus.pairs.size() << " pairs and " << corpus.gold.pairs.size()
            << " dictionary entries to " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const fs::path& config_path, const std::string& output_override,
              const std::string& mode_override) {
  auto config = wam::load_run_config(config_path);
  if (!output_override.empty()) config.output_dir = fs::absolute(output_override).lexically_normal();
  if (!mode_override.empty()) config.mode = wam::parse_train_mode(mode_override);
  if (auto problems = wam::validate_run_config(config); !problems.empty())
    throw wam::ConfigError(std::move(problems));
  const auto outcome = wam::run_training(config, &std::cout);
  std::cout << "checkpoint: " << outcome.checkpoint_path.string() << "\n"
            << "metrics:    " << outcome.metrics_path.string() << "\n"
            << "valid L_T:  " << outcome.valid_translation_loss << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string source_vectors;
  std::string target_vectors;
  std::string dictionary;
  std::string output;
  std::string export_dir;
  std::string projection;
  std::string metric = "cosine";
};

int cmd_eval(const EvalArgs& a) {
  const bool from_checkpoint = !a.checkpoint.empty();
  const bool from_vectors = !a.source_vectors.empty() || !a.target_vectors.empty();
  if (from_checkpoint == from_vectors)
    throw ValidationError("eval: give either --checkpoint or both --source-vectors and --target-vectors");
  if (from_vectors && (a.source_vectors.empty() || a.target_vectors.empty()))
    throw ValidationError("eval: --source-vectors and --target-vectors go together");
  const auto similarity = wam::parse_similarity(a.metric);
  const auto dict = wam::load_dictionary(a.dictionary);

  wam::WordVectors source, target;
  if (from_checkpoint) {
    const auto ck = wam::load_checkpoint(a.checkpoint);
    source = wam::word_vectors(ck.source_vocab, ck.params.source);
    target = wam::word_vectors(ck.target_vocab, ck.params.target);
  } else {
    source = wam::import_embeddings(a.source_vectors, "source");
    target = wam::import_embeddings(a.target_vectors, "target");
  }

  const auto report = wam::evaluate(dict, source, target, similarity);
  if (report.n_in_vocab_pairs == 0)
    throw ValidationError("eval: no dictionary pair is covered by the vocabularies");
  const std::string text = report.to_json();
  std::cout << text << "\n";
  if (!a.output.empty()) {
    std::ofstream out(a.output);
    out << text << "\n";
    if (!out) throw std::runtime_error("cannot write " + a.output);
  }
  if (!a.export_dir.empty()) {
    fs::create_directories(a.export_dir);
    wam::export_embeddings(source, fs::path(a.export_dir) / "source.vec");
    wam::export_embeddings(target, fs::path(a.export_dir) / "target.vec");
  }
  if (!a.projection.empty()) wam::write_projection(wam::project_2d({source, target}, dict), a.projection);
  return kExitOk;
}

int cmd_export(const fs::path& checkpoint, const std::string& side, const fs::path& output) {
  if (side != "source" && side != "target" && side != "both")
    throw ValidationError("export: --side must be source, target or both");
  const auto ck = wam::load_checkpoint(checkpoint);
  if (side == "both") {
    fs::create_directories(output);
    wam::export_embeddings(wam::word_vectors(ck.source_vocab, ck.params.source), output / "source.vec");
    wam::export_embeddings(wam::word_vectors(ck.target_vocab, ck.params.target), output / "target.vec");
  } else if (side == "source") {
    wam::export_embeddings(wam::word_vectors(ck.source_vocab, ck.params.source), output);
  } else {
    wam::export_embeddings(wam::word_vectors(ck.target_vocab, ck.params.target), output);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wam: word embedding alignment with a localized MMD loss"};
  app.require_subcommand(1);

  wam::SynthOptions synth;
  std::string synth_dir;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a cipher parallel corpus and its gold dictionary");
  synth_cmd->add_option("--vocab-size", synth.vocab_size, "Words per language")->capture_default_str();
  synth_cmd->add_option("--sentences", synth.n_sentences, "Sentence pairs")->capture_default_str();
  synth_cmd->add_option("--min-len", synth.min_len)->capture_default_str();
  synth_cmd->add_option("--max-len", synth.max_len)->capture_default_str();
  synth_cmd->add_option("--zipf", synth.zipf_exponent, "Zipf exponent of word frequencies")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->required();
  synth_cmd->add_option("--output-dir", synth_dir)->required();

  std::string config_path, train_output, train_mode;
  auto* train_cmd = app.add_subcommand("train", "Train from a config file");
  train_cmd->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--output-dir", train_output, "Override [run] output_dir");
  train_cmd->add_option("--mode", train_mode, "Override [run] mode");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score embeddings against a bilingual dictionary");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->check(CLI::ExistingFile);
  eval_cmd->add_option("--source-vectors", eval.source_vectors)->check(CLI::ExistingFile);
  eval_cmd->add_option("--target-vectors", eval.target_vectors)->check(CLI::ExistingFile);
  eval_cmd->add_option("--dictionary", eval.dictionary)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--output", eval.output, "Write the report as JSON");
  eval_cmd->add_option("--export-dir", eval.export_dir, "Also write source.vec and target.vec");
  eval_cmd->add_option("--projection", eval.projection, "Write a 2D PCA projection (TSV)");
  eval_cmd->add_option("--metric", eval.metric, "cosine or euclidean")->capture_default_str();

  std::string export_ckpt, export_side = "both", export_out;
  auto* export_cmd = app.add_subcommand("export", "Write embedding tables in text format");
  export_cmd->add_option("--checkpoint", export_ckpt)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--side", export_side, "source, target or both")->capture_default_str();
  export_cmd->add_option("--output", export_out, "File, or directory when --side both")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, synth_dir);
    if (*train_cmd) return cmd_train(config_path, train_output, train_mode);
    if (*eval_cmd) return cmd_eval(eval);
    if (*export_cmd) return cmd_export(export_ckpt, export_side, export_out);
  } catch (const wam::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  } catch (const ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  } catch (const wam::DictionaryError& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
