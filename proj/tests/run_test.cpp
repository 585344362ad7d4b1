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

#include "wam/run.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace wam {
namespace {

namespace fs = std::filesystem;

fs::path fresh(const std::string& name) {
  const fs::path d = fs::path(WAM_TEST_TMP) / ("run_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_corpus(const fs::path& d) {
  const auto corpus = synth_cipher_corpus({20, 60, 3, 6, 1.0, 5});
  write_parallel_corpus(corpus.pairs, d / "c.src", d / "c.tgt");
  write_dictionary(corpus.gold, d / "gold.dict");
  return d;
}

std::string small_config(const std::string& extra = "") {
  return "[run]\nseed = 7\nsteps = 12\noutput_dir = out\ncheckpoint_every = 5\n"
         "[corpus]\nsource = c.src\ntarget = c.tgt\ndictionary = gold.dict\ntoken_budget = 60\n"
         "[model]\nd_model = 8\nn_heads = 2\nn_encoder_layers = 1\nn_decoder_layers = 1\nd_ff = 16\n"
         "[optim]\nwarmup_steps = 5\n" + extra;
}

TEST(RunConfig, ParsesAndResolvesPaths) {
  const auto d = write_corpus(fresh("parse"));
  const auto c = parse_run_config(small_config(), d);
  EXPECT_EQ(*c.seed, 7u);
  EXPECT_EQ(c.steps, 12);
  EXPECT_EQ(c.source_corpus, d / "c.src");
  EXPECT_EQ(c.model.d_model, 8u);
  EXPECT_EQ(c.adam.beta2, 0.98);
  EXPECT_TRUE(validate_run_config(c).empty());
}

TEST(RunConfig, CollectsEveryProblem) {
  try {
    parse_run_config("[run]\nseed = x\nsteps = 3\n[model]\nwidth = 4\n[align]\nmmd_weight = ten\n", ".");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.problems.size(), 3u);
  }
  const auto c = parse_run_config("[run]\nmode = supervised-landmark\n", fresh("invalid"));
  const auto problems = validate_run_config(c);
  auto mentions = [&](const std::string& s) {
    for (const auto& p : problems)
      if (p.find(s) != std::string::npos) return true;
    return false;
  };
  EXPECT_TRUE(mentions("seed"));
  EXPECT_TRUE(mentions("output_dir"));
  EXPECT_TRUE(mentions("[corpus] source"));
  EXPECT_TRUE(mentions("dictionary is required"));
}

TEST(RunConfig, FormatRoundTrips) {
  const auto d = write_corpus(fresh("format"));
  const auto c = parse_run_config(small_config("[align]\nmmd_weight = 0.25\n"), d);
  const auto text = format_run_config(c);
  const auto again = parse_run_config(text, "/nowhere");
  EXPECT_EQ(format_run_config(again), text);
  EXPECT_EQ(again.align.mmd_weight, 0.25);
}

TEST(RunTraining, WritesArtifactsAndIsDeterministic) {
  const auto d = write_corpus(fresh("train"));
  auto c = parse_run_config(small_config(), d);
  const auto a = run_training(c);
  const auto out = d / "out";
  for (const char* f : {"config.cfg", "metrics.tsv", "model.ckpt", "summary.json", "checkpoints/step_000005.ckpt",
                        "checkpoints/step_000010.ckpt"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto metrics = slurp(out / "metrics.tsv");
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 12);
  EXPECT_EQ(a.log.size(), 12u);
  EXPECT_TRUE(std::isfinite(a.valid_translation_loss));

  c.output_dir = d / "out2";
  run_training(c);
  EXPECT_EQ(slurp(d / "out2" / "metrics.tsv"), metrics);

  const auto frozen = load_run_config(out / "config.cfg");
  EXPECT_EQ(frozen.seed, c.seed);
  EXPECT_EQ(frozen.source_corpus, c.source_corpus);

  const auto ck = load_checkpoint(out / "model.ckpt");
  const auto report = evaluate_checkpoint(ck, load_dictionary(d / "gold.dict"));
  EXPECT_LE(report.acc1, report.acc10);
}

TEST(RunTraining, SupervisedUsesFirstHalf) {
  const auto d = write_corpus(fresh("supervised"));
  auto c = parse_run_config(small_config("[landmark]\nfraction = 1\n"), d);
  c.mode = TrainMode::kSupervisedLandmark;
  const auto prepared = prepare_corpus(c);
  const auto gold = load_dictionary(d / "gold.dict");
  auto in_vocab = [&](const Dictionary& dict) {
    std::size_t n = 0;
    for (const auto& [s, t] : dict.pairs) n += prepared.source_vocab.contains(s) && prepared.target_vocab.contains(t);
    return n;
  };
  EXPECT_EQ(prepared.data.landmarks.pairs.size(), in_vocab(split_dictionary_halves(gold).first));
  EXPECT_GT(prepared.data.landmarks.pairs.size(), 0u);
  c.landmark_split = "all";
  EXPECT_EQ(prepare_corpus(c).data.landmarks.pairs.size(), in_vocab(gold));
}

TEST(RunTraining, RejectsInvalidConfig) {
  const auto d = write_corpus(fresh("reject"));
  auto c = parse_run_config(small_config(), d);
  c.seed.reset();
  EXPECT_THROW(run_training(c), ConfigError);
  EXPECT_FALSE(fs::exists(d / "out"));
}

}  // namespace
}  // namespace wam
