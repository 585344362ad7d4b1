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

#include "wam/checkpoint.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace wam {
namespace {

namespace fs = std::filesystem;

fs::path dir() {
  const fs::path d = fs::path(WAM_TEST_TMP) / "checkpoint";
  fs::create_directories(d);
  return d;
}

Checkpoint sample() {
  TransformerConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 2;
  c.d_ff = 12;
  const Vocab s("en", {"the", "dog", "barks"});
  const Vocab t("fr", {"le", "chien"});
  auto params = init_params(c, s.size(), t.size(), 42);
  params.source.language = "en";
  params.target.language = "fr";
  return {c, s, t, params, {{"mode", "wam"}, {"seed", "42"}}};
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const auto ck = sample();
  save_checkpoint(ck, dir() / "a.ckpt");
  const auto back = load_checkpoint(dir() / "a.ckpt");
  EXPECT_EQ(back.config.n_decoder_layers, 2u);
  EXPECT_EQ(back.config.d_ff, 12u);
  EXPECT_EQ(back.source_vocab.words(), ck.source_vocab.words());
  EXPECT_EQ(back.target_vocab.language(), "fr");
  EXPECT_EQ(back.meta, ck.meta);
  const auto a = ck.params.named();
  const auto b = back.params.named();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_TRUE(std::equal(a[i].second.data().begin(), a[i].second.data().end(), b[i].second.data().begin()))
        << a[i].first;
  }
  EXPECT_FALSE(fs::exists(dir() / "a.ckpt.tmp"));
}

TEST(Checkpoint, RejectsForeignAndTruncatedFiles) {
  std::ofstream(dir() / "junk.ckpt") << "not a checkpoint at all";
  EXPECT_THROW(load_checkpoint(dir() / "junk.ckpt"), std::runtime_error);
  save_checkpoint(sample(), dir() / "b.ckpt");
  fs::resize_file(dir() / "b.ckpt", fs::file_size(dir() / "b.ckpt") - 16);
  EXPECT_THROW(load_checkpoint(dir() / "b.ckpt"), std::runtime_error);
  EXPECT_THROW(load_checkpoint(dir() / "missing.ckpt"), std::runtime_error);
}

}  // namespace
}  // namespace wam
