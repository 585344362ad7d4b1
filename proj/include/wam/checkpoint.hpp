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
#include <map>
#include <string>

#include "wam/corpus.hpp"
#include "wam/transformer.hpp"

namespace wam {

// Checkpoint layout, version 1 (all integers little-endian):
//
//   offset 0   8 bytes   magic "WAMCKPT\0"
//   offset 8   uint32    format version
//   offset 12  uint64    header length H in bytes
//   offset 20  H bytes   UTF-8 JSON header:
//                          {"format": "wam-checkpoint", "version": 1,
//                           "config": {transformer config fields},
//                           "vocab": {"source": {"language", "words"},
//                                     "target": {...}},
//                           "tensors": [{"name", "shape"}, ...],
//                           "meta": {free-form string map}}
//   then       one block of IEEE-754 binary64 values per tensor, in header
//              order, row-major, numel(shape) values each.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TransformerConfig config;
  Vocab source_vocab;
  Vocab target_vocab;
  ModelParams params;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wam
