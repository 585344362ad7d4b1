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

#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace wam {

namespace {

constexpr std::array<char, 8> kMagic = {'W', 'A', 'M', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value))
    throw std::runtime_error(path.string() + ": truncated checkpoint");
  return value;
}

nlohmann::ordered_json config_json(const TransformerConfig& c) {
  nlohmann::ordered_json j;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["n_encoder_layers"] = c.n_encoder_layers;
  j["n_decoder_layers"] = c.n_decoder_layers;
  j["d_ff"] = c.d_ff;
  j["dropout"] = c.dropout;
  j["label_smoothing"] = c.label_smoothing;
  j["max_position"] = c.max_position;
  return j;
}

TransformerConfig config_from_json(const nlohmann::json& j) {
  TransformerConfig c;
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.n_encoder_layers = j.at("n_encoder_layers").get<std::size_t>();
  c.n_decoder_layers = j.at("n_decoder_layers").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.label_smoothing = j.at("label_smoothing").get<double>();
  c.max_position = j.at("max_position").get<std::size_t>();
  return c;
}

nlohmann::ordered_json vocab_json(const Vocab& v) {
  nlohmann::ordered_json j;
  j["language"] = v.language();
  j["words"] = std::vector<std::string>(v.words().begin() + Vocab::kReserved, v.words().end());
  return j;
}

Vocab vocab_from_json(const nlohmann::json& j) {
  return Vocab(j.at("language").get<std::string>(), j.at("words").get<std::vector<std::string>>());
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  nlohmann::ordered_json header;
  header["format"] = "wam-checkpoint";
  header["version"] = kCheckpointVersion;
  header["config"] = config_json(checkpoint.config);
  header["vocab"]["source"] = vocab_json(checkpoint.source_vocab);
  header["vocab"]["target"] = vocab_json(checkpoint.target_vocab);
  const auto named = checkpoint.params.named();
  header["tensors"] = nlohmann::ordered_json::array();
  for (const auto& [name, t] : named)
    header["tensors"].push_back({{"name", name}, {"shape", t.shape()}});
  header["meta"] = checkpoint.meta;
  const std::string text = header.dump();

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(kMagic.data(), kMagic.size());
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : named)
      out.write(reinterpret_cast<const char*>(t.data().data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed for checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw std::runtime_error(path.string() + ": not a WAM checkpoint");
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto length = read_pod<std::uint64_t>(in, path);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length)))
    throw std::runtime_error(path.string() + ": truncated header");
  const auto header = nlohmann::json::parse(text);

  Checkpoint ck;
  ck.config = config_from_json(header.at("config"));
  ck.source_vocab = vocab_from_json(header.at("vocab").at("source"));
  ck.target_vocab = vocab_from_json(header.at("vocab").at("target"));
  ck.meta = header.value("meta", std::map<std::string, std::string>{});
  ck.params = init_params(ck.config, ck.source_vocab.size(), ck.target_vocab.size(), 0);
  ck.params.source.language = ck.source_vocab.language();
  ck.params.target.language = ck.target_vocab.language();

  auto named = ck.params.named();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != named.size())
    throw std::runtime_error(path.string() + ": expected " + std::to_string(named.size()) +
                             " tensors, header lists " + std::to_string(tensors.size()));
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto& [name, t] = named[i];
    const auto stored_name = tensors[i].at("name").get<std::string>();
    const auto stored_shape = tensors[i].at("shape").get<Shape>();
    if (stored_name != name || stored_shape != t.shape())
      throw std::runtime_error(path.string() + ": tensor " + std::to_string(i) + " is " + stored_name +
                               shape_str(stored_shape) + ", expected " + name + shape_str(t.shape()));
    auto values = t.mutable_data();
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(double))))
      throw std::runtime_error(path.string() + ": truncated tensor data for " + name);
  }
  return ck;
}

}  // namespace wam
