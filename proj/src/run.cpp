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

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

namespace wam {

namespace {

constexpr std::uint64_t kStreamSplit = 4;

namespace fs = std::filesystem;

struct Field {
  std::string_view section;
  std::string_view key;
  std::function<void(RunConfig&, const std::string&, const fs::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
T parse_integer(const std::string& text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("expected an integer, got '" + text + "'");
  return value;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw std::invalid_argument("expected a number, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument("expected true/false, got '" + text + "'");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path resolve(const std::string& text, const fs::path& base) {
  fs::path p(text);
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

std::string show_path(const fs::path& p) { return p.empty() ? "" : fs::absolute(p).lexically_normal().string(); }

#define WAM_INT_FIELD(section, key, member, type)                                            \
  Field {                                                                                    \
    section, key,                                                                            \
        [](RunConfig& c, const std::string& v, const fs::path&) { c.member = parse_integer<type>(v); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }                          \
  }
#define WAM_DOUBLE_FIELD(section, key, member)                                               \
  Field {                                                                                    \
    section, key, [](RunConfig& c, const std::string& v, const fs::path&) { c.member = parse_double(v); }, \
        [](const RunConfig& c) { return fmt_double(c.member); }                              \
  }
#define WAM_BOOL_FIELD(section, key, member)                                                 \
  Field {                                                                                    \
    section, key, [](RunConfig& c, const std::string& v, const fs::path&) { c.member = parse_bool(v); }, \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }          \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"run", "mode",
       [](RunConfig& c, const std::string& v, const fs::path&) { c.mode = parse_train_mode(v); },
       [](const RunConfig& c) { return std::string(to_string(c.mode)); }},
      {"run", "seed",
       [](RunConfig& c, const std::string& v, const fs::path&) { c.seed = parse_integer<std::uint64_t>(v); },
       [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }},
      WAM_INT_FIELD("run", "steps", steps, std::int64_t),
      {"run", "output_dir",
       [](RunConfig& c, const std::string& v, const fs::path& base) { c.output_dir = resolve(v, base); },
       [](const RunConfig& c) { return show_path(c.output_dir); }},
      WAM_INT_FIELD("run", "checkpoint_every", checkpoint_every, std::int64_t),

      {"corpus", "source",
       [](RunConfig& c, const std::string& v, const fs::path& base) { c.source_corpus = resolve(v, base); },
       [](const RunConfig& c) { return show_path(c.source_corpus); }},
      {"corpus", "target",
       [](RunConfig& c, const std::string& v, const fs::path& base) { c.target_corpus = resolve(v, base); },
       [](const RunConfig& c) { return show_path(c.target_corpus); }},
      {"corpus", "dictionary",
       [](RunConfig& c, const std::string& v, const fs::path& base) {
         if (v.empty()) c.dictionary.reset();
         else c.dictionary = resolve(v, base);
       },
       [](const RunConfig& c) { return c.dictionary ? show_path(*c.dictionary) : std::string(); }},
      WAM_INT_FIELD("corpus", "max_len", filter.max_len, std::size_t),
      WAM_DOUBLE_FIELD("corpus", "max_ratio", filter.max_ratio),
      WAM_DOUBLE_FIELD("corpus", "train_fraction", train_fraction),
      WAM_INT_FIELD("corpus", "min_count", min_count, std::size_t),
      WAM_INT_FIELD("corpus", "token_budget", batching.token_budget, std::size_t),
      WAM_INT_FIELD("corpus", "bucket_size", batching.bucket_size, std::size_t),

      WAM_INT_FIELD("model", "d_model", model.d_model, std::size_t),
      WAM_INT_FIELD("model", "n_heads", model.n_heads, std::size_t),
      WAM_INT_FIELD("model", "n_encoder_layers", model.n_encoder_layers, std::size_t),
      WAM_INT_FIELD("model", "n_decoder_layers", model.n_decoder_layers, std::size_t),
      WAM_INT_FIELD("model", "d_ff", model.d_ff, std::size_t),
      WAM_DOUBLE_FIELD("model", "dropout", model.dropout),
      WAM_DOUBLE_FIELD("model", "label_smoothing", model.label_smoothing),
      WAM_INT_FIELD("model", "max_position", model.max_position, std::size_t),

      WAM_INT_FIELD("kernel", "scale_lo", kernel.lo, int),
      WAM_INT_FIELD("kernel", "scale_hi", kernel.hi, int),

      WAM_DOUBLE_FIELD("align", "mmd_weight", align.mmd_weight),
      WAM_BOOL_FIELD("align", "use_unscaled_embeddings", align.use_unscaled_embeddings),
      WAM_BOOL_FIELD("align", "exclude_special_tokens", align.exclude_special_tokens),

      WAM_DOUBLE_FIELD("landmark", "fraction", landmark_fraction),
      {"landmark", "split",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         if (v != "first-half" && v != "all")
           throw std::invalid_argument("expected first-half or all, got '" + v + "'");
         c.landmark_split = v;
       },
       [](const RunConfig& c) { return c.landmark_split; }},

      WAM_DOUBLE_FIELD("optim", "beta1", adam.beta1),
      WAM_DOUBLE_FIELD("optim", "beta2", adam.beta2),
      WAM_DOUBLE_FIELD("optim", "epsilon", adam.epsilon),
      WAM_INT_FIELD("optim", "warmup_steps", warmup_steps, int),
  };
  return table;
}

#undef WAM_INT_FIELD
#undef WAM_DOUBLE_FIELD
#undef WAM_BOOL_FIELD

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid run config:";
  for (const auto& p : problems) out += "\n  - " + p;
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> list)
    : std::runtime_error(join_problems(list)), problems(std::move(list)) {}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax error: ") + e.what()});
  }
  RunConfig config;
  std::vector<std::string> problems;
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      problems.push_back("key '" + section + "' must live inside a [section]");
      continue;
    }
    for (const auto& [key, node] : entries) {
      const Field* field = nullptr;
      for (const auto& f : fields())
        if (f.section == section && f.key == key) field = &f;
      if (field == nullptr) {
        problems.push_back("unknown key [" + section + "] " + key);
        continue;
      }
      try {
        field->set(config, node.data(), base_dir);
      } catch (const std::exception& e) {
        problems.push_back("[" + section + "] " + key + ": " + e.what());
      }
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), fs::absolute(path).parent_path());
}

std::vector<std::string> validate_run_config(const RunConfig& c) {
  std::vector<std::string> problems;
  if (!c.seed) problems.emplace_back("[run] seed is required");
  if (c.steps < 1) problems.emplace_back("[run] steps must be at least 1");
  if (c.output_dir.empty()) problems.emplace_back("[run] output_dir is required");
  if (c.checkpoint_every < 0) problems.emplace_back("[run] checkpoint_every must be >= 0");
  auto require_file = [&](const fs::path& p, const std::string& what) {
    if (p.empty()) problems.push_back(what + " is required");
    else if (!fs::is_regular_file(p)) problems.push_back(what + " does not exist: " + p.string());
  };
  require_file(c.source_corpus, "[corpus] source");
  require_file(c.target_corpus, "[corpus] target");
  if (c.dictionary) require_file(*c.dictionary, "[corpus] dictionary");
  if (c.mode == TrainMode::kSupervisedLandmark && !c.dictionary)
    problems.emplace_back("[corpus] dictionary is required for mode supervised-landmark");
  if (c.filter.max_len < 1) problems.emplace_back("[corpus] max_len must be positive");
  if (!(c.filter.max_ratio >= 1.0)) problems.emplace_back("[corpus] max_ratio must be >= 1");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    problems.emplace_back("[corpus] train_fraction must lie in (0, 1)");
  if (c.min_count < 1) problems.emplace_back("[corpus] min_count must be >= 1");
  if (c.batching.token_budget < 1) problems.emplace_back("[corpus] token_budget must be positive");
  if (c.batching.bucket_size < 1) problems.emplace_back("[corpus] bucket_size must be positive");
  for (const auto& p : c.model.problems()) problems.push_back("[model] " + p);
  if (c.model.max_position < c.filter.max_len + 2)
    problems.emplace_back("[model] max_position must cover max_len plus BOS/EOS");
  if (c.kernel.lo > c.kernel.hi) problems.emplace_back("[kernel] scale_lo must not exceed scale_hi");
  if (!(c.align.mmd_weight >= 0.0)) problems.emplace_back("[align] mmd_weight must be >= 0");
  if (!(c.landmark_fraction > 0.0 && c.landmark_fraction <= 1.0))
    problems.emplace_back("[landmark] fraction must lie in (0, 1]");
  if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0)) problems.emplace_back("[optim] beta1 must lie in [0, 1)");
  if (!(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0)) problems.emplace_back("[optim] beta2 must lie in [0, 1)");
  if (!(c.adam.epsilon > 0.0)) problems.emplace_back("[optim] epsilon must be positive");
  if (c.warmup_steps < 1) problems.emplace_back("[optim] warmup_steps must be positive");
  return problems;
}

std::string format_run_config(const RunConfig& config) {
  std::ostringstream os;
  std::string_view section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(config) << '\n';
  }
  return os.str();
}

TrainOptions make_train_options(const RunConfig& config) {
  TrainOptions o;
  o.mode = config.mode;
  o.model = config.model;
  o.kernel = config.kernel;
  o.align = config.align;
  o.adam = config.adam;
  o.warmup_steps = config.warmup_steps;
  o.batching = config.batching;
  o.steps = config.steps;
  o.seed = config.seed.value_or(0);
  return o;
}

PreparedCorpus prepare_corpus(const RunConfig& config) {
  PreparedCorpus out;
  const auto raw = read_parallel_corpus(config.source_corpus, config.target_corpus);
  out.total_pairs = raw.size();
  const auto kept = filter_pairs(raw, config.filter);
  out.filtered_pairs = raw.size() - kept.size();
  auto split = split_train_valid(kept, config.train_fraction,
                                 derive_seed(config.seed.value_or(0), kStreamSplit));
  out.train = std::move(split.train);
  out.valid = std::move(split.valid);
  out.source_vocab = build_vocab(out.train, Side::kSource, config.min_count, "source");
  out.target_vocab = build_vocab(out.train, Side::kTarget, config.min_count, "target");
  out.data.pairs = encode_pairs(out.train, out.source_vocab, out.target_vocab);
  out.data.source_vocab = out.source_vocab.size();
  out.data.target_vocab = out.target_vocab.size();
  if (config.mode == TrainMode::kSupervisedLandmark) {
    const auto dict = load_dictionary(*config.dictionary);
    const Dictionary seen = config.landmark_split == "all" ? dict : split_dictionary_halves(dict).first;
    out.data.landmarks =
        landmarks_from_dictionary(seen, out.source_vocab, out.target_vocab, config.landmark_fraction);
    if (out.data.landmarks.pairs.empty())
      throw std::runtime_error("no landmark pair of " + config.dictionary->string() + " is in vocabulary");
  }
  return out;
}

double translation_loss(const std::vector<EncodedPair>& pairs, const ModelParams& params,
                        const TransformerConfig& config, std::size_t token_budget) {
  if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
  NoGradGuard no_grad;
  double weighted = 0.0;
  std::size_t tokens = 0;
  for (const auto& batch : make_batches(pairs, {token_budget, 256}, 0)) {
    const auto targets = decoder_targets(batch);
    std::size_t n = 0;
    for (int t : targets) n += t != Vocab::kPad;
    const Tensor logits = forward(batch, params, config);
    weighted += label_smoothed_loss(logits, targets, config.label_smoothing).item() * static_cast<double>(n);
    tokens += n;
  }
  return weighted / static_cast<double>(tokens);
}

RunOutcome run_training(const RunConfig& config, std::ostream* progress) {
  if (auto problems = validate_run_config(config); !problems.empty()) throw ConfigError(std::move(problems));
  fs::create_directories(config.output_dir);
  write_text(config.output_dir / "config.cfg", format_run_config(config));

  auto corpus = prepare_corpus(config);
  const auto options = make_train_options(config);

  RunOutcome outcome;
  outcome.metrics_path = config.output_dir / "metrics.tsv";
  outcome.checkpoint_path = config.output_dir / "model.ckpt";
  std::ofstream metrics(outcome.metrics_path, std::ios::binary);
  if (!metrics) throw std::runtime_error("cannot write " + outcome.metrics_path.string());

  auto make_checkpoint = [&](const ModelParams& params) {
    Checkpoint ck{config.model, corpus.source_vocab, corpus.target_vocab, params, {}};
    ck.meta["mode"] = std::string(to_string(config.mode));
    ck.meta["seed"] = std::to_string(*config.seed);
    return ck;
  };

  const std::int64_t report_every = std::max<std::int64_t>(1, config.steps / 20);
  auto on_step = [&](const StepRecord& r, const ModelParams& params) {
    metrics << format_step_record(r) << '\n';
    if (config.checkpoint_every > 0 && r.step % config.checkpoint_every == 0 && r.step < config.steps) {
      fs::create_directories(config.output_dir / "checkpoints");
      char name[64];
      std::snprintf(name, sizeof name, "step_%06lld.ckpt", static_cast<long long>(r.step));
      auto ck = make_checkpoint(params);
      ck.meta["step"] = std::to_string(r.step);
      save_checkpoint(ck, config.output_dir / "checkpoints" / name);
    }
    if (progress && (r.step % report_every == 0 || r.step == 1)) {
      *progress << "step " << r.step << "/" << config.steps << "  L=" << r.total
                << "  L_T=" << r.translation << "  L_M=" << r.mmd << "  lr=" << r.lr << std::endl;
    }
  };

  TrainResult result;
  try {
    result = train(corpus.data, options, on_step);
  } catch (const NonFiniteLoss& e) {
    metrics.flush();
    write_text(config.output_dir / "nonfinite_dump.txt", e.dump());
    throw;
  }
  metrics.close();

  outcome.checkpoint = make_checkpoint(result.params);
  outcome.checkpoint.meta["step"] = std::to_string(config.steps);
  save_checkpoint(outcome.checkpoint, outcome.checkpoint_path);
  outcome.log = std::move(result.log);

  const auto valid = encode_pairs(corpus.valid, corpus.source_vocab, corpus.target_vocab);
  outcome.valid_translation_loss =
      translation_loss(valid, outcome.checkpoint.params, config.model, config.batching.token_budget);

  nlohmann::ordered_json summary;
  summary["mode"] = to_string(config.mode);
  summary["steps"] = config.steps;
  summary["pairs_read"] = corpus.total_pairs;
  summary["pairs_filtered_out"] = corpus.filtered_pairs;
  summary["train_pairs"] = corpus.train.size();
  summary["valid_pairs"] = corpus.valid.size();
  summary["source_vocab"] = corpus.source_vocab.size();
  summary["target_vocab"] = corpus.target_vocab.size();
  summary["parameters"] = outcome.checkpoint.params.parameter_count();
  if (!outcome.log.empty()) {
    summary["final_L"] = outcome.log.back().total;
    summary["final_L_T"] = outcome.log.back().translation;
  }
  summary["valid_L_T"] = outcome.valid_translation_loss;
  write_text(config.output_dir / "summary.json", summary.dump(2) + "\n");
  return outcome;
}

EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, const Dictionary& dict,
                               Similarity similarity) {
  return evaluate(dict, word_vectors(checkpoint.source_vocab, checkpoint.params.source),
                  word_vectors(checkpoint.target_vocab, checkpoint.params.target), similarity);
}

}  // namespace wam
