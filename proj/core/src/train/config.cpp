// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/train/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mcvqa/error.hpp"

namespace mcvqa::train {
namespace {

using nlohmann::ordered_json;

template <typename Fn>
void for_each_field(TrainConfig& c, Fn&& fn) {
  fn("preset", c.preset);
  fn("lambda_qa", c.lambda_qa);
  fn("lambda_span", c.lambda_span);
  fn("lambda_cont", c.lambda_cont);
  fn("mask_p", c.mask_p);
  fn("options", c.options);
  fn("frames", c.frames);
  fn("segments", c.segments);
  fn("d_text", c.d_text);
  fn("d_visual", c.d_visual);
  fn("max_len", c.max_len);
  fn("self_attention", c.self_attention);
  fn("attention_scale", c.attention_scale);
  fn("init_range", c.init_range);
  fn("lr_pretrain", c.lr_pretrain);
  fn("lr_main", c.lr_main);
  fn("epochs_pretrain", c.epochs_pretrain);
  fn("epochs_main", c.epochs_main);
  fn("batch_size", c.batch_size);
  fn("adam_beta1", c.adam_beta1);
  fn("adam_beta2", c.adam_beta2);
  fn("adam_epsilon", c.adam_epsilon);
  fn("clip_norm", c.clip_norm);
  fn("seed", c.seed);
  fn("attention_mode", c.attention_mode);
  fn("use_multi_token_type", c.use_multi_token_type);
  fn("use_span_loss", c.use_span_loss);
  fn("use_cont_loss", c.use_cont_loss);
  fn("use_pretrain", c.use_pretrain);
  fn("validation_fraction", c.validation_fraction);
  fn("diagnostic_examples", c.diagnostic_examples);
  fn("stop_at_accuracy", c.stop_at_accuracy);
}

}  // namespace

TrainConfig toy_preset() { return TrainConfig{}; }

TrainConfig paper_preset() {
  TrainConfig c;
  c.preset = "paper";
  c.d_text = 768;
  c.d_visual = 2048;
  c.max_len = 80;
  c.segments = 40;
  c.lr_pretrain = 1e-5;
  c.lr_main = 5e-5;
  c.epochs_pretrain = 1;
  c.epochs_main = 3;
  c.use_pretrain = true;
  return c;
}

TrainConfig preset(const std::string& name) {
  if (name == "toy") return toy_preset();
  if (name == "paper") return paper_preset();
  throw ValidationError("unknown preset '" + name + "'");
}

void validate(const TrainConfig& c) {
  if (c.preset != "toy" && c.preset != "paper") throw ValidationError("unknown preset '" + c.preset + "'");
  if (c.lambda_qa < 0 || c.lambda_span < 0 || c.lambda_cont < 0) throw ValidationError("loss weights must be >= 0");
  if (c.mask_p < 0 || c.mask_p > 1) throw ValidationError("mask_p must lie in [0, 1]");
  if (c.options < 2 || c.frames == 0 || c.segments == 0 || c.d_text == 0 || c.d_visual == 0 || c.max_len == 0) {
    throw ValidationError("dimensions must be positive (and at least 2 options)");
  }
  if (c.batch_size == 0) throw ValidationError("batch_size must be positive");
  if (c.lr_main <= 0 || c.lr_pretrain <= 0) throw ValidationError("learning rates must be positive");
  if (c.validation_fraction <= 0 || c.validation_fraction >= 1) {
    throw ValidationError("validation_fraction must lie in (0, 1)");
  }
}

std::string to_json(const TrainConfig& config) {
  ordered_json out = ordered_json::object();
  TrainConfig copy = config;
  for_each_field(copy, [&](const char* name, auto& value) {
    using V = std::decay_t<decltype(value)>;
    if constexpr (std::is_same_v<V, model::AttentionMode>) {
      out[name] = model::to_string(value);
    } else {
      out[name] = value;
    }
  });
  return out.dump(2);
}

TrainConfig from_json(const std::string& text) {
  ordered_json in;
  try {
    in = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!in.is_object()) throw ParseError("config: expected a JSON object");
  TrainConfig c;
  std::set<std::string> known;
  for_each_field(c, [&](const char* name, auto& value) {
    known.insert(name);
    auto it = in.find(name);
    if (it == in.end()) throw ValidationError(std::string("config: missing field '") + name + "'");
    using V = std::decay_t<decltype(value)>;
    try {
      if constexpr (std::is_same_v<V, model::AttentionMode>) {
        value = model::attention_mode_from_string(it->template get<std::string>());
      } else {
        value = it->template get<V>();
      }
    } catch (const ordered_json::exception& e) {
      throw ParseError(std::string("config: field '") + name + "': " + e.what());
    }
  });
  for (const auto& [key, _] : in.items()) {
    if (known.count(key) == 0) throw ValidationError("config: unknown field '" + key + "'");
  }
  validate(c);
  return c;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string config_hash(const TrainConfig& config) { return model::fnv1a_hex(to_json(config)); }

model::ModelConfig model_config(const TrainConfig& c, std::size_t vocab_size) {
  model::ModelConfig m;
  m.vocab_size = vocab_size;
  m.options = c.options;
  m.segments = c.segments;
  m.frames = c.frames;
  m.d_text = c.d_text;
  m.d_visual = c.d_visual;
  m.max_len = c.max_len;
  m.self_attention = c.self_attention;
  m.attention_scale = c.attention_scale;
  m.attention = c.attention_mode;
  m.init_range = c.init_range;
  return m;
}

}  // namespace mcvqa::train
