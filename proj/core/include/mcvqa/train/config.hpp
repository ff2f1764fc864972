// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "mcvqa/model/config.hpp"

namespace mcvqa::train {

struct TrainConfig {
  std::string preset = "toy";

  double lambda_qa = 1.0;
  double lambda_span = 0.2;
  double lambda_cont = 0.1;
  double mask_p = 0.2;

  std::size_t options = 5;
  std::size_t frames = 4;
  std::size_t segments = 6;
  std::size_t d_text = 32;
  std::size_t d_visual = 48;
  std::size_t max_len = 32;
  bool self_attention = true;
  double attention_scale = 50.0;
  double init_range = 0.05;

  double lr_pretrain = 6e-4;
  double lr_main = 3e-3;
  std::size_t epochs_pretrain = 1;
  std::size_t epochs_main = 10;
  std::size_t batch_size = 8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Global gradient-norm clip; 0 disables it.
  double clip_norm = 0.0;

  std::uint64_t seed = 0;
  model::AttentionMode attention_mode = model::AttentionMode::kLocal;
  bool use_multi_token_type = true;
  bool use_span_loss = true;
  bool use_cont_loss = true;
  bool use_pretrain = false;

  double validation_fraction = 0.1;
  std::size_t diagnostic_examples = 256;
  /// Stop the main stage once validation accuracy reaches this value; 0 never stops early.
  double stop_at_accuracy = 0.0;
};

/// Desk-scale preset the tests run.
TrainConfig toy_preset();
/// Published sizes and rates; for configuration validation only.
TrainConfig paper_preset();
TrainConfig preset(const std::string& name);

/// Throws ValidationError on negative weights, zero dimensions or unknown presets.
void validate(const TrainConfig& config);

/// JSON text listing every field.
std::string to_json(const TrainConfig& config);
/// Parses JSON text. Every field must be present and no other field may be.
TrainConfig from_json(const std::string& text);
TrainConfig load_config(const std::string& path);

/// Digest of to_json().
std::string config_hash(const TrainConfig& config);

model::ModelConfig model_config(const TrainConfig& config, std::size_t vocab_size);

}  // namespace mcvqa::train
