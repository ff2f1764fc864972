// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace mcvqa::model {

enum class AttentionMode { kLocal, kGlobal };

const char* to_string(AttentionMode mode);
AttentionMode attention_mode_from_string(const std::string& name);

/// Architecture hyperparameters. Two models can exchange weights iff their
/// architecture hashes agree.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t options = 5;
  std::size_t segments = 6;
  std::size_t frames = 4;
  std::size_t d_text = 32;
  std::size_t d_visual = 48;
  std::size_t max_len = 32;
  /// Single self-attention block in the hypothesis encoder.
  bool self_attention = true;
  /// Initial value of the learned score scale of that block.
  double attention_scale = 50.0;
  AttentionMode attention = AttentionMode::kLocal;
  double init_range = 0.05;
};

/// Hex digest of the fields that determine parameter names and shapes.
std::string architecture_hash(const ModelConfig& config);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace mcvqa::model
