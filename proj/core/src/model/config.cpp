// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/model/config.hpp"

#include <cstdio>

#include "mcvqa/error.hpp"

namespace mcvqa::model {

const char* to_string(AttentionMode mode) { return mode == AttentionMode::kLocal ? "local" : "global"; }

AttentionMode attention_mode_from_string(const std::string& name) {
  if (name == "local") return AttentionMode::kLocal;
  if (name == "global") return AttentionMode::kGlobal;
  throw ValidationError("unknown attention mode '" + name + "'");
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string architecture_hash(const ModelConfig& c) {
  const std::string key = "vocab=" + std::to_string(c.vocab_size) + ";d_text=" + std::to_string(c.d_text) +
                          ";d_visual=" + std::to_string(c.d_visual) + ";max_len=" + std::to_string(c.max_len) +
                          ";self_attention=" + (c.self_attention ? "1" : "0");
  return fnv1a_hex(key);
}

}  // namespace mcvqa::model
