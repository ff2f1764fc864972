// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mcvqa/corpus/vocabulary.hpp"

namespace mcvqa::text {

using corpus::TokenId;

enum class SegmentTag : std::uint8_t { kSpecial, kQuestion, kAnswer, kSubtitle, kObjects };

/// One hypothesis input: [CLS] q [SEP] a [SEP] s [SEP] o [SEP] [PAD]...
///
/// `type_level` holds the token-type scale in thirds, so level k means a
/// scale of k/3. Separators carry the level of the segment they close; CLS
/// and PAD carry level 0.
struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> type_level;
  std::vector<SegmentTag> tags;
  /// True for real tokens, false for padding.
  std::vector<bool> present;

  std::size_t size() const { return ids.size(); }
  std::size_t length() const;
  double type_scale(std::size_t i) const { return type_level[i] / 3.0; }

  bool operator==(const TokenSequence&) const = default;
};

struct HypothesisParts {
  std::span<const TokenId> question;
  std::span<const TokenId> answer;
  std::span<const TokenId> subtitle;
  std::span<const TokenId> objects;
};

struct BuildOptions {
  std::size_t max_len = 32;
  /// Off: level 0 for the question region and 3 everywhere else, i.e. the
  /// plain two-type embedding.
  bool multi_token_type = true;
};

/// Assembles, truncates and pads one hypothesis. Truncation shortens objects
/// first, then subtitle, answer and question, each from its end and never
/// below one token. Throws CapacityError when even that does not fit.
TokenSequence build(const HypothesisParts& parts, const BuildOptions& options);

/// Same as build() with the answer segment replaced by a single MASK.
TokenSequence remove_answer(const HypothesisParts& parts, const BuildOptions& options);

/// Per-token scale in {0, 1/3, 2/3, 1}.
std::vector<double> type_scales(const TokenSequence& seq);

/// Whether masking may replace the token at `i`.
bool maskable(const TokenSequence& seq, std::size_t i);

/// Replaces each maskable token by MASK with probability p.
TokenSequence mask_for_anchor(const TokenSequence& seq, double p, std::mt19937_64& rng);

/// Replaces the listed positions by MASK; non-maskable positions are left alone.
TokenSequence mask_positions(const TokenSequence& seq, std::span<const std::size_t> positions);

struct SegmentContents {
  std::vector<TokenId> question;
  std::vector<TokenId> answer;
  std::vector<TokenId> subtitle;
  std::vector<TokenId> objects;
};

/// Inverse of build() up to truncation.
SegmentContents split_segments(const TokenSequence& seq);

}  // namespace mcvqa::text
