// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/text/sequence.hpp"

#include <algorithm>
#include <array>

#include "mcvqa/error.hpp"

namespace mcvqa::text {
namespace {

using corpus::kCls;
using corpus::kMask;
using corpus::kPad;
using corpus::kSep;

constexpr std::array<SegmentTag, 4> kOrder{SegmentTag::kQuestion, SegmentTag::kAnswer, SegmentTag::kSubtitle,
                                           SegmentTag::kObjects};

TokenSequence assemble(std::array<std::span<const TokenId>, 4> segs, const BuildOptions& options) {
  const std::size_t fixed = 1 + segs.size();
  std::size_t minimum = fixed;
  std::array<std::size_t, 4> keep{};
  std::size_t total = fixed;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    keep[k] = segs[k].size();
    total += keep[k];
    if (!segs[k].empty()) ++minimum;
  }
  if (options.max_len < minimum) {
    throw CapacityError("max length " + std::to_string(options.max_len) + " cannot hold the " +
                        std::to_string(minimum) + " mandatory tokens");
  }
  for (std::size_t k = segs.size(); k-- > 0 && total > options.max_len;) {
    const std::size_t floor = segs[k].empty() ? 0 : 1;
    const std::size_t cut = std::min(keep[k] - floor, total - options.max_len);
    keep[k] -= cut;
    total -= cut;
  }

  TokenSequence seq;
  seq.ids.reserve(options.max_len);
  auto push = [&](TokenId id, std::uint8_t level, SegmentTag tag) {
    seq.ids.push_back(id);
    seq.type_level.push_back(level);
    seq.tags.push_back(tag);
    seq.present.push_back(id != kPad);
  };
  push(kCls, 0, SegmentTag::kSpecial);
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const std::uint8_t level =
        options.multi_token_type ? static_cast<std::uint8_t>(k) : static_cast<std::uint8_t>(k == 0 ? 0 : 3);
    for (std::size_t j = 0; j < keep[k]; ++j) push(segs[k][j], level, kOrder[k]);
    push(kSep, level, SegmentTag::kSpecial);
  }
  while (seq.ids.size() < options.max_len) {
    seq.ids.push_back(kPad);
    seq.type_level.push_back(0);
    seq.tags.push_back(SegmentTag::kSpecial);
    seq.present.push_back(false);
  }
  return seq;
}

}  // namespace

std::size_t TokenSequence::length() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), true));
}

TokenSequence build(const HypothesisParts& parts, const BuildOptions& options) {
  return assemble({parts.question, parts.answer, parts.subtitle, parts.objects}, options);
}

TokenSequence remove_answer(const HypothesisParts& parts, const BuildOptions& options) {
  static constexpr std::array<TokenId, 1> kMaskOnly{kMask};
  return assemble({parts.question, std::span<const TokenId>(kMaskOnly), parts.subtitle, parts.objects}, options);
}

std::vector<double> type_scales(const TokenSequence& seq) {
  std::vector<double> out(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) out[i] = seq.type_scale(i);
  return out;
}

bool maskable(const TokenSequence& seq, std::size_t i) {
  return seq.present[i] && seq.tags[i] != SegmentTag::kSpecial;
}

TokenSequence mask_for_anchor(const TokenSequence& seq, double p, std::mt19937_64& rng) {
  TokenSequence out = seq;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!maskable(out, i)) continue;
    if (coin(rng) < p) out.ids[i] = kMask;
  }
  return out;
}

TokenSequence mask_positions(const TokenSequence& seq, std::span<const std::size_t> positions) {
  TokenSequence out = seq;
  for (std::size_t i : positions) {
    if (i < out.size() && maskable(out, i)) out.ids[i] = kMask;
  }
  return out;
}

SegmentContents split_segments(const TokenSequence& seq) {
  SegmentContents out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    switch (seq.tags[i]) {
      case SegmentTag::kQuestion: out.question.push_back(seq.ids[i]); break;
      case SegmentTag::kAnswer: out.answer.push_back(seq.ids[i]); break;
      case SegmentTag::kSubtitle: out.subtitle.push_back(seq.ids[i]); break;
      case SegmentTag::kObjects: out.objects.push_back(seq.ids[i]); break;
      case SegmentTag::kSpecial: break;
    }
  }
  return out;
}

}  // namespace mcvqa::text
