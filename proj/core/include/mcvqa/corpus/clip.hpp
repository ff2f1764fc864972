// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcvqa/corpus/vocabulary.hpp"

namespace mcvqa::corpus {

struct SubtitleSegment {
  std::vector<TokenId> tokens;
  double start_time = 0.0;
  double end_time = 0.0;

  bool operator==(const SubtitleSegment&) const = default;
};

/// Per-segment frame vectors, stored [segment][frame][dim] row-major.
struct FrameFeatures {
  std::size_t segments = 0;
  std::size_t per_segment = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  std::span<const float> frame(std::size_t t, std::size_t i) const {
    return std::span<const float>(values).subspan((t * per_segment + i) * dim, dim);
  }
  std::span<float> frame(std::size_t t, std::size_t i) {
    return std::span<float>(values).subspan((t * per_segment + i) * dim, dim);
  }

  bool operator==(const FrameFeatures&) const = default;
};

/// Inclusive segment-index range.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool operator==(const Span&) const = default;
};

struct ClipExample {
  std::string clip_id;
  std::vector<SubtitleSegment> subtitles;
  FrameFeatures frames;
  /// Object words per segment, frame-major then detection order.
  std::vector<std::vector<TokenId>> objects;
  std::vector<TokenId> question;
  std::vector<std::vector<TokenId>> answers;
  std::size_t correct_index = 0;
  std::optional<Span> span;

  std::size_t segment_count() const { return subtitles.size(); }
  bool operator==(const ClipExample&) const = default;
};

struct Dataset {
  Vocabulary vocab;
  std::vector<ClipExample> clips;
};

struct ClipLimits {
  std::size_t options = 5;
  /// Zero accepts any positive count.
  std::size_t segments = 0;
  std::size_t frames_per_segment = 0;
  std::size_t frame_dim = 0;
};

/// Throws ValidationError naming the clip when an invariant fails.
void validate(const ClipExample& clip, const ClipLimits& limits = {});

/// Reads one clip per line. Unknown tokens map to kUnk unless `extend_vocab`
/// is set, in which case they are appended to the vocabulary.
std::vector<ClipExample> load_jsonl(const std::filesystem::path& path, Vocabulary& vocab,
                                    bool extend_vocab, const ClipLimits& limits = {});

/// Loads a dataset, building the vocabulary from the file itself.
Dataset load_dataset(const std::filesystem::path& path, const ClipLimits& limits = {});

void save_jsonl(const std::filesystem::path& path, std::span<const ClipExample> clips,
                const Vocabulary& vocab);

/// Deterministic split: a clip goes to validation when the FNV-1a hash of its
/// id falls in the lowest `fraction` of the hash range.
bool in_validation_split(const std::string& clip_id, double fraction = 0.1);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Split split_by_hash(std::span<const ClipExample> clips, double fraction = 0.1);

}  // namespace mcvqa::corpus
