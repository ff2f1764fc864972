// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcvqa/corpus/clip.hpp"

namespace mcvqa::corpus {

enum class Profile { kTextOnly, kVisualLocal, kMixed };

const char* to_string(Profile profile);
Profile profile_from_string(const std::string& name);

struct GeneratorConfig {
  std::size_t segments = 6;
  std::size_t frames_per_segment = 4;
  std::size_t frame_dim = 48;
  std::size_t options = 5;
  double noise_sigma = 0.1;
};

/// Fixed orthonormal feature directions shared by every generated clip.
///
/// A planted fact (entity, action, location) shows up visually as an event
/// frame: the event marker plus the location's direction. Plain frames carry
/// a location direction alone; background frames carry clutter.
class Codebook {
 public:
  explicit Codebook(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::span<const double> event_marker() const;
  std::span<const double> location(std::size_t k) const;
  std::span<const double> clutter(std::size_t k) const;
  std::size_t clutter_count() const;

 private:
  std::span<const double> row(std::size_t k) const;

  std::size_t dim_;
  std::vector<double> rows_;
};

/// Word lists of the synthetic world.
struct World {
  static const std::vector<std::string>& entities();
  static const std::vector<std::string>& actions();
  static const std::vector<std::string>& locations();
  static const std::vector<std::string>& fillers();
  static const std::vector<std::string>& objects();
  static const std::vector<std::string>& function_words();
};

/// Vocabulary holding every word the generator can emit, in a fixed order.
Vocabulary synthetic_vocabulary();

/// Planted-answer dataset, deterministic in (seed, n_clips, profile, config).
///
/// Each clip asks "where does <entity> <action> ?" and offers five
/// "<entity> <action> at <location>" options. One segment t* holds the
/// evidence. Under `text_only` the subtitle of t* states the fact and other
/// segments state facts about other entities at the distractor locations.
/// Under `visual_local` the subtitle of t* names only the entity and action;
/// its frames hold the event frame for the correct location. Four other
/// segments each hold one distractor's event frame under a subtitle naming a
/// different entity, and any remaining segment holds an event at a location
/// no option mentions. Every option's location thus appears exactly once per
/// clip, and only the subtitle of its segment tells them apart. Plain frames
/// carry locations no option mentions. `mixed`
/// draws either profile per clip with equal probability.
Dataset generate_synthetic(std::uint64_t seed, std::size_t n_clips, Profile profile,
                           const GeneratorConfig& config = {});

/// Profile each clip of generate_synthetic was drawn with, by clip id suffix.
Profile clip_profile(const ClipExample& clip);

/// Scores each answer option from frame evidence alone, restricted to the
/// segments whose subtitle names the question's entity and action: the best
/// frame's projection onto the event marker plus onto the option's location.
std::vector<double> codebook_answer_scores(const ClipExample& clip, const Vocabulary& vocab,
                                           const Codebook& codebook);

/// Whether the frame carries the planted event for `location` (both the
/// marker and the location projections above 0.5).
bool frame_shows_event(std::span<const float> frame, const Codebook& codebook, std::size_t location);

}  // namespace mcvqa::corpus
