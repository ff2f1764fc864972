// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/train/inputs.hpp"

namespace mcvqa::train {

text::BuildOptions build_options(const TrainConfig& config) {
  text::BuildOptions options;
  options.max_len = config.max_len;
  options.multi_token_type = config.use_multi_token_type;
  return options;
}

model::ExampleInput qa_input(const corpus::ClipExample& clip, const text::BuildOptions& options, bool with_anchor,
                             double mask_p, std::mt19937_64& rng) {
  const std::size_t segments = clip.segment_count();
  model::ExampleInput input;
  input.clip = &clip;
  input.target = clip.correct_index;
  input.span = clip.span;
  input.hypotheses.reserve(clip.answers.size() * segments);
  for (const auto& answer : clip.answers) {
    for (std::size_t t = 0; t < segments; ++t) {
      input.hypotheses.push_back(text::build({clip.question, answer, clip.subtitles[t].tokens, clip.objects[t]}, options));
    }
  }
  if (with_anchor) {
    for (std::size_t t = 0; t < segments; ++t) {
      input.anchor.push_back(text::mask_for_anchor(input.hypotheses[clip.correct_index * segments + t], mask_p, rng));
    }
  }
  return input;
}

}  // namespace mcvqa::train
