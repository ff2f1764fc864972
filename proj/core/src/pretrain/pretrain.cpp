// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/pretrain/pretrain.hpp"

#include <algorithm>

#include "mcvqa/error.hpp"

namespace mcvqa::pretrain {

QuestionCandidateSet build_candidates(std::span<const corpus::ClipExample> clips, std::span<const std::size_t> pool,
                                      std::size_t clip, std::mt19937_64& rng, std::size_t count) {
  const auto& self = clips[clip];
  QuestionCandidateSet out;
  out.clip_id = self.clip_id;

  std::vector<std::size_t> others;
  others.reserve(pool.size());
  for (std::size_t k : pool) {
    if (k != clip && clips[k].clip_id != self.clip_id) others.push_back(k);
  }
  std::vector<std::vector<corpus::TokenId>> negatives;
  // Partial Fisher-Yates: each draw removes the chosen clip from the pool.
  for (std::size_t i = 0; i < others.size() && negatives.size() + 1 < count; ++i) {
    const std::size_t j = i + std::uniform_int_distribution<std::size_t>(0, others.size() - 1 - i)(rng);
    std::swap(others[i], others[j]);
    const auto& q = clips[others[i]].question;
    const bool duplicate = q == self.question || std::find(negatives.begin(), negatives.end(), q) != negatives.end();
    if (!duplicate) negatives.push_back(q);
  }
  if (negatives.size() + 1 < count) {
    throw SamplingError("clip '" + self.clip_id + "': only " + std::to_string(negatives.size()) +
                        " distinct negative questions available, need " + std::to_string(count - 1));
  }
  out.correct_index = std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
  out.questions = std::move(negatives);
  out.questions.insert(out.questions.begin() + static_cast<std::ptrdiff_t>(out.correct_index), self.question);
  return out;
}

std::vector<text::TokenSequence> candidate_hypotheses(const QuestionCandidateSet& candidates,
                                                      const corpus::ClipExample& clip,
                                                      const text::BuildOptions& options) {
  std::vector<text::TokenSequence> out;
  out.reserve(candidates.questions.size() * clip.segment_count());
  for (const auto& q : candidates.questions) {
    for (std::size_t t = 0; t < clip.segment_count(); ++t) {
      out.push_back(text::remove_answer({q, {}, clip.subtitles[t].tokens, clip.objects[t]}, options));
    }
  }
  return out;
}

model::ExampleInput pretrain_input(const QuestionCandidateSet& candidates, const corpus::ClipExample& clip,
                                   const text::BuildOptions& options, bool with_anchor, double mask_p,
                                   std::mt19937_64& rng) {
  model::ExampleInput input;
  input.hypotheses = candidate_hypotheses(candidates, clip, options);
  input.clip = &clip;
  input.target = candidates.correct_index;
  input.span = clip.span;
  if (with_anchor) {
    const std::size_t segments = clip.segment_count();
    for (std::size_t t = 0; t < segments; ++t) {
      input.anchor.push_back(
          text::mask_for_anchor(input.hypotheses[candidates.correct_index * segments + t], mask_p, rng));
    }
  }
  return input;
}

model::ParameterSet<float> transfer_weights(const model::LoadedCheckpoint& checkpoint,
                                            const model::ModelConfig& config) {
  if (checkpoint.header.architecture_hash != model::architecture_hash(config)) {
    throw CompatibilityError("checkpoint architecture " + checkpoint.header.architecture_hash +
                             " does not match model " + model::architecture_hash(config));
  }
  model::ParameterSet<float> params = model::init_parameters(config, 0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    if (!checkpoint.params.contains(name)) throw CompatibilityError("checkpoint lacks parameter '" + name + "'");
    const auto& src = checkpoint.params.at(name);
    if (src.shape() != params[i].shape()) {
      throw CompatibilityError("parameter '" + name + "' has shape " + ad::shape_string(src.shape()) +
                               ", expected " + ad::shape_string(params[i].shape()));
    }
    params[i] = src;
  }
  return params;
}

}  // namespace mcvqa::pretrain
