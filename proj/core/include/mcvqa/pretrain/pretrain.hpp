// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcvqa/corpus/clip.hpp"
#include "mcvqa/model/network.hpp"
#include "mcvqa/text/sequence.hpp"

namespace mcvqa::pretrain {

struct QuestionCandidateSet {
  std::string clip_id;
  std::vector<std::vector<corpus::TokenId>> questions;
  std::size_t correct_index = 0;
};

/// The clip's own question plus `count - 1` distinct questions drawn without
/// replacement from other clips in `pool`, with the positive at a uniformly
/// random position. Throws SamplingError when too few distinct questions exist.
QuestionCandidateSet build_candidates(std::span<const corpus::ClipExample> clips, std::span<const std::size_t> pool,
                                      std::size_t clip, std::mt19937_64& rng, std::size_t count);

/// Answer-removed hypotheses, one per candidate question, in candidate order.
std::vector<text::TokenSequence> candidate_hypotheses(const QuestionCandidateSet& candidates,
                                                      const corpus::ClipExample& clip,
                                                      const text::BuildOptions& options);

/// Model input for question prediction. The anchor masks the true-question
/// hypothesis with probability `mask_p` when `with_anchor` is set.
model::ExampleInput pretrain_input(const QuestionCandidateSet& candidates, const corpus::ClipExample& clip,
                                   const text::BuildOptions& options, bool with_anchor, double mask_p,
                                   std::mt19937_64& rng);

/// Copies every parameter of a checkpoint into a model of `config`. Throws
/// CompatibilityError on an architecture-hash mismatch or missing name.
model::ParameterSet<float> transfer_weights(const model::LoadedCheckpoint& checkpoint,
                                            const model::ModelConfig& config);

}  // namespace mcvqa::pretrain
