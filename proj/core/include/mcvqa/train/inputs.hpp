// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "mcvqa/corpus/clip.hpp"
#include "mcvqa/model/network.hpp"
#include "mcvqa/text/sequence.hpp"
#include "mcvqa/train/config.hpp"

namespace mcvqa::train {

text::BuildOptions build_options(const TrainConfig& config);

/// N * T hypotheses of a clip, one per answer option and segment. With
/// `with_anchor` the ground-truth hypothesis is masked into the anchor.
model::ExampleInput qa_input(const corpus::ClipExample& clip, const text::BuildOptions& options, bool with_anchor,
                             double mask_p, std::mt19937_64& rng);

}  // namespace mcvqa::train
