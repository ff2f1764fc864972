// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mcvqa/model/config.hpp"
#include "mcvqa/model/parameters.hpp"

namespace mcvqa::model {

/// Projection from frame space into text space, [d_visual, d_text].
void declare_attention(ParameterSet<float>& params, const ModelConfig& config, std::mt19937_64& rng);

template <typename Real>
struct Attended {
  /// [N, T, d_text]
  Var<Real> output;
  /// Local: [N * T, I]. Global: [N, T, T * I].
  Var<Real> weights;
};

/// For each (n, t): project segment t's frames into text space, score each
/// against text[n, t] by dot product, softmax over those I frames only, and
/// return the weighted sum of projected frames.
///
/// `frames` is [N, T, I, d_visual], `text` is [N, T, d_text] and
/// `projection` is [d_visual, d_text]. Non-finite scores raise NumericError
/// naming (n, t, i).
template <typename Real>
Attended<Real> local_attend(Var<Real> frames, Var<Real> text, Var<Real> projection);

/// As local_attend, but every (n, t) scores all T * I frames of the clip.
template <typename Real>
Attended<Real> global_attend(Var<Real> frames, Var<Real> text, Var<Real> projection);

template <typename Real>
Attended<Real> attend(AttentionMode mode, Var<Real> frames, Var<Real> text, Var<Real> projection);

}  // namespace mcvqa::model
