// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mcvqa/corpus/clip.hpp"
#include "mcvqa/model/attention.hpp"
#include "mcvqa/model/config.hpp"
#include "mcvqa/model/localizer.hpp"
#include "mcvqa/model/parameters.hpp"
#include "mcvqa/model/qa_head.hpp"
#include "mcvqa/text/sequence.hpp"

namespace mcvqa::model {

/// Every parameter of the model, seeded uniform(-r, r) in a fixed order.
ParameterSet<float> init_parameters(const ModelConfig& config, std::uint64_t seed);

/// Model inputs for one clip.
struct ExampleInput {
  /// N * T sequences, hypothesis-major: index n * T + t.
  std::vector<text::TokenSequence> hypotheses;
  const corpus::ClipExample* clip = nullptr;
  std::size_t target = 0;
  std::optional<Span> span;
  /// Masked ground-truth hypothesis, T sequences; empty when unused.
  std::vector<text::TokenSequence> anchor;
};

struct ForwardOptions {
  bool span_heads = false;
  bool contrastive = false;
};

template <typename Real>
struct ForwardResult {
  Var<Real> probs;
  Var<Real> qa_loss;
  /// [N, 2 d_text]
  Var<Real> pooled_text;
  /// [N, T, 2 d_text]
  Var<Real> text_sequence;
  Attended<Real> attention;
  std::optional<SpanProbs<Real>> span;
  std::optional<Var<Real>> span_loss;
  std::optional<Var<Real>> contrastive_loss;
};

/// QA path, plus span heads and the contrastive anchor when enabled. Nothing
/// is built for a disabled component.
template <typename Real>
ForwardResult<Real> forward(const Bound<Real>& params, const ModelConfig& config, const ExampleInput& input,
                            const ForwardOptions& options);

}  // namespace mcvqa::model
