// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "mcvqa/corpus/clip.hpp"
#include "mcvqa/model/config.hpp"
#include "mcvqa/model/parameters.hpp"

namespace mcvqa::model {

using corpus::Span;

/// `span.start.{w,b}` and `span.end.{w,b}`: linear maps 2 d_text -> 1.
void declare_localizer(ParameterSet<float>& params, const ModelConfig& config, std::mt19937_64& rng);

template <typename Real>
struct SpanProbs {
  /// [T] each.
  Var<Real> start;
  Var<Real> end;
};

/// Per-position logits from the text sequence [N, T, 2 d_text], max-pooled
/// over the N hypotheses and softmaxed over T.
template <typename Real>
SpanProbs<Real> span_logits(const Bound<Real>& p, Var<Real> text_sequence);

/// -0.5 * (log start[s] + log end[e]).
template <typename Real>
Var<Real> span_loss(const SpanProbs<Real>& probs, const Span& truth);

/// argmax over s <= e of start[s] * end[e]; ties go to smaller s, then e.
Span decode_span(std::span<const double> start, std::span<const double> end);

/// Inclusive intersection-over-union in segment units.
double iou(const Span& a, const Span& b);

/// Correct answer and IoU >= 0.5.
bool asa(bool answer_correct, double iou_value);

double mean_iou(std::span<const Span> predicted, std::span<const Span> truth);

}  // namespace mcvqa::model
