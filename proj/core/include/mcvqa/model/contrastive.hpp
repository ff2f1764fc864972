// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "mcvqa/model/parameters.hpp"
#include "mcvqa/text/sequence.hpp"

namespace mcvqa::model {

/// Masked ground-truth hypothesis, T sequences, through the shared encoder,
/// text BiGRU and max-pool: [1, 2 d_text].
template <typename Real>
Var<Real> encode_anchor(const Bound<Real>& p, std::span<const text::TokenSequence> masked);

/// Plain dot products of each pooled hypothesis [N, 2d] with the anchor [1, 2d]: [N].
template <typename Real>
Var<Real> contrastive_scores(Var<Real> pooled_text, Var<Real> anchor);

/// Softmax cross-entropy of the scores against the positive row.
template <typename Real>
Var<Real> contrastive_loss(Var<Real> scores, std::size_t positive);

struct Separation {
  double euclidean = 0.0;
  double cosine = 0.0;
};

/// Distance from the positive row to its nearest negative, per metric.
/// `rows` is [N][dim]. Cosine distance is 1 - cos; a zero-norm row makes it
/// 1 with a logged warning.
Separation nearest_negative(const std::vector<std::vector<double>>& rows, std::size_t positive);

/// Mean of nearest_negative over a set of examples.
Separation separation_report(std::span<const std::vector<std::vector<double>>> examples,
                             std::span<const std::size_t> positives);

}  // namespace mcvqa::model
