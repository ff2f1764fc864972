// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/model/contrastive.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>

#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/error.hpp"
#include "mcvqa/model/encoder.hpp"
#include "mcvqa/model/qa_head.hpp"

namespace mcvqa::model {

template <typename Real>
Var<Real> encode_anchor(const Bound<Real>& p, std::span<const text::TokenSequence> masked) {
  const Var<Real> encoded = encode_text(p, masked);
  const Var<Real> seq = ad::reshape(encoded, {1, masked.size(), encoded.dim(1)});
  return pooled_hypotheses(bigru_sequence(p, "text_gru", seq));
}

template <typename Real>
Var<Real> contrastive_scores(Var<Real> pooled_text, Var<Real> anchor) {
  if (anchor.value().rank() != 2 || anchor.dim(0) != 1 || anchor.dim(1) != pooled_text.dim(1)) {
    throw DimensionError("contrastive_scores: anchor " + ad::shape_string(anchor.shape()) + " does not match " +
                         ad::shape_string(pooled_text.shape()));
  }
  return ad::reshape(ad::matmul(pooled_text, ad::transpose(anchor)), {pooled_text.dim(0)});
}

template <typename Real>
Var<Real> contrastive_loss(Var<Real> scores, std::size_t positive) {
  return ad::cross_entropy(ad::softmax(scores, 0), positive);
}

Separation nearest_negative(const std::vector<std::vector<double>>& rows, std::size_t positive) {
  if (positive >= rows.size() || rows.size() < 2) throw DimensionError("nearest_negative: need a positive and a negative");
  const auto& pos = rows[positive];
  double pos_norm = 0.0;
  for (double v : pos) pos_norm += v * v;
  pos_norm = std::sqrt(pos_norm);

  Separation out{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k == positive) continue;
    const auto& neg = rows[k];
    if (neg.size() != pos.size()) throw DimensionError("nearest_negative: rows differ in length");
    double sq = 0.0, dot = 0.0, neg_norm = 0.0;
    for (std::size_t j = 0; j < pos.size(); ++j) {
      const double diff = pos[j] - neg[j];
      sq += diff * diff;
      dot += pos[j] * neg[j];
      neg_norm += neg[j] * neg[j];
    }
    neg_norm = std::sqrt(neg_norm);
    double cosine = 1.0;
    if (pos_norm == 0.0 || neg_norm == 0.0) {
      spdlog::warn("cosine distance on a zero-norm representation; using 1");
    } else {
      cosine = 1.0 - dot / (pos_norm * neg_norm);
    }
    out.euclidean = std::min(out.euclidean, std::sqrt(sq));
    out.cosine = std::min(out.cosine, cosine);
  }
  return out;
}

Separation separation_report(std::span<const std::vector<std::vector<double>>> examples,
                             std::span<const std::size_t> positives) {
  if (examples.size() != positives.size()) throw DimensionError("separation_report: mismatched counts");
  Separation mean;
  if (examples.empty()) return mean;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Separation s = nearest_negative(examples[i], positives[i]);
    mean.euclidean += s.euclidean;
    mean.cosine += s.cosine;
  }
  mean.euclidean /= static_cast<double>(examples.size());
  mean.cosine /= static_cast<double>(examples.size());
  return mean;
}

template Var<float> encode_anchor(const Bound<float>&, std::span<const text::TokenSequence>);
template Var<double> encode_anchor(const Bound<double>&, std::span<const text::TokenSequence>);
template Var<float> contrastive_scores(Var<float>, Var<float>);
template Var<double> contrastive_scores(Var<double>, Var<double>);
template Var<float> contrastive_loss(Var<float>, std::size_t);
template Var<double> contrastive_loss(Var<double>, std::size_t);

}  // namespace mcvqa::model
