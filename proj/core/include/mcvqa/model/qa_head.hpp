// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "mcvqa/model/config.hpp"
#include "mcvqa/model/parameters.hpp"

namespace mcvqa::model {

/// Declares `<prefix>.fw` and `<prefix>.bw` GRU cells. Each cell has
/// `input` [d_in, 3h], `hidden` [h, 3h] and `bias` [3h], with column blocks
/// ordered update, reset, candidate.
void declare_bigru(ParameterSet<float>& params, const std::string& prefix, std::size_t d_in, std::size_t hidden,
                   double range, std::mt19937_64& rng);

/// Two layers: `<prefix>.w1` [d_in, h], `b1` [h], `w2` [h, 1], `b2` [1].
void declare_classifier(ParameterSet<float>& params, const std::string& prefix, std::size_t d_in,
                        std::size_t hidden, double range, std::mt19937_64& rng);

/// All QA-head parameters: text and visual BiGRUs and classifiers.
void declare_qa_head(ParameterSet<float>& params, const ModelConfig& config, std::mt19937_64& rng);

/// One GRU direction over x [N, T, d_in], zero initial state:
///   z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br)
///   c = tanh(x Wc + (r * h) Uc + bc), h' = (1 - z) * h + z * c
/// Returns [N, T, h] in input time order.
template <typename Real>
Var<Real> gru_sequence(const Bound<Real>& p, const std::string& prefix, Var<Real> x, bool reverse);

/// Forward and backward outputs concatenated per position: [N, T, 2h].
template <typename Real>
Var<Real> bigru_sequence(const Bound<Real>& p, const std::string& prefix, Var<Real> x);

/// Max over the T axis: [N, T, 2h] -> [N, 2h].
template <typename Real>
Var<Real> pooled_hypotheses(Var<Real> sequence);

/// One logit per row: [N, d_in] -> [N].
template <typename Real>
Var<Real> classify(const Bound<Real>& p, const std::string& prefix, Var<Real> pooled);

template <typename Real>
struct QaLogits {
  Var<Real> visual;
  Var<Real> text;
};

template <typename Real>
QaLogits<Real> qa_logits(const Bound<Real>& p, Var<Real> pooled_visual, Var<Real> pooled_text);

template <typename Real>
struct QaLoss {
  /// Answer distribution softmax(s_v + s_t), [N].
  Var<Real> probs;
  Var<Real> loss;
};

template <typename Real>
QaLoss<Real> qa_loss(QaLogits<Real> logits, std::size_t correct_index);

}  // namespace mcvqa::model
