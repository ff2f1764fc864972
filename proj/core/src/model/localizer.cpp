// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/model/localizer.hpp"

#include <algorithm>

#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/error.hpp"

namespace mcvqa::model {

void declare_localizer(ParameterSet<float>& params, const ModelConfig& c, std::mt19937_64& rng) {
  for (const char* head : {"span.start", "span.end"}) {
    params.add_uniform(std::string(head) + ".w", {2 * c.d_text, 1}, c.init_range, rng);
    params.add_uniform(std::string(head) + ".b", {1}, c.init_range, rng);
  }
}

template <typename Real>
SpanProbs<Real> span_logits(const Bound<Real>& p, Var<Real> text_sequence) {
  const std::size_t n = text_sequence.dim(0);
  const std::size_t t = text_sequence.dim(1);
  auto head = [&](const char* name) {
    const std::string prefix(name);
    const Var<Real> logits = ad::add(ad::matmul(text_sequence, p(prefix + ".w")), p(prefix + ".b"));
    return ad::softmax(ad::max_pool(ad::reshape(logits, {n, t}), 0), 0);
  };
  return {head("span.start"), head("span.end")};
}

template <typename Real>
Var<Real> span_loss(const SpanProbs<Real>& probs, const Span& truth) {
  if (truth.start > truth.end || truth.end >= probs.start.value().size()) {
    throw ValidationError("span [" + std::to_string(truth.start) + ", " + std::to_string(truth.end) +
                          "] outside " + std::to_string(probs.start.value().size()) + " segments");
  }
  const std::vector<Var<Real>> terms{ad::cross_entropy(probs.start, truth.start),
                                     ad::cross_entropy(probs.end, truth.end)};
  const std::vector<double> weights{0.5, 0.5};
  return ad::weighted_sum<Real>(terms, weights);
}

Span decode_span(std::span<const double> start, std::span<const double> end) {
  if (start.empty() || start.size() != end.size()) throw DimensionError("decode_span: mismatched inputs");
  Span best{0, 0};
  double best_score = -1.0;
  for (std::size_t s = 0; s < start.size(); ++s) {
    for (std::size_t e = s; e < end.size(); ++e) {
      const double score = start[s] * end[e];
      if (score > best_score) {
        best_score = score;
        best = {s, e};
      }
    }
  }
  return best;
}

double iou(const Span& a, const Span& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  const double inter = hi >= lo ? static_cast<double>(hi - lo + 1) : 0.0;
  const double uni = static_cast<double>(a.length() + b.length()) - inter;
  return inter / uni;
}

bool asa(bool answer_correct, double iou_value) { return answer_correct && iou_value >= 0.5; }

double mean_iou(std::span<const Span> predicted, std::span<const Span> truth) {
  if (predicted.size() != truth.size()) throw DimensionError("mean_iou: mismatched counts");
  if (predicted.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) total += iou(predicted[i], truth[i]);
  return total / static_cast<double>(predicted.size());
}

template SpanProbs<float> span_logits(const Bound<float>&, Var<float>);
template SpanProbs<double> span_logits(const Bound<double>&, Var<double>);
template Var<float> span_loss(const SpanProbs<float>&, const Span&);
template Var<double> span_loss(const SpanProbs<double>&, const Span&);

}  // namespace mcvqa::model
