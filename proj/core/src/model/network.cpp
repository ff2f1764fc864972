// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/model/network.hpp"

#include <random>

#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/error.hpp"
#include "mcvqa/model/contrastive.hpp"
#include "mcvqa/model/encoder.hpp"

namespace mcvqa::model {

ParameterSet<float> init_parameters(const ModelConfig& config, std::uint64_t seed) {
  if (config.vocab_size == 0 || config.d_text == 0 || config.d_visual == 0 || config.max_len == 0) {
    throw ValidationError("model dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  ParameterSet<float> params;
  declare_encoder(params, config, rng);
  declare_attention(params, config, rng);
  declare_qa_head(params, config, rng);
  declare_localizer(params, config, rng);
  return params;
}

template <typename Real>
ForwardResult<Real> forward(const Bound<Real>& p, const ModelConfig& config, const ExampleInput& input,
                            const ForwardOptions& options) {
  auto& g = p.graph();
  if (input.clip == nullptr) throw ValidationError("forward: missing clip");
  const std::size_t segments = input.clip->segment_count();
  if (segments == 0 || input.hypotheses.size() % segments != 0) {
    throw DimensionError("forward: " + std::to_string(input.hypotheses.size()) + " sequences for " +
                         std::to_string(segments) + " segments");
  }
  const std::size_t options_count = input.hypotheses.size() / segments;
  if (input.target >= options_count) throw ValidationError("forward: target outside the answer options");

  const Var<Real> encoded = encode_text(p, input.hypotheses);
  const Var<Real> text = ad::reshape(encoded, {options_count, segments, encoded.dim(1)});
  const Var<Real> frames = g.constant(encode_visual<Real>(*input.clip, options_count));

  ForwardResult<Real> out{};
  out.attention = attend(config.attention, frames, text, p("attention.projection"));
  out.text_sequence = bigru_sequence(p, "text_gru", text);
  const Var<Real> visual_sequence = bigru_sequence(p, "visual_gru", out.attention.output);
  out.pooled_text = pooled_hypotheses(out.text_sequence);
  const QaLoss<Real> qa = qa_loss(qa_logits(p, pooled_hypotheses(visual_sequence), out.pooled_text), input.target);
  out.probs = qa.probs;
  out.qa_loss = qa.loss;

  if (options.span_heads) {
    out.span = span_logits(p, out.text_sequence);
    if (input.span) out.span_loss = span_loss(*out.span, *input.span);
  }
  if (options.contrastive && !input.anchor.empty()) {
    const Var<Real> anchor = encode_anchor(p, input.anchor);
    out.contrastive_loss = contrastive_loss(contrastive_scores(out.pooled_text, anchor), input.target);
  }
  return out;
}

template ForwardResult<float> forward(const Bound<float>&, const ModelConfig&, const ExampleInput&,
                                      const ForwardOptions&);
template ForwardResult<double> forward(const Bound<double>&, const ModelConfig&, const ExampleInput&,
                                       const ForwardOptions&);

}  // namespace mcvqa::model
