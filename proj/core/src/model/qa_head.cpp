// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/model/qa_head.hpp"

#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/error.hpp"

namespace mcvqa::model {

void declare_bigru(ParameterSet<float>& params, const std::string& prefix, std::size_t d_in, std::size_t hidden,
                   double range, std::mt19937_64& rng) {
  for (const char* dir : {".fw", ".bw"}) {
    params.add_uniform(prefix + dir + ".input", {d_in, 3 * hidden}, range, rng);
    params.add_uniform(prefix + dir + ".hidden", {hidden, 3 * hidden}, range, rng);
    params.add_uniform(prefix + dir + ".bias", {3 * hidden}, range, rng);
  }
}

void declare_classifier(ParameterSet<float>& params, const std::string& prefix, std::size_t d_in,
                        std::size_t hidden, double range, std::mt19937_64& rng) {
  params.add_uniform(prefix + ".w1", {d_in, hidden}, range, rng);
  params.add_uniform(prefix + ".b1", {hidden}, range, rng);
  params.add_uniform(prefix + ".w2", {hidden, 1}, range, rng);
  params.add_uniform(prefix + ".b2", {1}, range, rng);
}

void declare_qa_head(ParameterSet<float>& params, const ModelConfig& c, std::mt19937_64& rng) {
  declare_bigru(params, "text_gru", c.d_text, c.d_text, c.init_range, rng);
  declare_bigru(params, "visual_gru", c.d_text, c.d_text, c.init_range, rng);
  declare_classifier(params, "text_classifier", 2 * c.d_text, c.d_text, c.init_range, rng);
  declare_classifier(params, "visual_classifier", 2 * c.d_text, c.d_text, c.init_range, rng);
}

template <typename Real>
Var<Real> gru_sequence(const Bound<Real>& p, const std::string& prefix, Var<Real> x, bool reverse) {
  auto& g = p.graph();
  if (x.value().rank() != 3 || x.dim(1) == 0) {
    throw DimensionError("gru_sequence: expected [N, T, d] input, got " + ad::shape_string(x.shape()));
  }
  const Var<Real> w = p(prefix + ".input");
  const Var<Real> u = p(prefix + ".hidden");
  const Var<Real> b = p(prefix + ".bias");
  const std::size_t n = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t h = u.dim(0);

  const Var<Real> xp = ad::add(ad::matmul(x, w), b);
  const Var<Real> u_gates = ad::slice(u, 1, 0, 2 * h);
  const Var<Real> u_cand = ad::slice(u, 1, 2 * h, 3 * h);

  Var<Real> state = g.constant(Tensor<Real>(Shape{n, h}));
  std::vector<Var<Real>> outputs(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    const Var<Real> xt = ad::reshape(ad::slice(xp, 1, t, t + 1), {n, 3 * h});
    const Var<Real> gates = ad::sigmoid(ad::add(ad::slice(xt, 1, 0, 2 * h), ad::matmul(state, u_gates)));
    const Var<Real> z = ad::slice(gates, 1, 0, h);
    const Var<Real> r = ad::slice(gates, 1, h, 2 * h);
    const Var<Real> cand = ad::tanh(ad::add(ad::slice(xt, 1, 2 * h, 3 * h), ad::matmul(ad::mul(r, state), u_cand)));
    state = ad::add(state, ad::mul(z, ad::sub(cand, state)));
    outputs[t] = ad::reshape(state, {n, 1, h});
  }
  return steps == 1 ? outputs[0] : ad::concat<Real>(outputs, 1);
}

template <typename Real>
Var<Real> bigru_sequence(const Bound<Real>& p, const std::string& prefix, Var<Real> x) {
  std::vector<Var<Real>> both{gru_sequence(p, prefix + ".fw", x, false), gru_sequence(p, prefix + ".bw", x, true)};
  return ad::concat<Real>(both, 2);
}

template <typename Real>
Var<Real> pooled_hypotheses(Var<Real> sequence) {
  return ad::max_pool(sequence, 1);
}

template <typename Real>
Var<Real> classify(const Bound<Real>& p, const std::string& prefix, Var<Real> pooled) {
  const Var<Real> hidden = ad::tanh(ad::add(ad::matmul(pooled, p(prefix + ".w1")), p(prefix + ".b1")));
  const Var<Real> logit = ad::add(ad::matmul(hidden, p(prefix + ".w2")), p(prefix + ".b2"));
  return ad::reshape(logit, {pooled.dim(0)});
}

template <typename Real>
QaLogits<Real> qa_logits(const Bound<Real>& p, Var<Real> pooled_visual, Var<Real> pooled_text) {
  return {classify(p, "visual_classifier", pooled_visual), classify(p, "text_classifier", pooled_text)};
}

template <typename Real>
QaLoss<Real> qa_loss(QaLogits<Real> logits, std::size_t correct_index) {
  const Var<Real> probs = ad::softmax(ad::add(logits.visual, logits.text), 0);
  return {probs, ad::cross_entropy(probs, correct_index)};
}

#define MCVQA_INSTANTIATE(Real)                                                                         \
  template Var<Real> gru_sequence(const Bound<Real>&, const std::string&, Var<Real>, bool);             \
  template Var<Real> bigru_sequence(const Bound<Real>&, const std::string&, Var<Real>);                 \
  template Var<Real> pooled_hypotheses(Var<Real>);                                                      \
  template Var<Real> classify(const Bound<Real>&, const std::string&, Var<Real>);                       \
  template QaLogits<Real> qa_logits(const Bound<Real>&, Var<Real>, Var<Real>);                          \
  template QaLoss<Real> qa_loss(QaLogits<Real>, std::size_t);
MCVQA_INSTANTIATE(float)
MCVQA_INSTANTIATE(double)
#undef MCVQA_INSTANTIATE

}  // namespace mcvqa::model
