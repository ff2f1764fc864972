// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/model/encoder.hpp"

#include <algorithm>

#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/error.hpp"

namespace mcvqa::model {

void declare_encoder(ParameterSet<float>& params, const ModelConfig& c, std::mt19937_64& rng) {
  params.add_uniform("encoder.token", {c.vocab_size, c.d_text}, c.init_range, rng);
  params.add_uniform("encoder.type0", {c.d_text}, c.init_range, rng);
  params.add_uniform("encoder.type1", {c.d_text}, c.init_range, rng);
  params.add_uniform("encoder.position", {c.max_len, c.d_text}, c.init_range, rng);
  if (c.self_attention) {
    params.add_uniform("encoder.value", {c.d_text, c.d_text}, c.init_range, rng);
    params.add("encoder.scale", Tensor<float>::scalar(static_cast<float>(c.attention_scale)));
  }
}

namespace {

std::size_t common_length(std::span<const text::TokenSequence> seqs) {
  std::size_t len = 1;
  for (const auto& s : seqs) {
    std::size_t last = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.present[i]) last = i + 1;
    }
    len = std::max(len, last);
  }
  return len;
}

}  // namespace

template <typename Real>
Var<Real> embed_tokens(const Bound<Real>& p, std::span<const text::TokenSequence> seqs) {
  auto& g = p.graph();
  const Var<Real> table = p("encoder.token");
  const Var<Real> position = p("encoder.position");
  const std::size_t d = table.dim(1);
  const std::size_t len = common_length(seqs);
  if (len > position.dim(0)) {
    throw DimensionError("sequence length " + std::to_string(len) + " exceeds position table " +
                         std::to_string(position.dim(0)));
  }

  std::vector<std::size_t> ids;
  ids.reserve(seqs.size() * len);
  Tensor<Real> mix(Shape{seqs.size() * len, 2});
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    for (std::size_t i = 0; i < len; ++i) {
      ids.push_back(seqs[s].ids[i]);
      const std::uint8_t level = seqs[s].type_level[i];
      const std::size_t row = s * len + i;
      if (level == 0) {
        mix[row * 2] = Real(1);
      } else {
        mix[row * 2 + 1] = static_cast<Real>(level) / Real(3);
      }
    }
  }

  std::vector<Var<Real>> rows{ad::reshape(p("encoder.type0"), {1, d}), ad::reshape(p("encoder.type1"), {1, d})};
  const Var<Real> types = ad::matmul(g.constant(std::move(mix)), ad::concat<Real>(rows, 0));
  const Var<Real> tokens = ad::embedding(table, std::span<const std::size_t>(ids));
  const Var<Real> x = ad::reshape(ad::add(tokens, types), {seqs.size(), len, d});
  return ad::add(x, len == position.dim(0) ? position : ad::slice(position, 0, 0, len));
}

template <typename Real>
Var<Real> encode_text(const Bound<Real>& p, std::span<const text::TokenSequence> seqs) {
  if (seqs.empty()) throw DimensionError("encode_text: no sequences");
  auto& g = p.graph();
  const std::size_t len = common_length(seqs);
  const std::size_t count = seqs.size();
  Var<Real> x = embed_tokens(p, seqs);
  const std::size_t d = x.dim(2);

  if (p.has("encoder.value")) {
    std::vector<std::size_t> ids;
    ids.reserve(count * len);
    Tensor<Real> mask(Shape{count, len, len});
    constexpr Real kBlocked = Real(-1e9);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t i = 0; i < len; ++i) ids.push_back(seqs[s].ids[i]);
      for (std::size_t q = 0; q < len; ++q) {
        for (std::size_t k = 0; k < len; ++k) {
          if (q == k || !seqs[s].present[k]) mask[(s * len + q) * len + k] = kBlocked;
        }
      }
    }
    const Var<Real> e =
        ad::reshape(ad::embedding(p("encoder.token"), std::span<const std::size_t>(ids)), {count, len, d});
    Var<Real> scores = ad::mul(ad::bmm(e, ad::transpose(e)), p("encoder.scale"));
    scores = ad::add(scores, g.constant(std::move(mask)));
    const Var<Real> weights = ad::softmax(scores, 2);
    x = ad::add(x, ad::bmm(weights, ad::matmul(x, p("encoder.value"))));
  }

  Tensor<Real> pool(Shape{count, 1, len});
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t n = seqs[s].length();
    if (n == 0) throw DimensionError("encode_text: empty sequence");
    for (std::size_t i = 0; i < len; ++i) {
      if (seqs[s].present[i]) pool[s * len + i] = Real(1) / static_cast<Real>(n);
    }
  }
  return ad::reshape(ad::bmm(g.constant(std::move(pool)), x), {count, d});
}

template <typename Real>
Tensor<Real> encode_visual(const corpus::ClipExample& clip, std::size_t options) {
  const auto& f = clip.frames;
  if (f.values.size() != f.segments * f.per_segment * f.dim || f.values.empty()) {
    throw ValidationError("clip '" + clip.clip_id + "': missing frame features");
  }
  Tensor<Real> out(Shape{options, f.segments, f.per_segment, f.dim});
  const std::size_t block = f.values.size();
  for (std::size_t n = 0; n < options; ++n) {
    std::transform(f.values.begin(), f.values.end(), out.data().begin() + static_cast<std::ptrdiff_t>(n * block),
                   [](float v) { return static_cast<Real>(v); });
  }
  return out;
}

template Var<float> embed_tokens(const Bound<float>&, std::span<const text::TokenSequence>);
template Var<double> embed_tokens(const Bound<double>&, std::span<const text::TokenSequence>);
template Var<float> encode_text(const Bound<float>&, std::span<const text::TokenSequence>);
template Var<double> encode_text(const Bound<double>&, std::span<const text::TokenSequence>);
template Tensor<float> encode_visual(const corpus::ClipExample&, std::size_t);
template Tensor<double> encode_visual(const corpus::ClipExample&, std::size_t);

}  // namespace mcvqa::model
