// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/model/attention.hpp"

#include <cmath>

#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/error.hpp"

namespace mcvqa::model {

void declare_attention(ParameterSet<float>& params, const ModelConfig& c, std::mt19937_64& rng) {
  params.add_uniform("attention.projection", {c.d_visual, c.d_text}, c.init_range, rng);
}

namespace {

struct Dims {
  std::size_t n, t, i, dv, dt;
};

template <typename Real>
Dims check_shapes(Var<Real> frames, Var<Real> text, Var<Real> projection, const char* op) {
  const auto& fs = frames.shape();
  const auto& ts = text.shape();
  const auto& ps = projection.shape();
  if (fs.size() != 4 || ts.size() != 3 || ps.size() != 2 || fs[0] != ts[0] || fs[1] != ts[1] || fs[3] != ps[0] ||
      ts[2] != ps[1] || fs[2] == 0) {
    throw DimensionError(std::string(op) + ": frames " + ad::shape_string(fs) + ", text " + ad::shape_string(ts) +
                         " and projection " + ad::shape_string(ps) + " are inconsistent");
  }
  return {fs[0], fs[1], fs[2], fs[3], ts[2]};
}

// scores laid out [N, T, K]; frame index k maps to (segment, frame) via `per_segment`.
template <typename Real>
void require_finite(const Tensor<Real>& scores, std::size_t n_dim, std::size_t t_dim, std::size_t k_dim,
                    std::size_t per_segment, const char* op) {
  for (std::size_t n = 0; n < n_dim; ++n) {
    for (std::size_t t = 0; t < t_dim; ++t) {
      for (std::size_t k = 0; k < k_dim; ++k) {
        if (!std::isfinite(scores[(n * t_dim + t) * k_dim + k])) {
          throw NumericError(std::string(op) + ": non-finite score at (n=" + std::to_string(n) +
                             ", t=" + std::to_string(t) + ", i=" + std::to_string(k % per_segment) +
                             (k_dim > per_segment ? ", frame segment=" + std::to_string(k / per_segment) : "") + ")");
        }
      }
    }
  }
}

}  // namespace

template <typename Real>
Attended<Real> local_attend(Var<Real> frames, Var<Real> text, Var<Real> projection) {
  const Dims d = check_shapes(frames, text, projection, "local_attend");
  const Var<Real> projected = ad::reshape(ad::matmul(frames, projection), {d.n * d.t, d.i, d.dt});
  const Var<Real> query = ad::reshape(text, {d.n * d.t, d.dt, 1});
  const Var<Real> scores = ad::reshape(ad::bmm(projected, query), {d.n * d.t, d.i});
  require_finite(scores.value(), d.n, d.t, d.i, d.i, "local_attend");
  const Var<Real> weights = ad::softmax(scores, 1);
  const Var<Real> out = ad::bmm(ad::reshape(weights, {d.n * d.t, 1, d.i}), projected);
  return {ad::reshape(out, {d.n, d.t, d.dt}), weights};
}

template <typename Real>
Attended<Real> global_attend(Var<Real> frames, Var<Real> text, Var<Real> projection) {
  const Dims d = check_shapes(frames, text, projection, "global_attend");
  const Var<Real> projected = ad::reshape(ad::matmul(frames, projection), {d.n, d.t * d.i, d.dt});
  const Var<Real> scores = ad::bmm(text, ad::transpose(projected));
  require_finite(scores.value(), d.n, d.t, d.t * d.i, d.i, "global_attend");
  const Var<Real> weights = ad::softmax(scores, 2);
  return {ad::bmm(weights, projected), weights};
}

template <typename Real>
Attended<Real> attend(AttentionMode mode, Var<Real> frames, Var<Real> text, Var<Real> projection) {
  return mode == AttentionMode::kLocal ? local_attend(frames, text, projection)
                                       : global_attend(frames, text, projection);
}

#define MCVQA_INSTANTIATE(Real)                                                        \
  template Attended<Real> local_attend(Var<Real>, Var<Real>, Var<Real>);               \
  template Attended<Real> global_attend(Var<Real>, Var<Real>, Var<Real>);              \
  template Attended<Real> attend(AttentionMode, Var<Real>, Var<Real>, Var<Real>);
MCVQA_INSTANTIATE(float)
MCVQA_INSTANTIATE(double)
#undef MCVQA_INSTANTIATE

}  // namespace mcvqa::model
