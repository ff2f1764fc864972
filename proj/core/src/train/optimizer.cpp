// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/train/optimizer.hpp"

#include <cmath>

#include "mcvqa/error.hpp"

namespace mcvqa::train {

Adam::Adam(const model::ParameterSet<float>& params, AdamOptions options) : options_(options) {
  m_.resize(params.size());
  v_.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i].assign(params[i].size(), 0.0);
    v_[i].assign(params[i].size(), 0.0);
  }
}

void Adam::step(model::ParameterSet<float>& params, const std::vector<std::vector<float>>& grads) {
  if (grads.size() != params.size()) throw DimensionError("adam: gradient count does not match parameters");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].data();
    const auto& g = grads[i];
    if (g.size() != w.size()) throw DimensionError("adam: gradient of '" + params.name(i) + "' has wrong size");
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = options_.beta1 * m[k] + (1.0 - options_.beta1) * g[k];
      v[k] = options_.beta2 * v[k] + (1.0 - options_.beta2) * g[k] * g[k];
      const double update = (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.epsilon);
      w[k] = static_cast<float>(w[k] - options_.learning_rate * update);
    }
  }
}

double clip_global_norm(std::vector<std::vector<float>>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (float x : g) sq += static_cast<double>(x) * x;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const float factor = static_cast<float>(max_norm / norm);
    for (auto& g : grads)
      for (float& x : g) x *= factor;
  }
  return norm;
}

}  // namespace mcvqa::train
