// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "mcvqa/model/parameters.hpp"

namespace mcvqa::train {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. State is laid out like the parameter set it
/// was created for.
class Adam {
 public:
  Adam(const model::ParameterSet<float>& params, AdamOptions options);

  /// One update from gradients shaped like the parameters.
  void step(model::ParameterSet<float>& params, const std::vector<std::vector<float>>& grads);

  std::size_t steps() const noexcept { return steps_; }

 private:
  AdamOptions options_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Scales gradients in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before scaling.
double clip_global_norm(std::vector<std::vector<float>>& grads, double max_norm);

}  // namespace mcvqa::train
