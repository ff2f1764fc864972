// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcvqa/train/config.hpp"

namespace mcvqa::train {

struct OpCheck {
  std::string name;
  double max_rel_error = 0.0;
};

/// Finite-difference checks of every differentiable op on small random inputs.
std::vector<OpCheck> op_grad_checks(std::uint64_t seed = 0);

struct FullModelCheck {
  std::uint64_t seed = 0;
  /// Probed coordinates per parameter tensor; unset probes all of them.
  std::optional<std::size_t> coords_per_param = 16;
  double step = 1e-5;
};

struct FullModelResult {
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  /// Parameter holding the worst coordinate.
  std::string parameter;
};

/// Checks the toy model at double precision on one synthetic clip with the
/// QA, span and contrastive losses active.
FullModelResult full_model_grad_check(const FullModelCheck& options, const TrainConfig& config = toy_preset());

}  // namespace mcvqa::train
