// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mcvqa/autodiff/graph.hpp"

namespace mcvqa::ad {

/// Builds a scalar loss from variables bound to `params`, in the given graph.
using ScalarFn = std::function<Var<double>(Graph<double>&, std::span<const Var<double>>)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// When set, only this many coordinates per parameter are probed, chosen
  /// by a seeded shuffle. Unset probes every coordinate.
  std::optional<std::size_t> coords_per_param;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t param_index = 0;
  std::size_t coord = 0;
  std::size_t probes = 0;
};

/// Central-difference check of reverse-mode gradients.
///
/// Error per coordinate is |g_ad - g_fd| / max(1, |g_ad|, |g_fd|); the result
/// holds the worst coordinate. Throws ProbeError if f is non-finite at any
/// probe point.
GradCheckResult grad_check(const ScalarFn& f, std::span<const Tensor<double>> params,
                           const GradCheckOptions& options = {});

/// Convenience overload returning only the error.
double grad_check(const ScalarFn& f, std::span<const Tensor<double>> params, double step);

}  // namespace mcvqa::ad
