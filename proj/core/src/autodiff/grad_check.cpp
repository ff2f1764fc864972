// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mcvqa/error.hpp"

namespace mcvqa::ad {
namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor<double>>& params) {
  Graph<double> graph;
  std::vector<Var<double>> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(graph.constant(p));
  const double value = f(graph, vars).value().item();
  if (!std::isfinite(value)) throw ProbeError("grad_check: function is not finite at a probe point");
  return value;
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, std::span<const Tensor<double>> params,
                           const GradCheckOptions& options) {
  std::vector<Tensor<double>> point(params.begin(), params.end());

  std::vector<std::vector<double>> analytic;
  {
    Graph<double> graph;
    std::vector<Var<double>> vars;
    for (const auto& p : point) vars.push_back(graph.variable(p));
    const Var<double> loss = f(graph, vars);
    if (!std::isfinite(loss.value().item())) {
      throw ProbeError("grad_check: function is not finite at the evaluation point");
    }
    graph.backward(loss);
    for (std::size_t k = 0; k < vars.size(); ++k) {
      const auto g = graph.grad(vars[k]);
      analytic.emplace_back(point[k].size(), 0.0);
      std::copy(g.begin(), g.end(), analytic.back().begin());
    }
  }

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  const double h = options.step;
  for (std::size_t k = 0; k < point.size(); ++k) {
    std::vector<std::size_t> coords(point[k].size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.coords_per_param && *options.coords_per_param < coords.size()) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(*options.coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t c : coords) {
      const double original = point[k][c];
      point[k][c] = original + h;
      const double up = evaluate(f, point);
      point[k][c] = original - h;
      const double down = evaluate(f, point);
      point[k][c] = original;
      const double fd = (up - down) / (2.0 * h);
      const double ad = analytic[k][c];
      const double err = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      ++result.probes;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.param_index = k;
        result.coord = c;
      }
    }
  }
  return result;
}

double grad_check(const ScalarFn& f, std::span<const Tensor<double>> params, double step) {
  GradCheckOptions options;
  options.step = step;
  return grad_check(f, params, options).max_rel_error;
}

}  // namespace mcvqa::ad
