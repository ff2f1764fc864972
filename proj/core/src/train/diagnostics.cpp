// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/train/diagnostics.hpp"

#include <functional>
#include <random>

#include "mcvqa/autodiff/grad_check.hpp"
#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/corpus/synthetic.hpp"
#include "mcvqa/train/inputs.hpp"
#include "mcvqa/train/trainer.hpp"

namespace mcvqa::train {
namespace {

using T64 = ad::Tensor<double>;
using V64 = ad::Var<double>;

T64 random_tensor(ad::Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  T64 t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// Contracts an op output with fixed random weights into a scalar.
double check_op(const std::function<V64(std::span<const V64>)>& op, std::vector<ad::Shape> shapes,
                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<T64> params;
  for (auto& s : shapes) params.push_back(random_tensor(s, rng));
  T64 weights;
  return ad::grad_check(
      [&](ad::Graph<double>& g, std::span<const V64> p) {
        const V64 out = op(p);
        if (weights.size() != out.value().size()) {
          std::mt19937_64 wrng(seed + 1);
          weights = random_tensor(out.shape(), wrng);
        }
        return ad::sum(ad::mul(out, g.constant(weights)));
      },
      params, 1e-5);
}

}  // namespace

std::vector<OpCheck> op_grad_checks(std::uint64_t seed) {
  using P = std::span<const V64>;
  std::vector<OpCheck> out;
  auto run = [&](std::string name, std::function<V64(P)> op, std::vector<ad::Shape> shapes) {
    out.push_back({std::move(name), check_op(op, std::move(shapes), seed + out.size())});
  };
  run("add", [](P p) { return ad::add(p[0], p[1]); }, {{3, 4}, {4}});
  run("sub", [](P p) { return ad::sub(p[0], p[1]); }, {{3, 4}, {3, 4}});
  run("mul", [](P p) { return ad::mul(p[0], p[1]); }, {{2, 3, 4}, {3, 4}});
  run("scale", [](P p) { return ad::scale(p[0], -2.5); }, {{4}});
  run("add_scalar", [](P p) { return ad::add_scalar(p[0], 0.75); }, {{4}});
  run("tanh", [](P p) { return ad::tanh(p[0]); }, {{5, 3}});
  run("sigmoid", [](P p) { return ad::sigmoid(p[0]); }, {{5, 3}});
  run("matmul", [](P p) { return ad::matmul(p[0], p[1]); }, {{2, 3, 4}, {4, 5}});
  run("bmm", [](P p) { return ad::bmm(p[0], p[1]); }, {{2, 3, 4}, {2, 4, 5}});
  run("transpose", [](P p) { return ad::transpose(p[0]); }, {{2, 3, 4}});
  run("reshape", [](P p) { return ad::reshape(p[0], {6, 2}); }, {{3, 4}});
  run("softmax", [](P p) { return ad::softmax(p[0], 1); }, {{3, 5, 2}});
  run("cross_entropy", [](P p) { return ad::cross_entropy(ad::softmax(p[0], 0), 2); }, {{5}});
  run("max_pool", [](P p) { return ad::max_pool(p[0], 1); }, {{4, 6, 8}});
  run("concat", [](P p) { return ad::concat<double>(std::vector<V64>{p[0], p[1], p[0]}, 1); },
      {{2, 3, 2}, {2, 1, 2}});
  run("slice", [](P p) { return ad::slice(p[0], 1, 1, 3); }, {{2, 4, 3}});
  run("embedding",
      [](P p) {
        const std::vector<std::size_t> ids{2, 0, 2, 5};
        return ad::embedding<double>(p[0], ids);
      },
      {{6, 3}});
  run("mean", [](P p) { return ad::mean(p[0]); }, {{3, 4}});
  run("sum", [](P p) { return ad::sum(p[0]); }, {{3, 4}});
  run("weighted_sum",
      [](P p) {
        const std::vector<V64> terms{ad::sum(p[0]), ad::mean(p[1])};
        const std::vector<double> w{1.0, 0.2};
        return ad::weighted_sum<double>(terms, w);
      },
      {{3}, {4}});
  return out;
}

FullModelResult full_model_grad_check(const FullModelCheck& options, const TrainConfig& config) {
  corpus::GeneratorConfig gen;
  gen.segments = config.segments;
  gen.frames_per_segment = config.frames;
  gen.frame_dim = config.d_visual;
  gen.options = config.options;
  const auto data = corpus::generate_synthetic(options.seed, 1, corpus::Profile::kMixed, gen);
  const auto mcfg = model_config(config, data.vocab.size());
  const auto params = model::init_parameters(mcfg, options.seed).cast<double>();

  std::mt19937_64 rng(options.seed);
  const auto input = qa_input(data.clips[0], build_options(config), true, config.mask_p, rng);
  model::ForwardOptions heads;
  heads.span_heads = true;
  heads.contrastive = true;
  TrainConfig all = config;
  all.use_span_loss = true;
  all.use_cont_loss = true;

  std::vector<T64> tensors;
  for (std::size_t i = 0; i < params.size(); ++i) tensors.push_back(params[i]);
  ad::GradCheckOptions gc;
  gc.step = options.step;
  gc.coords_per_param = options.coords_per_param;
  gc.seed = options.seed;
  const auto r = ad::grad_check(
      [&](ad::Graph<double>& g, std::span<const V64> vars) {
        const model::Bound<double> bound(g, params, vars);
        const auto f = model::forward(bound, mcfg, input, heads);
        return total_loss(f.qa_loss, f.span_loss, f.contrastive_loss, all);
      },
      tensors, gc);
  return {r.max_rel_error, r.probes, params.name(r.param_index)};
}

}  // namespace mcvqa::train
