// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/corpus/synthetic.hpp"
#include "mcvqa/model/attention.hpp"
#include "mcvqa/model/encoder.hpp"
#include "mcvqa/model/network.hpp"
#include "mcvqa/train/inputs.hpp"
#include "mcvqa/train/trainer.hpp"

using namespace mcvqa;

namespace {

ad::Tensor<float> random_tensor(ad::Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  ad::Tensor<float> t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

struct Fixture {
  corpus::Dataset data = corpus::generate_synthetic(1, 16, corpus::Profile::kMixed);
  train::TrainConfig config = train::toy_preset();
  model::ModelConfig mcfg = train::model_config(config, data.vocab.size());
  model::ParameterSet<float> params = model::init_parameters(mcfg, 0);
  std::vector<model::ExampleInput> inputs;

  Fixture() {
    std::mt19937_64 rng(0);
    for (const auto& clip : data.clips)
      inputs.push_back(train::qa_input(clip, train::build_options(config), true, config.mask_p, rng));
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

static void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_tensor({n, n}, rng);
  const auto b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    ad::Graph<float> g;
    const auto x = g.variable(a);
    const auto y = g.variable(b);
    g.backward(ad::sum(ad::matmul(x, y)));
    benchmark::DoNotOptimize(g.grad(x).data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatmulBackward)->RangeMultiplier(2)->Range(16, 128)->Complexity();

static void BM_Attention(benchmark::State& state) {
  const bool local = state.range(0) == 1;
  const auto segments = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(2);
  const auto frames = random_tensor({5, segments, 4, 48}, rng);
  const auto text = random_tensor({5, segments, 64}, rng);
  const auto proj = random_tensor({48, 64}, rng);
  for (auto _ : state) {
    ad::Graph<float> g;
    const auto f = g.constant(frames);
    const auto t = g.constant(text);
    const auto m = g.constant(proj);
    auto out = local ? model::local_attend(f, t, m) : model::global_attend(f, t, m);
    benchmark::DoNotOptimize(out.output.value().data());
  }
  state.SetLabel(local ? "local" : "global");
}
BENCHMARK(BM_Attention)->ArgsProduct({{0, 1}, {6, 12, 24}});

static void BM_EncodeHypotheses(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    ad::Graph<float> g;
    model::Bound<float> p(g, f.params, false);
    benchmark::DoNotOptimize(model::encode_text(p, f.inputs[0].hypotheses).value().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.inputs[0].hypotheses.size()));
}
BENCHMARK(BM_EncodeHypotheses);

static void BM_ExampleStep(benchmark::State& state) {
  const auto& f = fixture();
  const auto heads = train::training_heads(f.config);
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& input = f.inputs[k++ % f.inputs.size()];
    ad::Graph<float> g;
    model::Bound<float> p(g, f.params, true);
    const auto r = model::forward(p, f.mcfg, input, heads);
    g.backward(train::total_loss<float>(r.qa_loss, r.span_loss, r.contrastive_loss, f.config));
    benchmark::DoNotOptimize(g.grad(p.var(0)).data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ExampleStep)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
  const auto& f = fixture();
  train::EvalOptions options;
  options.span_heads = state.range(0) == 1;
  for (auto _ : state) benchmark::DoNotOptimize(train::evaluate(f.params, f.mcfg, f.inputs, options).qa_acc);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.inputs.size()));
}
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
