// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include "mcvqa/autodiff/grad_check.hpp"
#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/corpus/synthetic.hpp"
#include "mcvqa/error.hpp"
#include "mcvqa/model/attention.hpp"
#include "mcvqa/model/contrastive.hpp"
#include "mcvqa/model/encoder.hpp"
#include "mcvqa/model/localizer.hpp"
#include "mcvqa/model/network.hpp"
#include "mcvqa/model/qa_head.hpp"
#include "mcvqa/text/sequence.hpp"
#include "support/oracles.hpp"

using namespace mcvqa;
using namespace mcvqa::model;
using T64 = ad::Tensor<double>;
using V64 = ad::Var<double>;
using G64 = ad::Graph<double>;
using oracle::attention_case;
using oracle::random_tensor;

namespace {

ParameterSet<double> random_params(const ModelConfig& cfg, std::uint64_t seed, double range = 0.3) {
  ModelConfig c = cfg;
  c.init_range = range;
  return init_parameters(c, seed).cast<double>();
}

ModelConfig small_config(std::size_t vocab = 40) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.d_text = 6;
  c.d_visual = 5;
  c.max_len = 12;
  c.segments = 3;
  c.frames = 2;
  c.attention_scale = 2.0;
  return c;
}

text::TokenSequence sequence(std::vector<corpus::TokenId> q, std::vector<corpus::TokenId> a,
                             std::vector<corpus::TokenId> s, std::vector<corpus::TokenId> o, std::size_t len = 12) {
  return text::build({q, a, s, o}, {len, true});
}

std::vector<double> values(V64 v) { return {v.value().storage().begin(), v.value().storage().end()}; }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar-loop GRU over one sequence x[t][d], weights stored [d_in, 3h] with gate blocks z, r, c.
std::vector<std::vector<double>> gru_oracle(const std::vector<std::vector<double>>& x, const T64& w, const T64& u,
                                            const T64& b, bool reverse) {
  const std::size_t h = u.dim(0);
  const std::size_t d = w.dim(0);
  std::vector<double> state(h, 0.0);
  std::vector<std::vector<double>> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const std::size_t t = reverse ? x.size() - 1 - k : k;
    std::vector<double> pre(3 * h);
    for (std::size_t c = 0; c < 3 * h; ++c) {
      pre[c] = b[c];
      for (std::size_t j = 0; j < d; ++j) pre[c] += x[t][j] * w[j * 3 * h + c];
    }
    std::vector<double> z(h), r(h), next(h);
    for (std::size_t c = 0; c < h; ++c) {
      double zs = pre[c], rs = pre[h + c];
      for (std::size_t j = 0; j < h; ++j) {
        zs += state[j] * u[j * 3 * h + c];
        rs += state[j] * u[j * 3 * h + h + c];
      }
      z[c] = sigmoid(zs);
      r[c] = sigmoid(rs);
    }
    for (std::size_t c = 0; c < h; ++c) {
      double cs = pre[2 * h + c];
      for (std::size_t j = 0; j < h; ++j) cs += r[j] * state[j] * u[j * 3 * h + 2 * h + c];
      next[c] = (1 - z[c]) * state[c] + z[c] * std::tanh(cs);
    }
    state = next;
    out[t] = state;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- encoders

TEST(Encoder, TypeScalesAreExactMultiples) {
  ModelConfig cfg = small_config();
  ParameterSet<float> params = init_parameters(cfg, 3);
  for (const char* zero : {"encoder.token", "encoder.position"})
    for (auto& v : params.at(zero).data()) v = 0.0f;
  ad::Graph<float> g;
  Bound<float> p(g, params, false);
  // One token at each level: Q, A, S, O.
  const auto seq = sequence({7}, {8}, {9}, {10});
  const std::vector<text::TokenSequence> seqs{seq};
  const auto x = embed_tokens(p, seqs).value();
  const std::size_t d = cfg.d_text;
  auto row = [&](std::size_t pos) { return std::vector<float>(x.data().begin() + pos * d, x.data().begin() + (pos + 1) * d); };
  const auto e1 = row(3), e2 = row(5), e3 = row(7);
  const auto type0 = params.at("encoder.type0").storage();
  const auto type1 = params.at("encoder.type1").storage();
  EXPECT_EQ(row(1), type0);
  for (std::size_t k = 0; k < d; ++k) {
    EXPECT_EQ(e2[k], 2.0f * e1[k]);
    EXPECT_EQ(e1[k], (1.0f / 3.0f) * type1[k]);
    EXPECT_EQ(e3[k], type1[k]);
  }
}

TEST(Encoder, IdenticalSequencesGiveIdenticalVectors) {
  const auto cfg = small_config();
  const auto params = random_params(cfg, 5);
  G64 g;
  Bound<double> p(g, params, false);
  const auto seq = sequence({5, 6}, {7}, {8, 9}, {});
  const std::vector<text::TokenSequence> seqs{seq, seq};
  const auto out = encode_text(p, seqs).value();
  for (std::size_t k = 0; k < cfg.d_text; ++k) EXPECT_EQ(out[k], out[cfg.d_text + k]);
}

TEST(Encoder, SwappingTokensChangesOutput) {
  const auto cfg = small_config();
  const auto params = random_params(cfg, 6);
  G64 g;
  Bound<double> p(g, params, false);
  const std::vector<text::TokenSequence> seqs{sequence({5, 6}, {7}, {8}, {}), sequence({6, 5}, {7}, {8}, {})};
  const auto out = encode_text(p, seqs).value();
  double diff = 0;
  for (std::size_t k = 0; k < cfg.d_text; ++k) diff += std::abs(out[k] - out[cfg.d_text + k]);
  EXPECT_GT(diff, 1e-6);
}

TEST(Encoder, PadContentIgnored) {
  const auto cfg = small_config();
  const auto params = random_params(cfg, 7);
  auto seq = sequence({5, 6}, {7}, {8}, {}, 12);
  auto noisy = seq;
  for (std::size_t i = 0; i < noisy.size(); ++i)
    if (!noisy.present[i]) noisy.ids[i] = 30;
  G64 g;
  Bound<double> p(g, params, false);
  const std::vector<text::TokenSequence> seqs{seq, noisy};
  const auto out = encode_text(p, seqs).value();
  for (std::size_t k = 0; k < cfg.d_text; ++k) EXPECT_EQ(out[k], out[cfg.d_text + k]);
}

TEST(Encoder, EmbeddingGradientsPassCheck) {
  const auto cfg = small_config(20);
  const auto params = random_params(cfg, 8);
  const std::vector<text::TokenSequence> seqs{sequence({5, 6}, {7}, {8, 9}, {10}), sequence({11}, {12, 13}, {14}, {})};
  std::vector<T64> tensors;
  for (std::size_t i = 0; i < params.size(); ++i) tensors.push_back(params[i]);
  std::mt19937_64 rng(1);
  const T64 weights = random_tensor({2, cfg.d_text}, rng);
  const double err = ad::grad_check(
      [&](G64& g, std::span<const V64> vars) {
        Bound<double> p(g, params, vars);
        return ad::sum(ad::mul(encode_text(p, seqs), g.constant(weights)));
      },
      tensors, 1e-5);
  EXPECT_LT(err, 1e-6);
}

TEST(Encoder, OutOfVocabularyIdThrows) {
  const auto cfg = small_config(20);
  const auto params = random_params(cfg, 9);
  G64 g;
  Bound<double> p(g, params, false);
  const std::vector<text::TokenSequence> seqs{sequence({5}, {25}, {8}, {})};
  EXPECT_THROW(encode_text(p, seqs), VocabularyError);
}

TEST(Encoder, VisualTilingAndShapes) {
  const auto data = corpus::generate_synthetic(1, 1, corpus::Profile::kMixed);
  const auto v = encode_visual<float>(data.clips[0], 5);
  EXPECT_EQ(v.shape(), (ad::Shape{5, 6, 4, 48}));
  const std::size_t block = 6 * 4 * 48;
  for (std::size_t k = 0; k < block; ++k) {
    EXPECT_EQ(v[k], v[3 * block + k]);
    EXPECT_EQ(v[k], data.clips[0].frames.values[k]);
  }
  corpus::ClipExample empty = data.clips[0];
  empty.frames.values.clear();
  EXPECT_THROW(encode_visual<float>(empty, 5), ValidationError);
}

TEST(Encoder, NoDeadParameters) {
  const auto data = corpus::generate_synthetic(2, 4, corpus::Profile::kMixed);
  ModelConfig cfg;
  cfg.vocab_size = data.vocab.size();
  const auto params = init_parameters(cfg, 2);
  std::vector<std::vector<float>> total(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) total[i].assign(params[i].size(), 0.0f);
  std::mt19937_64 rng(2);
  for (const auto& clip : data.clips) {
    ExampleInput input;
    input.clip = &clip;
    input.target = clip.correct_index;
    input.span = clip.span;
    for (const auto& a : clip.answers)
      for (std::size_t t = 0; t < clip.segment_count(); ++t)
        input.hypotheses.push_back(text::build({clip.question, a, clip.subtitles[t].tokens, clip.objects[t]}, {}));
    for (std::size_t t = 0; t < clip.segment_count(); ++t)
      input.anchor.push_back(text::mask_for_anchor(input.hypotheses[clip.correct_index * 6 + t], 0.2, rng));
    ad::Graph<float> g;
    Bound<float> p(g, params, true);
    const auto r = forward(p, cfg, input, {true, true});
    const std::vector<ad::Var<float>> terms{r.qa_loss, *r.span_loss, *r.contrastive_loss};
    const std::vector<double> w{1.0, 0.2, 0.1};
    g.backward(ad::weighted_sum<float>(terms, w));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto grad = g.grad(p.var(i));
      for (std::size_t k = 0; k < grad.size(); ++k) total[i][k] += std::abs(grad[k]);
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double sum = std::accumulate(total[i].begin(), total[i].end(), 0.0);
    EXPECT_GT(sum, 0.0) << params.name(i);
  }
}

// ---------------------------------------------------------------- attention

TEST(Attention, SingleFrameIgnoresText) {
  std::mt19937_64 rng(10);
  auto c = attention_case(2, 3, 1, 5, 3, rng);
  G64 g;
  const auto a = local_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj));
  for (double w : values(a.weights)) EXPECT_EQ(w, 1.0);
  c.text = random_tensor({2, 3, 3}, rng);
  G64 g2;
  const auto b = local_attend(g2.constant(c.frames), g2.constant(c.text), g2.constant(c.proj));
  const auto av = values(a.output), bv = values(b.output);
  for (std::size_t k = 0; k < av.size(); ++k) EXPECT_NEAR(av[k], bv[k], 1e-15);
}

TEST(Attention, IdenticalFramesGiveUniformWeights) {
  std::mt19937_64 rng(11);
  auto c = attention_case(2, 3, 4, 5, 3, rng);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) c.frames[((n * 3 + t) * 4 + i) * 5 + j] = c.frames[j];
  G64 g;
  for (double w : values(local_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj)).weights))
    EXPECT_NEAR(w, 0.25, 1e-12);
  for (double w : values(global_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj)).weights))
    EXPECT_NEAR(w, 1.0 / 12, 1e-12);
}

TEST(Attention, LocalMatchesNestedLoop) {
  std::mt19937_64 rng(12);
  const auto c = attention_case(2, 3, 4, 5, 3, rng);
  G64 g;
  const auto out = values(local_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj)).output);
  const auto expect = oracle::attention(c, true);
  for (std::size_t k = 0; k < out.size(); ++k) EXPECT_NEAR(out[k], expect[k], 1e-6);
}

TEST(Attention, GlobalMatchesNestedLoop) {
  std::mt19937_64 rng(13);
  const auto c = attention_case(2, 3, 4, 5, 3, rng);
  G64 g;
  const auto out = values(global_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj)).output);
  const auto expect = oracle::attention(c, false);
  for (std::size_t k = 0; k < out.size(); ++k) EXPECT_NEAR(out[k], expect[k], 1e-6);
}

TEST(Attention, GlobalEqualsLocalForOneSegment) {
  std::mt19937_64 rng(14);
  const auto c = attention_case(3, 1, 4, 5, 3, rng);
  G64 g;
  const auto a = values(local_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj)).output);
  const auto b = values(global_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj)).output);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Attention, WeightsSumToOne) {
  std::mt19937_64 rng(15);
  const auto c = attention_case(2, 4, 3, 5, 3, rng);
  G64 g;
  for (bool local : {true, false}) {
    const auto att = local ? local_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj))
                           : global_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj));
    const auto w = values(att.weights);
    const std::size_t group = local ? 3 : 12;
    for (std::size_t s = 0; s < w.size(); s += group) {
      EXPECT_NEAR(std::accumulate(w.begin() + s, w.begin() + s + group, 0.0), 1.0, 1e-6);
    }
  }
}

TEST(Attention, LocalityHasZeroCrossSegmentGradient) {
  std::mt19937_64 rng(16);
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = dim(rng), t = 1 + dim(rng), i = dim(rng);
    const auto c = attention_case(n, t, i, 1 + dim(rng), dim(rng), rng);
    std::uniform_int_distribution<std::size_t> pick(0, t - 1);
    const std::size_t target = pick(rng);
    G64 g;
    const V64 frames = g.variable(c.frames);
    const auto out = local_attend(frames, g.variable(c.text), g.variable(c.proj)).output;
    const V64 seg = ad::slice(out, 1, target, target + 1);
    std::mt19937_64 wrng(trial);
    g.backward(ad::sum(ad::mul(seg, g.constant(random_tensor(seg.shape(), wrng)))));
    const auto grad = g.grad(frames);
    ASSERT_FALSE(grad.empty());
    double inside = 0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t s = 0; s < t; ++s)
        for (std::size_t k = 0; k < i * c.dv; ++k) {
          const double v = grad[(a * t + s) * i * c.dv + k];
          if (s == target) {
            inside += std::abs(v);
          } else {
            ASSERT_EQ(v, 0.0) << "trial " << trial;
          }
        }
    EXPECT_GT(inside, 0.0);
  }
}

TEST(Attention, FramePermutationPermutesWeights) {
  std::mt19937_64 rng(17);
  auto c = attention_case(1, 2, 4, 5, 3, rng);
  G64 g;
  const auto a = local_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj));
  auto perm = c;
  const std::vector<std::size_t> order{2, 0, 3, 1};
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 5; ++j) perm.frames[(t * 4 + i) * 5 + j] = c.frames[(t * 4 + order[i]) * 5 + j];
  const auto b = local_attend(g.constant(perm.frames), g.constant(perm.text), g.constant(perm.proj));
  const auto wa = values(a.weights), wb = values(b.weights);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(wb[t * 4 + i], wa[t * 4 + order[i]], 1e-12);
  const auto oa = values(a.output), ob = values(b.output);
  for (std::size_t k = 0; k < oa.size(); ++k) EXPECT_NEAR(oa[k], ob[k], 1e-12);
}

TEST(Attention, PositiveTextScalingKeepsArgmaxFrame) {
  std::mt19937_64 rng(18);
  auto c = attention_case(2, 3, 4, 5, 3, rng);
  G64 g;
  const auto wa = values(local_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj)).weights);
  for (auto& v : c.text.data()) v *= 3.7;
  const auto wb = values(local_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj)).weights);
  for (std::size_t s = 0; s < wa.size(); s += 4) {
    EXPECT_EQ(std::max_element(wa.begin() + s, wa.begin() + s + 4) - wa.begin(),
              std::max_element(wb.begin() + s, wb.begin() + s + 4) - wb.begin());
  }
}

TEST(Attention, NonFiniteScoreNamesLocation) {
  std::mt19937_64 rng(19);
  auto c = attention_case(2, 3, 4, 5, 3, rng);
  c.frames[((1 * 3 + 2) * 4 + 1) * 5] = std::numeric_limits<double>::infinity();
  G64 g;
  try {
    local_attend(g.constant(c.frames), g.constant(c.text), g.constant(c.proj));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("n=1, t=2, i=1"), std::string::npos) << e.what();
  }
}

// ---------------------------------------------------------------- qa head

TEST(QaHead, GruMatchesScalarLoop) {
  std::mt19937_64 rng(20);
  ParameterSet<float> fparams;
  declare_bigru(fparams, "g", 4, 3, 0.5, rng);
  const auto params = fparams.cast<double>();
  const T64 x = random_tensor({2, 5, 4}, rng);
  G64 g;
  Bound<double> p(g, params, false);
  const auto out = values(bigru_sequence(p, "g", g.constant(x)));
  for (std::size_t n = 0; n < 2; ++n) {
    std::vector<std::vector<double>> seq(5, std::vector<double>(4));
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t j = 0; j < 4; ++j) seq[t][j] = x[(n * 5 + t) * 4 + j];
    const auto fw = gru_oracle(seq, params.at("g.fw.input"), params.at("g.fw.hidden"), params.at("g.fw.bias"), false);
    const auto bw = gru_oracle(seq, params.at("g.bw.input"), params.at("g.bw.hidden"), params.at("g.bw.bias"), true);
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(out[(n * 5 + t) * 6 + k], fw[t][k], 1e-6);
        EXPECT_NEAR(out[(n * 5 + t) * 6 + 3 + k], bw[t][k], 1e-6);
      }
    }
  }
}

TEST(QaHead, ZeroWeightsGiveZeroOutputs) {
  std::mt19937_64 rng(21);
  ParameterSet<float> fparams;
  declare_bigru(fparams, "g", 4, 3, 0.5, rng);
  auto params = fparams.cast<double>();
  for (std::size_t i = 0; i < params.size(); ++i)
    for (auto& v : params[i].data()) v = 0.0;
  G64 g;
  Bound<double> p(g, params, false);
  for (double v : values(bigru_sequence(p, "g", g.constant(random_tensor({2, 5, 4}, rng))))) EXPECT_EQ(v, 0.0);
}

TEST(QaHead, SingleStepUsesSameInputBothWays) {
  std::mt19937_64 rng(22);
  ParameterSet<float> fparams;
  declare_bigru(fparams, "g", 4, 3, 0.5, rng);
  auto params = fparams.cast<double>();
  for (const char* part : {".input", ".hidden", ".bias"}) params.at(std::string("g.bw") + part) = params.at(std::string("g.fw") + part);
  G64 g;
  Bound<double> p(g, params, false);
  const auto out = values(bigru_sequence(p, "g", g.constant(random_tensor({2, 1, 4}, rng))));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(out[n * 6 + k], out[n * 6 + 3 + k]);
}

TEST(QaHead, ClassifierMatchesTwoLayerArithmetic) {
  std::mt19937_64 rng(23);
  ParameterSet<float> fparams;
  declare_classifier(fparams, "c", 4, 3, 0.5, rng);
  const auto params = fparams.cast<double>();
  const T64 x = random_tensor({5, 4}, rng);
  G64 g;
  Bound<double> p(g, params, false);
  const auto out = values(classify(p, "c", g.constant(x)));
  const auto &w1 = params.at("c.w1"), &b1 = params.at("c.b1"), &w2 = params.at("c.w2"), &b2 = params.at("c.b2");
  for (std::size_t n = 0; n < 5; ++n) {
    double logit = b2[0];
    for (std::size_t h = 0; h < 3; ++h) {
      double a = b1[h];
      for (std::size_t j = 0; j < 4; ++j) a += x[n * 4 + j] * w1[j * 3 + h];
      logit += std::tanh(a) * w2[h];
    }
    EXPECT_NEAR(out[n], logit, 1e-6);
  }
}

TEST(QaHead, LossExamples) {
  G64 g;
  const auto zeros = g.constant(T64(ad::Shape{5}));
  EXPECT_NEAR(qa_loss<double>({zeros, zeros}, 2).loss.value().item(), std::log(5.0), 1e-12);
  T64 onehot(ad::Shape{5});
  onehot[3] = 1000.0;
  EXPECT_NEAR(qa_loss<double>({g.constant(onehot), zeros}, 3).loss.value().item(), 0.0, 1e-12);
}

TEST(QaHead, ShiftInvariance) {
  std::mt19937_64 rng(24);
  const T64 sv = random_tensor({5}, rng), st = random_tensor({5}, rng);
  T64 sv2 = sv, st2 = st;
  for (auto& v : sv2.data()) v += 4.25;
  for (auto& v : st2.data()) v -= 1.5;
  G64 g;
  const auto a = values(qa_loss<double>({g.constant(sv), g.constant(st)}, 0).probs);
  const auto b = values(qa_loss<double>({g.constant(sv2), g.constant(st2)}, 0).probs);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
}

TEST(QaHead, IdenticalHypothesesGiveEqualLogits) {
  std::mt19937_64 rng(25);
  ParameterSet<float> fparams;
  declare_classifier(fparams, "c", 4, 3, 0.5, rng);
  const auto params = fparams.cast<double>();
  T64 x({5, 4});
  const T64 row = random_tensor({4}, rng);
  for (std::size_t n = 0; n < 5; ++n)
    for (std::size_t j = 0; j < 4; ++j) x[n * 4 + j] = row[j];
  G64 g;
  Bound<double> p(g, params, false);
  const auto out = values(classify(p, "c", g.constant(x)));
  for (double v : out) EXPECT_EQ(v, out[0]);
}

TEST(QaHead, LossGradientThroughBothStreams) {
  std::mt19937_64 rng(26);
  ParameterSet<float> fparams;
  declare_classifier(fparams, "text_classifier", 4, 3, 0.5, rng);
  declare_classifier(fparams, "visual_classifier", 4, 3, 0.5, rng);
  const auto params = fparams.cast<double>();
  const T64 ht = random_tensor({5, 4}, rng), hv = random_tensor({5, 4}, rng);
  std::vector<T64> tensors;
  for (std::size_t i = 0; i < params.size(); ++i) tensors.push_back(params[i]);
  tensors.push_back(ht);
  tensors.push_back(hv);
  const double err = ad::grad_check(
      [&](G64& g, std::span<const V64> vars) {
        Bound<double> p(g, params, vars.first(params.size()));
        return qa_loss(qa_logits(p, vars[params.size() + 1], vars[params.size()]), 1).loss;
      },
      tensors, 1e-5);
  EXPECT_LT(err, 1e-4);
}

// ---------------------------------------------------------------- localizer

namespace {

ParameterSet<double> localizer_params(std::size_t d_text, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.d_text = d_text;
  cfg.init_range = 0.5;
  std::mt19937_64 rng(seed);
  ParameterSet<float> p;
  declare_localizer(p, cfg, rng);
  return p.cast<double>();
}

std::vector<double> span_oracle(const T64& seq, const T64& w, const T64& b) {
  const std::size_t n = seq.dim(0), t = seq.dim(1), d = seq.dim(2);
  std::vector<double> pooled(t, -1e300);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t s = 0; s < t; ++s) {
      double v = b[0];
      for (std::size_t k = 0; k < d; ++k) v += seq[(a * t + s) * d + k] * w[k];
      pooled[s] = std::max(pooled[s], v);
    }
  double denom = 0;
  for (double v : pooled) denom += std::exp(v);
  for (double& v : pooled) v = std::exp(v) / denom;
  return pooled;
}

}  // namespace

TEST(Localizer, MatchesLoopOracle) {
  std::mt19937_64 rng(30);
  const auto params = localizer_params(3, 30);
  const T64 seq = random_tensor({5, 6, 6}, rng);
  G64 g;
  Bound<double> p(g, params, false);
  const auto probs = span_logits(p, g.constant(seq));
  const auto start = span_oracle(seq, params.at("span.start.w"), params.at("span.start.b"));
  const auto end = span_oracle(seq, params.at("span.end.w"), params.at("span.end.b"));
  const auto s = values(probs.start), e = values(probs.end);
  for (std::size_t t = 0; t < 6; ++t) {
    EXPECT_NEAR(s[t], start[t], 1e-6);
    EXPECT_NEAR(e[t], end[t], 1e-6);
  }
  EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-6);
}

TEST(Localizer, SingleHypothesisPoolingIsIdentity) {
  std::mt19937_64 rng(31);
  const auto params = localizer_params(3, 31);
  const T64 seq = random_tensor({1, 6, 6}, rng);
  G64 g;
  Bound<double> p(g, params, false);
  const auto s = values(span_logits(p, g.constant(seq)).start);
  const auto expect = span_oracle(seq, params.at("span.start.w"), params.at("span.start.b"));
  for (std::size_t t = 0; t < 6; ++t) EXPECT_NEAR(s[t], expect[t], 1e-12);
}

TEST(Localizer, IdenticalPositionsGiveUniform) {
  const auto params = localizer_params(3, 32);
  T64 seq({2, 6, 6}, 0.3);
  G64 g;
  Bound<double> p(g, params, false);
  for (double v : values(span_logits(p, g.constant(seq)).end)) EXPECT_NEAR(v, 1.0 / 6, 1e-12);
}

TEST(Localizer, SpanLossExamples) {
  G64 g;
  T64 onehot_s(ad::Shape{6}), onehot_e(ad::Shape{6});
  onehot_s[1] = 1;
  onehot_e[3] = 1;
  EXPECT_NEAR(span_loss<double>({g.constant(onehot_s), g.constant(onehot_e)}, {1, 3}).value().item(), 0.0, 1e-15);
  const T64 uniform(ad::Shape{6}, 1.0 / 6);
  EXPECT_NEAR(span_loss<double>({g.constant(uniform), g.constant(uniform)}, {0, 5}).value().item(), std::log(6.0),
              1e-12);
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    T64 s = random_tensor({6}, rng, 1.0), e = random_tensor({6}, rng, 1.0);
    double zs = 0, ze = 0;
    for (auto& v : s.data()) zs += (v = std::abs(v) + 0.01);
    for (auto& v : e.data()) ze += (v = std::abs(v) + 0.01);
    for (auto& v : s.data()) v /= zs;
    for (auto& v : e.data()) v /= ze;
    const Span truth{2, 4};
    EXPECT_NEAR(span_loss<double>({g.constant(s), g.constant(e)}, truth).value().item(),
                -0.5 * (std::log(s[2]) + std::log(e[4])), 1e-12);
  }
}

TEST(Localizer, SpanLossMonotoneInTruthMass) {
  G64 g;
  std::vector<double> base{0.1, 0.3, 0.2, 0.1, 0.2, 0.1};
  const T64 e = T64(ad::Shape{6}, std::vector<double>(base));
  double previous = 1e9;
  for (double moved = 0.0; moved <= 0.25; moved += 0.05) {
    auto s = base;
    s[1] -= moved;
    s[4] += moved;
    const double loss =
        span_loss<double>({g.constant(T64(ad::Shape{6}, s)), g.constant(e)}, {4, 4}).value().item();
    EXPECT_LT(loss, previous);
    previous = loss;
  }
}

TEST(Localizer, DecodeExamples) {
  std::vector<double> s(6, 0.02), e(6, 0.02);
  s[2] = 0.9;
  e[4] = 0.9;
  EXPECT_EQ(decode_span(s, e), (Span{2, 4}));
  std::vector<double> s2(6, 0.02), e2(6, 0.02);
  s2[4] = 0.9;
  e2[2] = 0.9;
  EXPECT_EQ(decode_span(s2, e2), oracle::best_span(s2, e2));
  const std::vector<double> u(6, 1.0 / 6);
  EXPECT_EQ(decode_span(u, u), (Span{0, 0}));
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> dist(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(6), b(6);
    for (auto& v : a) v = dist(rng);
    for (auto& v : b) v = dist(rng);
    const Span d = decode_span(a, b);
    EXPECT_EQ(d, oracle::best_span(a, b));
    EXPECT_LE(d.start, d.end);
  }
}

TEST(Localizer, IouExamplesAndOracle) {
  EXPECT_EQ(iou({1, 3}, {1, 3}), 1.0);
  EXPECT_EQ(iou({0, 1}, {3, 5}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 3}, {2, 5}), 2.0 / 6.0);
  std::mt19937_64 rng(35);
  std::uniform_int_distribution<std::size_t> pos(0, 5);
  std::vector<Span> preds, truths;
  double total = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t a = pos(rng), b = pos(rng), c = pos(rng), d = pos(rng);
    const Span x{std::min(a, b), std::max(a, b)}, y{std::min(c, d), std::max(c, d)};
    const double expect = oracle::iou(x, y);
    EXPECT_EQ(iou(x, y), expect);
    EXPECT_EQ(iou(x, y), iou(y, x));
    EXPECT_EQ(iou(x, y) == 1.0, x == y);
    for (bool correct : {true, false}) EXPECT_EQ(asa(correct, iou(x, y)), correct && expect >= 0.5);
    preds.push_back(x);
    truths.push_back(y);
    total += expect;
  }
  EXPECT_EQ(mean_iou(preds, truths), total / 200.0);
}

TEST(Localizer, AsaBoundary) {
  EXPECT_TRUE(asa(true, 0.5));
  EXPECT_FALSE(asa(true, 0.49));
  EXPECT_FALSE(asa(false, 1.0));
}

// ---------------------------------------------------------------- contrastive

TEST(Contrastive, ScoresExamples) {
  std::mt19937_64 rng(40);
  const T64 h = random_tensor({5, 4}, rng);
  G64 g;
  for (double v : values(contrastive_scores(g.constant(h), g.constant(T64(ad::Shape{1, 4}))))) EXPECT_EQ(v, 0.0);
  T64 eye({5, 5});
  for (std::size_t k = 0; k < 5; ++k) eye[k * 5 + k] = 1.0;
  T64 anchor({1, 5});
  anchor[2] = 1.0;
  EXPECT_EQ(values(contrastive_scores(g.constant(eye), g.constant(anchor))),
            (std::vector<double>{0, 0, 1, 0, 0}));
  const T64 a = random_tensor({1, 4}, rng);
  const auto s = values(contrastive_scores(g.constant(h), g.constant(a)));
  for (std::size_t n = 0; n < 5; ++n) {
    double dot = 0;
    for (std::size_t k = 0; k < 4; ++k) dot += h[n * 4 + k] * a[k];
    EXPECT_NEAR(s[n], dot, 1e-6);
  }
}

TEST(Contrastive, LossExamples) {
  G64 g;
  EXPECT_NEAR(contrastive_loss<double>(g.constant(T64(ad::Shape{5}, 0.7)), 3).value().item(), std::log(5.0), 1e-12);
  T64 s(ad::Shape{5});
  s[1] = 100.0;
  EXPECT_NEAR(contrastive_loss<double>(g.constant(s), 1).value().item(), 0.0, 1e-12);
}

TEST(Contrastive, PermutationInvariance) {
  std::mt19937_64 rng(41);
  const T64 h = random_tensor({5, 4}, rng), a = random_tensor({1, 4}, rng);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  T64 hp({5, 4});
  for (std::size_t n = 0; n < 5; ++n)
    for (std::size_t k = 0; k < 4; ++k) hp[n * 4 + k] = h[perm[n] * 4 + k];
  G64 g;
  const double l1 = contrastive_loss(contrastive_scores(g.constant(h), g.constant(a)), 4).value().item();
  const double l2 = contrastive_loss(contrastive_scores(g.constant(hp), g.constant(a)), 2).value().item();
  EXPECT_NEAR(l1, l2, 1e-12);
}

TEST(Contrastive, SelfSimilarityWithoutMasking) {
  T64 h({3, 2}, std::vector<double>{2, 0, 1, 1, 0, 1});
  T64 a({1, 2}, std::vector<double>{2, 0});
  G64 g;
  const auto s = values(contrastive_scores(g.constant(h), g.constant(a)));
  EXPECT_EQ(s[0], 4.0);
  EXPECT_EQ(std::max_element(s.begin(), s.end()) - s.begin(), 0);
}

TEST(Contrastive, UnmaskedAnchorEqualsPositiveRow) {
  const auto data = corpus::generate_synthetic(3, 1, corpus::Profile::kMixed);
  const auto& clip = data.clips[0];
  ModelConfig cfg;
  cfg.vocab_size = data.vocab.size();
  const auto params = init_parameters(cfg, 4).cast<double>();
  ExampleInput input;
  input.clip = &clip;
  input.target = clip.correct_index;
  for (const auto& a : clip.answers)
    for (std::size_t t = 0; t < 6; ++t)
      input.hypotheses.push_back(text::build({clip.question, a, clip.subtitles[t].tokens, clip.objects[t]}, {}));
  std::mt19937_64 rng(1);
  for (std::size_t t = 0; t < 6; ++t)
    input.anchor.push_back(text::mask_for_anchor(input.hypotheses[clip.correct_index * 6 + t], 0.0, rng));
  G64 g;
  Bound<double> p(g, params, false);
  const auto r = forward(p, cfg, input, {false, false});
  const auto anchor = values(encode_anchor(p, input.anchor));
  const auto pooled = values(r.pooled_text);
  const std::size_t d = anchor.size();
  for (std::size_t k = 0; k < d; ++k) EXPECT_EQ(anchor[k], pooled[clip.correct_index * d + k]);
}

TEST(Contrastive, FullMaskingIgnoresOriginalTokens) {
  const auto cfg = small_config();
  const auto params = random_params(cfg, 42);
  std::mt19937_64 rng(2);
  const auto a = text::mask_for_anchor(sequence({5, 6}, {7}, {8, 9}, {10}), 1.0, rng);
  const auto b = text::mask_for_anchor(sequence({15, 16}, {17}, {18, 19}, {20}), 1.0, rng);
  G64 g;
  Bound<double> p(g, params, false);
  const std::vector<text::TokenSequence> sa{a}, sb{b};
  EXPECT_EQ(values(encode_anchor(p, std::span<const text::TokenSequence>(sa))),
            values(encode_anchor(p, std::span<const text::TokenSequence>(sb))));
}

TEST(Contrastive, AnchorPathAloneReachesEmbeddings) {
  const auto cfg = small_config();
  const auto params = random_params(cfg, 43);
  std::mt19937_64 rng(3);
  const std::vector<text::TokenSequence> anchor{sequence({5, 6}, {7}, {8, 9}, {10}), sequence({5, 6}, {7}, {11}, {})};
  G64 g;
  Bound<double> p(g, params, true);
  const V64 pooled = g.constant(random_tensor({5, 2 * cfg.d_text}, rng));
  g.backward(contrastive_loss(contrastive_scores(pooled, encode_anchor(p, std::span<const text::TokenSequence>(anchor))), 1));
  const auto grad = g.grad(p("encoder.token"));
  ASSERT_FALSE(grad.empty());
  EXPECT_GT(std::accumulate(grad.begin(), grad.end(), 0.0, [](double s, double v) { return s + std::abs(v); }), 0.0);
}

TEST(Contrastive, GradientThroughBothEncoderPaths) {
  const auto data = corpus::generate_synthetic(4, 1, corpus::Profile::kTextOnly);
  const auto& clip = data.clips[0];
  ModelConfig cfg;
  cfg.vocab_size = data.vocab.size();
  cfg.d_text = 8;
  cfg.init_range = 0.3;
  cfg.d_visual = 48;
  const auto params = init_parameters(cfg, 5).cast<double>();
  ExampleInput input;
  input.clip = &clip;
  input.target = clip.correct_index;
  for (const auto& a : clip.answers)
    for (std::size_t t = 0; t < 6; ++t)
      input.hypotheses.push_back(text::build({clip.question, a, clip.subtitles[t].tokens, clip.objects[t]}, {}));
  std::mt19937_64 rng(4);
  for (std::size_t t = 0; t < 6; ++t)
    input.anchor.push_back(text::mask_for_anchor(input.hypotheses[clip.correct_index * 6 + t], 0.2, rng));
  std::vector<T64> tensors;
  for (std::size_t i = 0; i < params.size(); ++i) tensors.push_back(params[i]);
  ad::GradCheckOptions options;
  options.coords_per_param = 6;
  const auto r = ad::grad_check(
      [&](G64& g, std::span<const V64> vars) {
        Bound<double> p(g, params, vars);
        return *forward(p, cfg, input, {false, true}).contrastive_loss;
      },
      tensors, options);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(Separation, HandCases) {
  const auto same = nearest_negative({{1, 2}, {1, 2}, {5, 5}}, 0);
  EXPECT_EQ(same.euclidean, 0.0);
  EXPECT_NEAR(same.cosine, 0.0, 1e-15);
  const auto hand = nearest_negative({{1, 0}, {0, 1}, {-1, 0}}, 0);
  EXPECT_DOUBLE_EQ(hand.euclidean, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(hand.cosine, 1.0);
  const auto zero = nearest_negative({{0, 0}, {0, 1}}, 0);
  EXPECT_EQ(zero.cosine, 1.0);
}

TEST(Separation, MeanMatchesRecomputation) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> dist(-1, 1);
  std::vector<std::vector<std::vector<double>>> examples(30, std::vector<std::vector<double>>(5, std::vector<double>(4)));
  std::vector<std::size_t> positives;
  double e = 0, c = 0;
  for (auto& ex : examples) {
    for (auto& row : ex)
      for (auto& v : row) v = dist(rng);
    positives.push_back(positives.size() % 5);
    const auto s = nearest_negative(ex, positives.back());
    e += s.euclidean;
    c += s.cosine;
  }
  const auto mean = separation_report(examples, positives);
  EXPECT_EQ(mean.euclidean, e / 30);
  EXPECT_EQ(mean.cosine, c / 30);
}

// ---------------------------------------------------------------- checkpoints

TEST(Checkpoint, RoundTripExact) {
  ModelConfig cfg;
  cfg.vocab_size = 50;
  const auto params = init_parameters(cfg, 7);
  const auto path = std::filesystem::temp_directory_path() / "mcvqa_ckpt_roundtrip.ckpt";
  save_checkpoint(path, params, {architecture_hash(cfg), R"({"note":"x"})"});
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  const auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.params, params);
  EXPECT_EQ(loaded.header.architecture_hash, architecture_hash(cfg));
}

TEST(Checkpoint, HashTracksArchitecture) {
  ModelConfig a;
  a.vocab_size = 50;
  ModelConfig b = a;
  EXPECT_EQ(architecture_hash(a), architecture_hash(b));
  b.d_text = 16;
  EXPECT_NE(architecture_hash(a), architecture_hash(b));
}

TEST(Checkpoint, MissingFileIsCompatibilityError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/model.ckpt"), CompatibilityError);
}

TEST(Network, SameSeedSameParameters) {
  ModelConfig cfg;
  cfg.vocab_size = 30;
  EXPECT_EQ(init_parameters(cfg, 1), init_parameters(cfg, 1));
  EXPECT_FALSE(init_parameters(cfg, 1) == init_parameters(cfg, 2));
  const auto params = init_parameters(cfg, 1);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.name(i) == "encoder.scale") continue;
    for (float v : params[i].data()) EXPECT_LE(std::abs(v), 0.05f) << params.name(i);
  }
}
