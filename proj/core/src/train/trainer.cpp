// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mcvqa/error.hpp"
#include "mcvqa/model/contrastive.hpp"
#include "mcvqa/pretrain/pretrain.hpp"
#include "mcvqa/train/inputs.hpp"
#include "mcvqa/train/optimizer.hpp"

namespace mcvqa::train {
namespace {

using nlohmann::ordered_json;
using Params = model::ParameterSet<float>;

// Seeds of the per-stage sampling streams.
constexpr std::uint64_t kStageStream[] = {0x70726574726169ULL, 0x6d61696e737467ULL};

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(worker_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct ExampleGradient {
  std::vector<std::vector<float>> grads;
  double total = 0.0;
  double qa = 0.0;
  double span = 0.0;
  double cont = 0.0;
};

ExampleGradient example_gradient(const Params& params, const model::ModelConfig& mcfg,
                                 const model::ExampleInput& input, const TrainConfig& config,
                                 const model::ForwardOptions& heads) {
  ad::Graph<float> g;
  model::Bound<float> bound(g, params, true);
  const auto r = model::forward(bound, mcfg, input, heads);
  const auto loss = total_loss(r.qa_loss, r.span_loss, r.contrastive_loss, config);
  ExampleGradient out;
  out.total = loss.value().item();
  out.qa = r.qa_loss.value().item();
  if (r.span_loss) out.span = r.span_loss->value().item();
  if (r.contrastive_loss) out.cont = r.contrastive_loss->value().item();
  if (!std::isfinite(out.total)) return out;
  g.backward(loss);
  out.grads.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto grad = g.grad(bound.var(i));
    if (grad.empty()) {
      out.grads[i].assign(params[i].size(), 0.0f);
    } else {
      out.grads[i].assign(grad.begin(), grad.end());
    }
  }
  return out;
}

std::vector<std::vector<double>> rows_of(const ad::Tensor<float>& t) {
  const std::size_t n = t.dim(0);
  const std::size_t d = t.size() / n;
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) rows[i][k] = t[i * d + k];
  return rows;
}

std::vector<double> to_double(const ad::Tensor<float>& t) { return {t.storage().begin(), t.storage().end()}; }

ordered_json record_json(const EpochRecord& r) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["train_qa_loss"] = r.train_qa_loss;
  j["train_span_loss"] = r.train_span_loss;
  j["train_cont_loss"] = r.train_cont_loss;
  j["val_qa_loss"] = r.val_qa_loss;
  j["val_span_loss"] = r.val_span_loss;
  j["qa_acc"] = r.qa_acc;
  j["miou"] = r.miou;
  j["asa"] = r.asa;
  j["euclid_mean"] = r.euclid_mean;
  j["cosine_mean"] = r.cosine_mean;
  return j;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

std::string epoch_file(Stage stage, std::size_t epoch) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-epoch-%02zu.ckpt", to_string(stage).c_str(), epoch);
  return buf;
}

}  // namespace

std::string to_string(Stage stage) { return stage == Stage::kPretrain ? "pretrain" : "main"; }

template <typename Real>
ad::Var<Real> total_loss(ad::Var<Real> qa, std::optional<ad::Var<Real>> span, std::optional<ad::Var<Real>> cont,
                         const TrainConfig& config) {
  std::vector<ad::Var<Real>> terms{qa};
  std::vector<double> weights{config.lambda_qa};
  if (span && config.use_span_loss && config.lambda_span > 0) {
    terms.push_back(*span);
    weights.push_back(config.lambda_span);
  }
  if (cont && config.use_cont_loss && config.lambda_cont > 0) {
    terms.push_back(*cont);
    weights.push_back(config.lambda_cont);
  }
  return ad::weighted_sum<Real>(terms, weights);
}

template ad::Var<float> total_loss(ad::Var<float>, std::optional<ad::Var<float>>, std::optional<ad::Var<float>>,
                                   const TrainConfig&);
template ad::Var<double> total_loss(ad::Var<double>, std::optional<ad::Var<double>>, std::optional<ad::Var<double>>,
                                    const TrainConfig&);

double total_loss(double qa, double span, double cont, const TrainConfig& config) {
  double out = config.lambda_qa * qa;
  if (config.use_span_loss && config.lambda_span > 0) out += config.lambda_span * span;
  if (config.use_cont_loss && config.lambda_cont > 0) out += config.lambda_cont * cont;
  return out;
}

model::ForwardOptions training_heads(const TrainConfig& config) {
  model::ForwardOptions heads;
  heads.span_heads = config.use_span_loss && config.lambda_span > 0;
  heads.contrastive = config.use_cont_loss && config.lambda_cont > 0;
  return heads;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("MCVQA_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

EvalResult evaluate(const Params& params, const model::ModelConfig& config,
                    std::span<const model::ExampleInput> inputs, const EvalOptions& options) {
  struct One {
    std::size_t answer = 0;
    double qa_loss = 0.0;
    std::optional<model::Span> predicted;
    double span_loss = 0.0;
    std::vector<std::vector<double>> rows;
  };
  std::vector<One> results(inputs.size());
  const std::size_t diagnostic = std::min(options.diagnostic_examples, inputs.size());
  model::ForwardOptions heads;
  heads.span_heads = options.span_heads;
  parallel_for(inputs.size(), [&](std::size_t k) {
    ad::Graph<float> g;
    model::Bound<float> bound(g, params, false);
    const auto r = model::forward(bound, config, inputs[k], heads);
    const auto probs = r.probs.value().data();
    One& one = results[k];
    one.answer = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    one.qa_loss = r.qa_loss.value().item();
    if (r.span && inputs[k].span) {
      one.predicted = model::decode_span(to_double(r.span->start.value()), to_double(r.span->end.value()));
      one.span_loss = r.span_loss->value().item();
    }
    if (k < diagnostic) one.rows = rows_of(r.pooled_text.value());
  });

  EvalResult out;
  out.examples = inputs.size();
  if (inputs.empty()) return out;
  std::size_t correct = 0;
  std::size_t joint = 0;
  double iou_sum = 0.0;
  std::vector<std::vector<std::vector<double>>> rows;
  std::vector<std::size_t> positives;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const One& one = results[k];
    const bool right = one.answer == inputs[k].target;
    correct += right ? 1 : 0;
    out.qa_loss += one.qa_loss;
    out.answers.push_back(one.answer);
    if (one.predicted) {
      const double v = model::iou(*one.predicted, *inputs[k].span);
      iou_sum += v;
      joint += model::asa(right, v) ? 1 : 0;
      out.span_loss += one.span_loss;
      ++out.with_span;
    }
    if (k < diagnostic) {
      rows.push_back(one.rows);
      positives.push_back(inputs[k].target);
    }
  }
  const double n = static_cast<double>(inputs.size());
  out.qa_acc = correct / n;
  out.qa_loss /= n;
  if (out.with_span > 0) {
    out.miou = iou_sum / out.with_span;
    out.asa = static_cast<double>(joint) / out.with_span;
    out.span_loss /= out.with_span;
  }
  if (diagnostic > 0) out.separation = model::separation_report(rows, positives);
  return out;
}

std::vector<model::ExampleInput> evaluation_inputs(Stage stage, std::span<const corpus::ClipExample> clips,
                                                   std::span<const std::size_t> indices, const TrainConfig& config,
                                                   std::mt19937_64& rng) {
  const auto bopts = build_options(config);
  std::vector<model::ExampleInput> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (stage == Stage::kMain) {
      out.push_back(qa_input(clips[idx], bopts, false, 0.0, rng));
    } else {
      const auto candidates = pretrain::build_candidates(clips, indices, idx, rng, config.options);
      out.push_back(pretrain::pretrain_input(candidates, clips[idx], bopts, false, 0.0, rng));
    }
  }
  return out;
}

model::CheckpointHeader checkpoint_header(const TrainConfig& config, const corpus::Vocabulary& vocab, Stage stage,
                                          std::size_t epoch) {
  ordered_json meta;
  meta["stage"] = to_string(stage);
  meta["epoch"] = epoch;
  meta["config"] = ordered_json::parse(to_json(config));
  meta["vocabulary"] = vocab.tokens();
  model::CheckpointHeader header;
  header.architecture_hash = model::architecture_hash(model_config(config, vocab.size()));
  header.metadata = meta.dump();
  return header;
}

corpus::Vocabulary checkpoint_vocabulary(const model::CheckpointHeader& header) {
  const auto meta = ordered_json::parse(header.metadata);
  if (!meta.contains("vocabulary")) throw CompatibilityError("checkpoint carries no vocabulary");
  const auto tokens = meta["vocabulary"].get<std::vector<std::string>>();
  corpus::Vocabulary vocab;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (vocab.add(tokens[i]) != i) throw CompatibilityError("checkpoint vocabulary is inconsistent at id " + std::to_string(i));
  }
  return vocab;
}

TrainConfig checkpoint_config(const model::CheckpointHeader& header) {
  const auto meta = ordered_json::parse(header.metadata);
  if (!meta.contains("config")) throw CompatibilityError("checkpoint carries no config");
  return from_json(meta["config"].dump());
}

StageResult train_stage(const corpus::Dataset& data, const corpus::Split& split, const TrainConfig& config,
                        Stage stage, const Params& init, const StageOptions& options) {
  validate(config);
  StageResult result{init, {}};
  result.report.stage = stage;
  const std::size_t epochs = stage == Stage::kPretrain ? config.epochs_pretrain : config.epochs_main;
  if (epochs == 0) return result;
  if (split.train.empty()) throw ValidationError("training split is empty");

  const auto& clips = data.clips;
  const auto mcfg = model_config(config, data.vocab.size());
  const auto heads = training_heads(config);
  const auto bopts = build_options(config);
  std::mt19937_64 rng(config.seed ^ kStageStream[stage == Stage::kMain ? 1 : 0]);
  const auto val_inputs = evaluation_inputs(stage, clips, split.validation, config, rng);
  EvalOptions eval_options;
  eval_options.diagnostic_examples = config.diagnostic_examples;
  Params& params = result.params;
  Adam adam(params, {stage == Stage::kPretrain ? config.lr_pretrain : config.lr_main, config.adam_beta1,
                     config.adam_beta2, config.adam_epsilon});
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  auto record_eval = [&](EpochRecord& rec) {
    const auto ev = evaluate(params, mcfg, val_inputs, eval_options);
    rec.val_qa_loss = ev.qa_loss;
    rec.val_span_loss = ev.span_loss;
    rec.qa_acc = ev.qa_acc;
    rec.miou = ev.miou;
    rec.asa = ev.asa;
    if (ev.separation) {
      rec.euclid_mean = ev.separation->euclidean;
      rec.cosine_mean = ev.separation->cosine;
    }
  };

  using Clock = std::chrono::steady_clock;
  auto started = Clock::now();
  EpochRecord initial;
  record_eval(initial);
  initial.seconds = std::chrono::duration<double>(Clock::now() - started).count();
  result.report.epochs.push_back(initial);
  spdlog::info("{} epoch 0: val acc {:.4f}", to_string(stage), initial.qa_acc);

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    started = Clock::now();
    std::vector<std::size_t> order = split.train;
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t begin = 0, batch = 0; begin < order.size(); begin += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<model::ExampleInput> inputs;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx = order[k];
        if (stage == Stage::kMain) {
          inputs.push_back(qa_input(clips[idx], bopts, heads.contrastive, config.mask_p, rng));
        } else {
          const auto candidates = pretrain::build_candidates(clips, split.train, idx, rng, config.options);
          inputs.push_back(
              pretrain::pretrain_input(candidates, clips[idx], bopts, heads.contrastive, config.mask_p, rng));
        }
      }
      std::vector<ExampleGradient> grads(inputs.size());
      parallel_for(inputs.size(),
                   [&](std::size_t k) { grads[k] = example_gradient(params, mcfg, inputs[k], config, heads); });

      for (const auto& eg : grads) {
        if (std::isfinite(eg.total)) continue;
        ordered_json failed;
        failed["stage"] = to_string(stage);
        failed["epoch"] = epoch;
        failed["batch"] = batch;
        std::vector<std::string> ids;
        for (std::size_t k = begin; k < end; ++k) ids.push_back(clips[order[k]].clip_id);
        failed["clip_ids"] = ids;
        if (!options.checkpoint_dir.empty()) write_text(options.checkpoint_dir / "failed_batch.json", failed.dump(2));
        throw NumericError("non-finite loss in " + to_string(stage) + " epoch " + std::to_string(epoch) +
                           " batch " + std::to_string(batch) + ": " + failed["clip_ids"].dump());
      }

      std::vector<std::vector<float>> sum(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) sum[i].assign(params[i].size(), 0.0f);
      const float inv = 1.0f / static_cast<float>(grads.size());
      for (const auto& eg : grads) {
        for (std::size_t i = 0; i < params.size(); ++i)
          for (std::size_t k = 0; k < sum[i].size(); ++k) sum[i][k] += eg.grads[i][k] * inv;
        rec.train_loss += eg.total;
        rec.train_qa_loss += eg.qa;
        rec.train_span_loss += eg.span;
        rec.train_cont_loss += eg.cont;
      }
      if (config.clip_norm > 0) clip_global_norm(sum, config.clip_norm);
      adam.step(params, sum);
    }
    const double n = static_cast<double>(order.size());
    rec.train_loss /= n;
    rec.train_qa_loss /= n;
    rec.train_span_loss /= n;
    rec.train_cont_loss /= n;
    record_eval(rec);
    rec.seconds = std::chrono::duration<double>(Clock::now() - started).count();
    result.report.epochs.push_back(rec);
    spdlog::info("{} epoch {}: train loss {:.4f}, val acc {:.4f}, miou {:.4f} ({:.1f}s)", to_string(stage), epoch,
                 rec.train_loss, rec.qa_acc, rec.miou, rec.seconds);
    if (!options.checkpoint_dir.empty()) {
      model::save_checkpoint(options.checkpoint_dir / epoch_file(stage, epoch), params,
                             checkpoint_header(config, data.vocab, stage, epoch));
    }
    if (stage == Stage::kMain && config.stop_at_accuracy > 0 && rec.qa_acc >= config.stop_at_accuracy) {
      result.report.stopped_early = epoch < epochs;
      break;
    }
  }
  return result;
}

RunResult run_training(const corpus::Dataset& data, const TrainConfig& config,
                       const std::optional<model::LoadedCheckpoint>& init, const std::filesystem::path& out_dir) {
  validate(config);
  const auto split = corpus::split_by_hash(data.clips, config.validation_fraction);
  const auto mcfg = model_config(config, data.vocab.size());
  StageOptions stage_options;
  if (!out_dir.empty()) stage_options.checkpoint_dir = out_dir / "checkpoints";

  RunResult out{{}, {config, {}}};
  Params params;
  if (init) {
    params = pretrain::transfer_weights(*init, mcfg);
  } else {
    params = model::init_parameters(mcfg, config.seed);
    if (config.use_pretrain && config.epochs_pretrain > 0) {
      auto pre = train_stage(data, split, config, Stage::kPretrain, params, stage_options);
      model::LoadedCheckpoint ck{checkpoint_header(config, data.vocab, Stage::kPretrain, config.epochs_pretrain),
                                 std::move(pre.params)};
      if (!out_dir.empty()) model::save_checkpoint(out_dir / "pretrained.ckpt", ck.params, ck.header);
      params = pretrain::transfer_weights(ck, mcfg);
      out.report.stages.push_back(std::move(pre.report));
    }
  }
  auto main = train_stage(data, split, config, Stage::kMain, params, stage_options);
  out.params = std::move(main.params);
  out.report.stages.push_back(std::move(main.report));
  if (!out_dir.empty()) {
    model::save_checkpoint(out_dir / "model.ckpt", out.params,
                           checkpoint_header(config, data.vocab, Stage::kMain, out.report.stages.back().epochs.size()));
    data.vocab.save(out_dir / "vocab.txt");
    write_text(out_dir / "report.json", out.report.to_json());
    write_text(out_dir / "metrics.csv", out.report.metrics_csv());
    write_text(out_dir / "distances.csv", out.report.distances_csv());
    write_text(out_dir / "timing.json", out.report.timing_json());
  }
  return out;
}

const EpochRecord* RunReport::final_record() const {
  for (auto it = stages.rbegin(); it != stages.rend(); ++it)
    if (!it->epochs.empty()) return &it->epochs.back();
  return nullptr;
}

std::string RunReport::to_json() const {
  ordered_json j;
  j["config"] = ordered_json::parse(train::to_json(config));
  j["config_hash"] = config_hash(config);
  j["stages"] = ordered_json::array();
  for (const auto& s : stages) {
    ordered_json st;
    st["stage"] = to_string(s.stage);
    st["stopped_early"] = s.stopped_early;
    st["epochs"] = ordered_json::array();
    for (const auto& r : s.epochs) st["epochs"].push_back(record_json(r));
    j["stages"].push_back(st);
  }
  if (const auto* last = final_record()) {
    j["final"] = {{"qa_acc", last->qa_acc}, {"miou", last->miou}, {"asa", last->asa}};
  } else {
    j["final"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string RunReport::timing_json() const {
  ordered_json j = ordered_json::object();
  double total = 0.0;
  for (const auto& s : stages) {
    std::vector<double> secs;
    for (const auto& r : s.epochs) {
      secs.push_back(r.seconds);
      total += r.seconds;
    }
    j[to_string(s.stage)] = secs;
  }
  j["total_seconds"] = total;
  return j.dump(2) + "\n";
}

std::string RunReport::metrics_csv() const {
  std::ostringstream out;
  out << "stage,epoch,train_loss,train_qa_loss,train_span_loss,train_cont_loss,val_qa_loss,val_span_loss,qa_acc,"
         "miou,asa\n";
  for (const auto& s : stages) {
    for (const auto& r : s.epochs) {
      out << to_string(s.stage) << ',' << r.epoch;
      for (double v : {r.train_loss, r.train_qa_loss, r.train_span_loss, r.train_cont_loss, r.val_qa_loss,
                       r.val_span_loss, r.qa_acc, r.miou, r.asa})
        out << ',' << format_number(v);
      out << '\n';
    }
  }
  return out.str();
}

std::string RunReport::distances_csv() const {
  std::ostringstream out;
  out << "epoch,lambda_cont,euclid_mean,cosine_mean,seed\n";
  if (stages.empty()) return out.str();
  const double lambda = config.use_cont_loss ? config.lambda_cont : 0.0;
  for (const auto& r : stages.back().epochs) {
    out << r.epoch << ',' << format_number(lambda) << ',' << format_number(r.euclid_mean) << ','
        << format_number(r.cosine_mean) << ',' << config.seed << '\n';
  }
  return out.str();
}

std::vector<AblationRow> ablation_rows(const TrainConfig& base) {
  std::vector<AblationRow> rows;
  auto add = [&](std::string label, model::AttentionMode mode, bool span, bool mt, bool cont, bool pre) {
    TrainConfig c = base;
    c.attention_mode = mode;
    c.use_span_loss = span;
    c.use_multi_token_type = mt;
    c.use_cont_loss = cont;
    c.use_pretrain = pre;
    rows.push_back({std::move(label), c, {}, 0.0, 0.0});
  };
  using model::AttentionMode;
  add("(1) GA", AttentionMode::kGlobal, false, false, false, false);
  add("(2) GA+TL", AttentionMode::kGlobal, true, false, false, false);
  add("(3) GA+TL+MT", AttentionMode::kGlobal, true, true, false, false);
  add("(4) LA", AttentionMode::kLocal, false, false, false, false);
  add("(5) LA+TL", AttentionMode::kLocal, true, false, false, false);
  add("(6) LA+TL+MT", AttentionMode::kLocal, true, true, false, false);
  add("(7) LA+TL+MT+CL", AttentionMode::kLocal, true, true, true, false);
  add("(8) LA+TL+MT+CL+SS", AttentionMode::kLocal, true, true, true, true);
  return rows;
}

std::vector<AblationRow> ablation_suite(const corpus::Dataset& data, const TrainConfig& base,
                                        std::span<const std::uint64_t> seeds, std::span<const std::size_t> rows) {
  auto all = ablation_rows(base);
  std::vector<AblationRow> out;
  for (std::size_t r = 0; r < all.size(); ++r) {
    if (!rows.empty() && std::find(rows.begin(), rows.end(), r + 1) == rows.end()) continue;
    AblationRow row = all[r];
    for (std::uint64_t seed : seeds) {
      TrainConfig c = row.config;
      c.seed = seed;
      const auto run = run_training(data, c);
      row.accuracies.push_back(run.report.final_record()->qa_acc);
      spdlog::info("{} seed {}: {:.4f}", row.label, seed, row.accuracies.back());
    }
    const double n = static_cast<double>(row.accuracies.size());
    for (double a : row.accuracies) row.mean += a / n;
    if (row.accuracies.size() > 1) {
      double ss = 0.0;
      for (double a : row.accuracies) ss += (a - row.mean) * (a - row.mean);
      row.stdev = std::sqrt(ss / (n - 1));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string ablation_table(std::span<const AblationRow> rows) {
  std::ostringstream out;
  char buf[128];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%-22s %6.2f ± %.2f\n", row.label.c_str(), 100.0 * row.mean, 100.0 * row.stdev);
    out << buf;
  }
  return out.str();
}

}  // namespace mcvqa::train
