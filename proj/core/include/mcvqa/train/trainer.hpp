// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcvqa/autodiff/ops.hpp"
#include "mcvqa/corpus/clip.hpp"
#include "mcvqa/model/contrastive.hpp"
#include "mcvqa/model/network.hpp"
#include "mcvqa/train/config.hpp"

namespace mcvqa::train {

enum class Stage { kPretrain, kMain };
std::string to_string(Stage stage);

/// Weighted sum of the enabled loss terms. Absent terms add nothing.
template <typename Real>
ad::Var<Real> total_loss(ad::Var<Real> qa, std::optional<ad::Var<Real>> span, std::optional<ad::Var<Real>> cont,
                         const TrainConfig& config);
double total_loss(double qa, double span, double cont, const TrainConfig& config);

/// Which auxiliary heads the training graph builds.
model::ForwardOptions training_heads(const TrainConfig& config);

/// Worker threads for example-level parallelism: MCVQA_THREADS when set,
/// otherwise the hardware concurrency.
std::size_t worker_threads();

struct EvalOptions {
  /// Run the span heads to report mIoU and ASA.
  bool span_heads = true;
  /// Nearest-negative distances over the first this-many examples.
  std::size_t diagnostic_examples = 0;
};

struct EvalResult {
  double qa_acc = 0.0;
  double miou = 0.0;
  double asa = 0.0;
  double qa_loss = 0.0;
  double span_loss = 0.0;
  std::size_t examples = 0;
  std::size_t with_span = 0;
  std::vector<std::size_t> answers;
  std::optional<model::Separation> separation;
};

/// Scores prepared inputs with the QA path; span heads only feed metrics.
EvalResult evaluate(const model::ParameterSet<float>& params, const model::ModelConfig& config,
                    std::span<const model::ExampleInput> inputs, const EvalOptions& options);

/// Unmasked inputs for evaluation. Pre-training draws candidate questions
/// from `rng` among `indices`; the main stage draws nothing.
std::vector<model::ExampleInput> evaluation_inputs(Stage stage, std::span<const corpus::ClipExample> clips,
                                                   std::span<const std::size_t> indices, const TrainConfig& config,
                                                   std::mt19937_64& rng);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_qa_loss = 0.0;
  double train_span_loss = 0.0;
  double train_cont_loss = 0.0;
  double val_qa_loss = 0.0;
  double val_span_loss = 0.0;
  double qa_acc = 0.0;
  double miou = 0.0;
  double asa = 0.0;
  double euclid_mean = 0.0;
  double cosine_mean = 0.0;
  double seconds = 0.0;
};

struct StageReport {
  Stage stage = Stage::kMain;
  /// Entry 0 evaluates the initial parameters; entry k follows epoch k.
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
};

struct RunReport {
  TrainConfig config;
  std::vector<StageReport> stages;

  /// Deterministic summary; wall times are left out.
  std::string to_json() const;
  std::string timing_json() const;
  std::string metrics_csv() const;
  std::string distances_csv() const;
  /// Last evaluation of the last stage.
  const EpochRecord* final_record() const;
};

struct StageOptions {
  /// Directory for per-epoch checkpoints; empty disables writing.
  std::filesystem::path checkpoint_dir;
};

struct StageResult {
  model::ParameterSet<float> params;
  StageReport report;
};

/// Optimises one stage over `split.train` and evaluates on `split.validation`
/// after every epoch. Throws NumericError on a non-finite batch loss after
/// writing the batch to `failed_batch.json` in the checkpoint directory.
StageResult train_stage(const corpus::Dataset& data, const corpus::Split& split, const TrainConfig& config,
                        Stage stage, const model::ParameterSet<float>& init, const StageOptions& options = {});

struct RunResult {
  model::ParameterSet<float> params;
  RunReport report;
};

/// Optional pre-training then the main stage. `init` replaces fresh
/// initialisation and skips pre-training.
RunResult run_training(const corpus::Dataset& data, const TrainConfig& config,
                       const std::optional<model::LoadedCheckpoint>& init = std::nullopt,
                       const std::filesystem::path& out_dir = {});

/// Checkpoint header carrying the architecture hash, stage, epoch, config and vocabulary.
model::CheckpointHeader checkpoint_header(const TrainConfig& config, const corpus::Vocabulary& vocab,
                                          Stage stage, std::size_t epoch);
/// Vocabulary stored in a checkpoint header.
corpus::Vocabulary checkpoint_vocabulary(const model::CheckpointHeader& header);
/// Training config stored in a checkpoint header.
TrainConfig checkpoint_config(const model::CheckpointHeader& header);

struct AblationRow {
  std::string label;
  TrainConfig config;
  std::vector<double> accuracies;
  double mean = 0.0;
  double stdev = 0.0;
};

/// The eight ablation configurations in table order: global attention base,
/// +span, +type scales, then local attention base, +span, +type scales,
/// +contrastive, +pre-training.
std::vector<AblationRow> ablation_rows(const TrainConfig& base);

/// Trains every row for every seed and fills accuracies with the final
/// validation accuracy. `rows` selects a subset by 1-based row number.
std::vector<AblationRow> ablation_suite(const corpus::Dataset& data, const TrainConfig& base,
                                        std::span<const std::uint64_t> seeds,
                                        std::span<const std::size_t> rows = {});
std::string ablation_table(std::span<const AblationRow> rows);

}  // namespace mcvqa::train
