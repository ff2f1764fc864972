// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mcvqa/corpus/clip.hpp"
#include "mcvqa/corpus/synthetic.hpp"
#include "mcvqa/error.hpp"
#include "mcvqa/model/parameters.hpp"
#include "mcvqa/pretrain/pretrain.hpp"
#include "mcvqa/train/config.hpp"
#include "mcvqa/train/diagnostics.hpp"
#include "mcvqa/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace mcvqa;

namespace {

train::TrainConfig config_from(const std::string& path, const std::string& preset_name) {
  return path.empty() ? train::preset(preset_name) : train::load_config(path);
}

corpus::ClipLimits limits_for(const train::TrainConfig& c) {
  corpus::ClipLimits limits;
  limits.options = c.options;
  limits.segments = c.segments;
  limits.frames_per_segment = c.frames;
  limits.frame_dim = c.d_visual;
  return limits;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple-choice video QA trainer"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  std::uint64_t gen_seed = 0;
  std::size_t n_clips = 3000;
  std::string profile = "mixed";
  std::string gen_out;
  gen->add_option("--seed", gen_seed);
  gen->add_option("--n-clips", n_clips);
  gen->add_option("--profile", profile)->check(CLI::IsMember({"text_only", "visual_local", "mixed"}));
  gen->add_option("--out", gen_out)->required();

  // pretrain / train
  std::string data_path, config_path, preset_name = "toy", out_dir, init_path;
  std::optional<std::uint64_t> seed_override;
  auto* pre = app.add_subcommand("pretrain", "Question-prediction pre-training");
  pre->add_option("--data", data_path)->required();
  pre->add_option("--config", config_path);
  pre->add_option("--preset", preset_name);
  pre->add_option("--seed", seed_override);
  pre->add_option("--out", out_dir)->required();

  auto* tr = app.add_subcommand("train", "Main-stage QA training");
  tr->add_option("--data", data_path)->required();
  tr->add_option("--config", config_path);
  tr->add_option("--preset", preset_name);
  tr->add_option("--seed", seed_override);
  tr->add_option("--init", init_path, "Pre-trained checkpoint");
  tr->add_option("--out", out_dir)->required();

  // eval
  std::string ckpt_path, split_name = "validation";
  bool no_span = false;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--ckpt", ckpt_path)->required();
  ev->add_option("--data", data_path)->required();
  ev->add_option("--split", split_name)->check(CLI::IsMember({"train", "validation", "all"}));
  ev->add_flag("--no-span", no_span, "Skip the span heads");

  // gradcheck
  std::string op_name;
  bool full_model = false;
  std::optional<std::size_t> coords;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gc->add_option("--op", op_name, "Single op; omit for every op");
  gc->add_flag("--full-model", full_model, "Whole toy model with all losses");
  gc->add_option("--coords", coords, "Probed coordinates per parameter tensor, 0 for all (default 16)");
  gc->add_option("--seed", gen_seed);

  // report-distances
  auto* rd = app.add_subcommand("report-distances", "Nearest-negative distances of a checkpoint");
  rd->add_option("--ckpt", ckpt_path)->required();
  rd->add_option("--data", data_path)->required();

  // ablate
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<std::size_t> rows;
  auto* ab = app.add_subcommand("ablate", "Ablation table over seeds");
  ab->add_option("--data", data_path)->required();
  ab->add_option("--config", config_path);
  ab->add_option("--preset", preset_name);
  ab->add_option("--seeds", seeds)->delimiter(',');
  ab->add_option("--rows", rows, "1-based rows to run")->delimiter(',');
  ab->add_option("--out", out_dir);

  // print-config
  auto* pc = app.add_subcommand("print-config", "Print a preset as a config file");
  pc->add_option("--preset", preset_name);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*gen) {
      const auto data = corpus::generate_synthetic(gen_seed, n_clips, corpus::profile_from_string(profile));
      corpus::save_jsonl(gen_out, data.clips, data.vocab);
      std::cout << "wrote " << data.clips.size() << " clips to " << gen_out << "\n";
    } else if (*pre || *tr) {
      auto config = config_from(config_path, preset_name);
      if (seed_override) config.seed = *seed_override;
      const auto data = corpus::load_dataset(data_path, limits_for(config));
      fs::create_directories(out_dir);
      if (*pre) {
        const auto split = corpus::split_by_hash(data.clips, config.validation_fraction);
        const auto init = model::init_parameters(train::model_config(config, data.vocab.size()), config.seed);
        train::StageOptions options{fs::path(out_dir) / "checkpoints"};
        const auto result = train::train_stage(data, split, config, train::Stage::kPretrain, init, options);
        model::save_checkpoint(fs::path(out_dir) / "pretrained.ckpt", result.params,
                               train::checkpoint_header(config, data.vocab, train::Stage::kPretrain,
                                                        config.epochs_pretrain));
        train::RunReport report{config, {result.report}};
        write_file(fs::path(out_dir) / "report.json", report.to_json());
        write_file(fs::path(out_dir) / "metrics.csv", report.metrics_csv());
        write_file(fs::path(out_dir) / "timing.json", report.timing_json());
        if (const auto* last = report.final_record()) std::printf("question accuracy %.4f\n", last->qa_acc);
      } else {
        std::optional<model::LoadedCheckpoint> init;
        if (!init_path.empty()) init = model::load_checkpoint(init_path);
        const auto run = train::run_training(data, config, init, out_dir);
        if (const auto* last = run.report.final_record()) {
          std::printf("qa_acc %.4f miou %.4f asa %.4f\n", last->qa_acc, last->miou, last->asa);
        }
      }
    } else if (*ev || *rd) {
      const auto ck = model::load_checkpoint(ckpt_path);
      const auto config = train::checkpoint_config(ck.header);
      auto vocab = train::checkpoint_vocabulary(ck.header);
      auto clips = corpus::load_jsonl(data_path, vocab, false, limits_for(config));
      const auto mcfg = train::model_config(config, vocab.size());
      const auto params = pretrain::transfer_weights(ck, mcfg);
      const auto split = corpus::split_by_hash(clips, config.validation_fraction);
      std::vector<std::size_t> indices;
      if (*rd || split_name == "validation") {
        indices = split.validation;
      } else if (split_name == "train") {
        indices = split.train;
      } else {
        for (std::size_t i = 0; i < clips.size(); ++i) indices.push_back(i);
      }
      std::mt19937_64 rng(config.seed);
      const auto inputs = train::evaluation_inputs(train::Stage::kMain, clips, indices, config, rng);
      train::EvalOptions options;
      options.span_heads = !no_span && !*rd;
      if (*rd) options.diagnostic_examples = config.diagnostic_examples;
      const auto result = train::evaluate(params, mcfg, inputs, options);
      nlohmann::ordered_json j;
      if (*rd) {
        j["examples"] = std::min(config.diagnostic_examples, inputs.size());
        j["euclid_mean"] = result.separation->euclidean;
        j["cosine_mean"] = result.separation->cosine;
      } else {
        j["examples"] = result.examples;
        j["qa_acc"] = result.qa_acc;
        if (options.span_heads) {
          j["miou"] = result.miou;
          j["asa"] = result.asa;
        }
      }
      std::cout << j.dump(2) << "\n";
    } else if (*gc) {
      if (full_model) {
        train::FullModelCheck options;
        options.seed = gen_seed;
        if (coords) options.coords_per_param = *coords == 0 ? std::nullopt : coords;
        const auto r = train::full_model_grad_check(options);
        std::printf("full-model max rel-err %.3e over %zu probes (%s)\n", r.max_rel_error, r.probes,
                    r.parameter.c_str());
        return r.max_rel_error < 1e-4 ? 0 : 1;
      }
      bool ok = true;
      for (const auto& r : train::op_grad_checks(gen_seed)) {
        if (!op_name.empty() && r.name != op_name) continue;
        std::printf("%-14s max rel-err %.3e\n", r.name.c_str(), r.max_rel_error);
        ok = ok && r.max_rel_error < 1e-6;
      }
      return ok ? 0 : 1;
    } else if (*ab) {
      const auto config = config_from(config_path, preset_name);
      const auto data = corpus::load_dataset(data_path, limits_for(config));
      const auto result = train::ablation_suite(data, config, seeds, rows);
      const auto table = train::ablation_table(result);
      std::cout << table;
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "ablation.txt", table);
      }
    } else if (*pc) {
      std::cout << train::to_json(train::preset(preset_name)) << "\n";
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
