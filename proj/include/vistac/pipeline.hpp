#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "vistac/harness.hpp"

namespace vistac::harness {

// Desk-scale defaults: 8 scenes x 250 pairs, 64 px images, B = 128. The
// whole pipeline fits a laptop-class CPU budget.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int scenes = 8;
  int max_pairs_per_scene = 250;
  int encoder_epochs = 30;
  int rotation_epochs = 15;
  int encoder_batch = 128;
  int rotation_batch = 32;
  std::vector<int> stage_channels = {16, 32, 64, 128};
  int embedding_dim = 8;
  int trials = 10;
  double knot_diameter = 0.003;
  unsigned threads = 2;
  bool dry_run = false;
  bool quiet = false;
};

inline json to_json(const PipelineConfig& c) {
  return json{{"seed", c.seed},
              {"scenes", c.scenes},
              {"max_pairs_per_scene", c.max_pairs_per_scene},
              {"encoder_epochs", c.encoder_epochs},
              {"rotation_epochs", c.rotation_epochs},
              {"encoder_batch", c.encoder_batch},
              {"rotation_batch", c.rotation_batch},
              {"stage_channels", c.stage_channels},
              {"embedding_dim", c.embedding_dim},
              {"trials", c.trials},
              {"knot_diameter", c.knot_diameter}};
}

inline const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> stages{
      "collect",  "train-encoders", "train-rotation", "anomaly",
      "search",   "servo",          "localize",       "classify"};
  return stages;
}

struct PipelineResult {
  std::vector<std::string> stages_run;
  json summary = json::object();
  std::uint64_t pipeline_hash = 0;
  // in-memory handles for callers that keep going (the acceptance suite)
  enc::TrainedEncoders encoders;
  rot::TrainedRotationNet rotation;
  std::vector<MetricsReport> reports;
};

// stage helpers shared by the pipeline and the CLI subcommands

inline data::DatasetManifest stage_collect(const PipelineConfig& cfg,
                                           const std::string& dataset_dir) {
  std::vector<sim::SurfaceScene> scenes;
  const sim::SceneConfig scene_cfg = training_scene_config();
  for (int s = 0; s < cfg.scenes; ++s)
    scenes.push_back(sim::generate_scene(derive_seed(cfg.seed, 0x5c, std::uint64_t(s)),
                                         scene_cfg));
  data::CollectConfig cc;
  cc.max_pairs_per_scene = cfg.max_pairs_per_scene;
  cc.threads = cfg.threads;
  return data::collect_dataset(scenes, derive_seed(cfg.seed, 0xda7a), cc, dataset_dir);
}

inline enc::TrainedEncoders stage_train_encoders(const PipelineConfig& cfg,
                                                 const enc::TrainingSet& set,
                                                 std::ostream* progress) {
  enc::TrainConfig tc;
  tc.batch_size = cfg.encoder_batch;
  tc.epochs = cfg.encoder_epochs;
  tc.seed = derive_seed(cfg.seed, 0xe0c);
  tc.stage_channels = cfg.stage_channels;
  tc.embedding_dim = cfg.embedding_dim;
  return enc::train_encoders(set, tc, enc::AugmentationConfig{}, progress);
}

inline rot::TrainedRotationNet stage_train_rotation(const PipelineConfig& cfg,
                                                    const enc::TrainingSet& set,
                                                    std::ostream* progress) {
  rot::RotationTrainConfig rc;
  rc.batch_size = cfg.rotation_batch;
  rc.epochs = cfg.rotation_epochs;
  rc.seed = derive_seed(cfg.seed, 0x407);
  rc.stage_channels = cfg.stage_channels;
  return rot::train_rotation(set, rc, enc::AugmentationConfig{}, progress);
}

// collect -> train encoders -> train rotation -> all five tasks; any stage
// failure aborts with the stage name attached
inline PipelineResult end_to_end_pipeline(const PipelineConfig& cfg) {
  PipelineResult result;
  if (cfg.dry_run) {
    result.summary["stages"] = pipeline_stages();
    result.summary["dry_run"] = true;
    return result;
  }
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::ostream* progress = cfg.quiet ? nullptr : &std::cout;
  auto note = [&](const std::string& stage) {
    if (!cfg.quiet) std::cout << "[pipeline] " << stage << "\n";
    result.stages_run.push_back(stage);
  };

  json artifacts = json::object();
  enc::TrainingSet set;
  try {
    note("collect");
    const std::string dataset_dir = cfg.out_dir + "/dataset";
    const auto manifest = stage_collect(cfg, dataset_dir);
    artifacts["dataset"] = dataset_dir + "/manifest.jsonl";
    artifacts["pairs"] = manifest.records.size();
    set = enc::load_training_set(manifest, cfg.threads);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage collect: ") + e.what());
  }

  try {
    note("train-encoders");
    result.encoders = stage_train_encoders(cfg, set, progress);
    enc::save_encoders(result.encoders.params, cfg.out_dir + "/encoders",
                       json{{"seed", cfg.seed}});
    enc::write_train_log(result.encoders.log, cfg.out_dir + "/encoders/train_log.jsonl");
    artifacts["encoders"] = cfg.out_dir + "/encoders";
    artifacts["holdout_top1_32way"] = result.encoders.holdout_top1;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage train-encoders: ") + e.what());
  }

  try {
    note("train-rotation");
    result.rotation = stage_train_rotation(cfg, set, progress);
    rot::save_rotation_net(result.rotation.params, cfg.out_dir + "/rotation.ckpt",
                           json{{"seed", cfg.seed}});
    rot::write_rotation_log(result.rotation.log, cfg.out_dir + "/rotation_log.jsonl");
    artifacts["rotation"] = cfg.out_dir + "/rotation.ckpt";
    artifacts["rotation_holdout_pm1"] = result.rotation.holdout_pm1;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage train-rotation: ") + e.what());
  }

  auto run_stage = [&](const std::string& name, auto&& fn) {
    try {
      note(name);
      MetricsReport report = fn();
      save_report(report, cfg.out_dir + "/reports", render_table(report));
      result.reports.push_back(std::move(report));
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + name + ": " + e.what());
    }
  };

  run_stage("anomaly", [&] {
    AnomalyExperimentConfig ec;
    ec.trials = cfg.trials;
    ec.seed = derive_seed(cfg.seed, 0x1a);
    ec.knot_diameter = cfg.knot_diameter;
    ec.threads = cfg.threads;
    return run_anomaly_experiment(result.encoders.params, ec);
  });
  run_stage("search", [&] {
    SearchExperimentConfig ec;
    ec.trials = cfg.trials;
    ec.seed = derive_seed(cfg.seed, 0x2a);
    ec.threads = cfg.threads;
    return run_search_experiment(result.encoders.params, ec);
  });
  run_stage("servo", [&] {
    ServoExperimentConfig ec;
    ec.trials = cfg.trials;
    ec.seed = derive_seed(cfg.seed, 0x3a);
    ec.threads = cfg.threads;
    return run_servo_experiment(result.rotation.params, ec);
  });
  run_stage("localize", [&] {
    LocalizeExperimentConfig ec;
    ec.trials = cfg.trials;
    ec.seed = derive_seed(cfg.seed, 0x4a);
    ec.threads = cfg.threads;
    ec.heatmap_dir = cfg.out_dir + "/heatmap";
    return run_localize_experiment(result.encoders.params, ec);
  });
  run_stage("classify", [&] {
    ClassifyExperimentConfig ec;
    ec.seed = derive_seed(cfg.seed, 0x5a);
    ec.threads = cfg.threads;
    return run_classify_experiment(result.encoders.params, ec);
  });

  std::uint64_t h = fnv1a(std::string("vistac-pipeline"));
  json report_hashes = json::object();
  for (const auto& r : result.reports) {
    h = fnv1a(hex64(r.report_hash), h);
    report_hashes[r.task] = hex64(r.report_hash);
  }
  result.pipeline_hash = h;
  result.summary = json{{"seed", cfg.seed},
                        {"config", to_json(cfg)},
                        {"config_hash", hex64(fnv1a(to_json(cfg).dump()))},
                        {"artifacts", artifacts},
                        {"report_hashes", report_hashes},
                        {"pipeline_hash", hex64(h)}};
  std::ofstream f(cfg.out_dir + "/summary.json");
  f << result.summary.dump(2) << "\n";
  return result;
}

}  // namespace vistac::harness
