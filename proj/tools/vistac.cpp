// vistac: simulation-backed visuo-tactile representation learning and the
// downstream sliding/passive perception tasks, end to end.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "vistac/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vistac;
using json = nlohmann::json;

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path))
    throw std::runtime_error(what + " not found: " + path);
}

enc::EncoderParams load_encoders_checked(const std::string& dir) {
  require_file(dir + "/visual.ckpt", "visual encoder checkpoint");
  require_file(dir + "/tactile.ckpt", "tactile encoder checkpoint");
  return enc::load_encoders(dir);
}

rot::RotationNetParams load_rotation_checked(const std::string& path) {
  require_file(path, "rotation checkpoint");
  return rot::load_rotation_net(path);
}

void emit_report(const harness::MetricsReport& report, const std::string& out_dir) {
  const std::string table = harness::render_table(report);
  harness::save_report(report, out_dir, table);
  std::cout << table;
  std::cout << "report hash: " << hex64(report.report_hash) << "\n";
  std::cout << "written to " << out_dir << "/" << report.task << "_report.jsonl\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulated visuo-tactile representation learning harness"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir = "out";
  unsigned threads = 2;
  app.add_option("--seed", seed, "master random seed")->capture_default_str();
  app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", threads, "worker threads")->capture_default_str();

  // ---- collect ----
  auto* collect = app.add_subcommand("collect", "collect an aligned pair dataset");
  int scenes = 8, pairs_per_scene = 250;
  std::string scene_config_path;
  collect->add_option("--scenes", scenes, "number of surface scenes")
      ->capture_default_str();
  collect->add_option("--pairs-per-scene", pairs_per_scene,
                      "cap on pairs per scene (0 = full grid)")
      ->capture_default_str();
  collect->add_option("--scene-config", scene_config_path,
                      "scene generation config (json)");

  // ---- train-encoders ----
  auto* tenc = app.add_subcommand("train-encoders",
                                  "contrastive dual-encoder training");
  std::string dataset_manifest;
  int enc_epochs = 30, enc_batch = 128, embedding_dim = 8;
  tenc->add_option("--dataset", dataset_manifest, "dataset manifest path")
      ->required();
  tenc->add_option("--epochs", enc_epochs)->capture_default_str();
  tenc->add_option("--batch", enc_batch)->capture_default_str();
  tenc->add_option("--dim", embedding_dim, "embedding dimension")
      ->capture_default_str();

  // ---- train-rotation ----
  auto* trot = app.add_subcommand("train-rotation", "rotation bucket classifier");
  std::string rot_dataset, rot_encoders_dir;
  int rot_epochs = 15, rot_batch = 32, n_buckets = 18;
  trot->add_option("--dataset", rot_dataset, "dataset manifest path")->required();
  trot->add_option("--epochs", rot_epochs)->capture_default_str();
  trot->add_option("--batch", rot_batch)->capture_default_str();
  trot->add_option("--buckets", n_buckets)->capture_default_str();

  // ---- task experiments ----
  std::string encoders_dir = "out/encoders";
  std::string rotation_ckpt = "out/rotation.ckpt";
  int trials = 10;
  double knot_diameter = 0.003;

  auto* anomaly = app.add_subcommand("anomaly", "knot-analog anomaly detection");
  anomaly->add_option("--encoders", encoders_dir)->capture_default_str();
  anomaly->add_option("--trials", trials)->capture_default_str();
  anomaly->add_option("--knot-diameter", knot_diameter)->capture_default_str();

  auto* search = app.add_subcommand("search", "vision-guided tactile search");
  search->add_option("--encoders", encoders_dir)->capture_default_str();
  search->add_option("--trials", trials)->capture_default_str();

  auto* servo = app.add_subcommand("servo", "tactile servoing along an s-cable");
  servo->add_option("--rotation", rotation_ckpt)->capture_default_str();
  servo->add_option("--trials", trials)->capture_default_str();

  auto* localize = app.add_subcommand("localize", "tactile localization heatmaps");
  localize->add_option("--encoders", encoders_dir)->capture_default_str();
  localize->add_option("--trials", trials)->capture_default_str();

  auto* classify = app.add_subcommand("classify", "towel edge/corner/interior k-NN");
  classify->add_option("--encoders", encoders_dir)->capture_default_str();

  // ---- pipeline ----
  auto* pipeline = app.add_subcommand("pipeline", "collect, train, run all tasks");
  harness::PipelineConfig pc;
  bool dry_run = false;
  pipeline->add_option("--scenes", pc.scenes)->capture_default_str();
  pipeline->add_option("--pairs-per-scene", pc.max_pairs_per_scene)
      ->capture_default_str();
  pipeline->add_option("--encoder-epochs", pc.encoder_epochs)->capture_default_str();
  pipeline->add_option("--rotation-epochs", pc.rotation_epochs)
      ->capture_default_str();
  pipeline->add_option("--trials", pc.trials)->capture_default_str();
  pipeline->add_flag("--dry-run", dry_run, "print the stage list and exit");

  // ---- replay ----
  auto* replay = app.add_subcommand("replay", "re-render a recorded slide trace");
  std::string trace_path, scene_json;
  replay->add_option("--trace", trace_path, "trace jsonl")->required();
  replay->add_option("--scene", scene_json, "scene sidecar json from the export")
      ->required();

  // allow --seed/--out-dir/--threads after the subcommand name
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*collect) {
      sim::SceneConfig scene_cfg = scene_config_path.empty()
                                       ? harness::training_scene_config()
                                       : sim::load_scene_config(scene_config_path);
      std::vector<sim::SurfaceScene> scene_list;
      for (int s = 0; s < scenes; ++s)
        scene_list.push_back(
            sim::generate_scene(derive_seed(seed, 0x5c, std::uint64_t(s)), scene_cfg));
      data::CollectConfig cc;
      cc.max_pairs_per_scene = pairs_per_scene;
      cc.threads = threads;
      const auto manifest = data::collect_dataset(
          scene_list, derive_seed(seed, 0xda7a), cc, out_dir + "/dataset");
      std::cout << "collected " << manifest.records.size() << " pairs ("
                << manifest.skips.size() << " skipped) -> " << out_dir
                << "/dataset/manifest.jsonl\n";
    } else if (*tenc) {
      require_file(dataset_manifest, "dataset manifest");
      const auto manifest = data::load_manifest(dataset_manifest);
      const auto set = enc::load_training_set(manifest, threads);
      enc::TrainConfig tc;
      tc.batch_size = enc_batch;
      tc.epochs = enc_epochs;
      tc.embedding_dim = embedding_dim;
      tc.seed = derive_seed(seed, 0xe0c);
      const auto trained =
          enc::train_encoders(set, tc, enc::AugmentationConfig{}, &std::cout);
      enc::save_encoders(trained.params, out_dir + "/encoders",
                         json{{"seed", seed}});
      enc::write_train_log(trained.log, out_dir + "/encoders/train_log.jsonl");
      std::cout << "held-out 32-way retrieval top-1: " << trained.holdout_top1
                << "\n";
    } else if (*trot) {
      require_file(rot_dataset, "dataset manifest");
      const auto manifest = data::load_manifest(rot_dataset);
      const auto set = enc::load_training_set(manifest, threads);
      rot::RotationTrainConfig rc;
      rc.batch_size = rot_batch;
      rc.epochs = rot_epochs;
      rc.n_buckets = n_buckets;
      rc.seed = derive_seed(seed, 0x407);
      const auto trained =
          rot::train_rotation(set, rc, enc::AugmentationConfig{}, &std::cout);
      rot::save_rotation_net(trained.params, out_dir + "/rotation.ckpt",
                             json{{"seed", seed}});
      rot::write_rotation_log(trained.log, out_dir + "/rotation_log.jsonl");
      std::cout << "held-out exact " << trained.holdout_exact << ", +-1 bucket "
                << trained.holdout_pm1 << "\n";
    } else if (*anomaly) {
      auto encoders = load_encoders_checked(encoders_dir);
      harness::AnomalyExperimentConfig ec;
      ec.trials = trials;
      ec.seed = seed;
      ec.knot_diameter = knot_diameter;
      ec.threads = threads;
      ec.trace_dir = out_dir + "/traces/anomaly";
      emit_report(harness::run_anomaly_experiment(encoders, ec),
                  out_dir + "/reports");
    } else if (*search) {
      auto encoders = load_encoders_checked(encoders_dir);
      harness::SearchExperimentConfig ec;
      ec.trials = trials;
      ec.seed = seed;
      ec.threads = threads;
      ec.trace_dir = out_dir + "/traces/search";
      emit_report(harness::run_search_experiment(encoders, ec),
                  out_dir + "/reports");
    } else if (*servo) {
      auto rotnet = load_rotation_checked(rotation_ckpt);
      harness::ServoExperimentConfig ec;
      ec.trials = trials;
      ec.seed = seed;
      ec.threads = threads;
      ec.trace_dir = out_dir + "/traces/servo";
      emit_report(harness::run_servo_experiment(rotnet, ec), out_dir + "/reports");
    } else if (*localize) {
      auto encoders = load_encoders_checked(encoders_dir);
      harness::LocalizeExperimentConfig ec;
      ec.trials = trials;
      ec.seed = seed;
      ec.threads = threads;
      ec.heatmap_dir = out_dir + "/heatmap";
      emit_report(harness::run_localize_experiment(encoders, ec),
                  out_dir + "/reports");
    } else if (*classify) {
      auto encoders = load_encoders_checked(encoders_dir);
      harness::ClassifyExperimentConfig ec;
      ec.seed = seed;
      ec.threads = threads;
      emit_report(harness::run_classify_experiment(encoders, ec),
                  out_dir + "/reports");
    } else if (*pipeline) {
      pc.seed = seed;
      pc.out_dir = out_dir;
      pc.threads = threads;
      pc.dry_run = dry_run;
      const auto result = harness::end_to_end_pipeline(pc);
      if (dry_run) {
        for (const auto& s : result.summary.at("stages"))
          std::cout << s.get<std::string>() << "\n";
      } else {
        std::cout << "pipeline hash: " << hex64(result.pipeline_hash) << "\n";
        std::cout << "summary: " << out_dir << "/summary.json\n";
      }
    } else if (*replay) {
      require_file(trace_path, "trace");
      require_file(scene_json, "scene sidecar");
      std::ifstream f(scene_json);
      json meta;
      f >> meta;
      const auto scene = sim::generate_scene(
          meta.at("seed").get<std::uint64_t>(),
          sim::scene_config_from_json(meta.at("config")));
      const auto trace = sliding::load_trace(trace_path);
      const auto frames =
          sliding::replay_trace_frames(scene, trace, out_dir + "/frames");
      std::cout << "rendered " << frames.size() << " frames -> " << out_dir
                << "/frames\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
