#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "vistac/data_pipeline.hpp"
#include "vistac/encoders.hpp"
#include "vistac/harness_scenes.hpp"
#include "vistac/passive.hpp"
#include "vistac/rotation_net.hpp"
#include "vistac/scene_io.hpp"
#include "vistac/sliding.hpp"

namespace vistac::harness {

using json = nlohmann::json;

inline enc::EncoderParams clone_encoders(const enc::EncoderParams& p) {
  enc::EncoderParams out;
  out.visual_net = p.visual_net.clone();
  out.tactile_net = p.tactile_net.clone();
  out.embedding_dim = p.embedding_dim;
  out.image_size = p.image_size;
  return out;
}

// ---- metrics reports (Tables 1-4 analogs) ----

struct MetricsReport {
  std::string task;
  std::uint64_t seed = 0;
  json config = json::object();
  std::vector<json> rows;
  json aggregates = json::object();
  std::uint64_t report_hash = 0;
};

inline std::uint64_t hash_report(const MetricsReport& r) {
  std::uint64_t h = fnv1a(r.task);
  for (const auto& row : r.rows) h = fnv1a(row.dump(), h);
  h = fnv1a(r.aggregates.dump(), h);
  return h;
}

inline void finalize_report(MetricsReport& r) { r.report_hash = hash_report(r); }

inline void save_report(const MetricsReport& r, const std::string& dir,
                        const std::string& table) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir + "/" + r.task + "_report.jsonl");
  if (!f) throw std::runtime_error("save_report: cannot open dir " + dir);
  f << json{{"type", "header"},
            {"task", r.task},
            {"seed", r.seed},
            {"config", r.config},
            {"aggregates", r.aggregates},
            {"report_hash", hex64(r.report_hash)}}
           .dump()
    << "\n";
  for (const auto& row : r.rows) f << row.dump() << "\n";
  std::ofstream t(dir + "/" + r.task + "_table.txt");
  t << table;
}

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= double(v.size());
  return {mean, std::sqrt(var)};
}

inline std::vector<Vec2> path_from_arclength(const std::vector<Vec2>& pts,
                                             double s0) {
  std::vector<Vec2> out;
  double walked = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = (pts[i] - pts[i - 1]).norm();
    if (walked + seg >= s0) {
      if (out.empty()) {
        const double t = seg > 0.0 ? (s0 - walked) / seg : 0.0;
        out.push_back(pts[i - 1] + (pts[i] - pts[i - 1]) * t);
      }
      out.push_back(pts[i]);
    }
    walked += seg;
  }
  if (out.size() < 2) out = {pts[pts.size() - 2], pts.back()};
  return out;
}

}  // namespace detail

// ---- anomaly detection (Table 1 analog) ----

struct AnomalyExperimentConfig {
  int trials = 10;
  std::uint64_t seed = 0;
  double knot_diameter = 0.003;
  double m1 = 0.3;
  int n1 = 20;
  std::size_t window = 40;
  int max_ticks = 1500;
  unsigned threads = 2;
  std::string trace_dir;  // optional: archive trial 0's trace + scene
};

namespace detail {

inline void archive_trial(const std::string& trace_dir,
                          const sim::SurfaceScene& scene,
                          const sliding::SlideTrace& trace) {
  if (trace_dir.empty()) return;
  std::filesystem::create_directories(trace_dir);
  sliding::save_trace(trace, trace_dir + "/trace.jsonl");
  sim::export_scene(scene, trace_dir + "/scene");
}

}  // namespace detail

// calibrates the published L2 baseline on a knot-free slide of the same
// surface: threshold = 99th percentile of observed cruise distances
inline double calibrate_l2_threshold(const sim::SurfaceScene& calibration_scene,
                                     const std::vector<Vec2>& path, int n1,
                                     std::size_t window, int max_ticks) {
  sliding::L2AnomalyPolicy probe(std::numeric_limits<double>::infinity(), n1, window);
  sliding::SlideParams params;
  params.max_ticks = max_ticks;
  const auto trace = sliding::run_slide(calibration_scene, probe,
                                        {path[0].x, path[0].y, 0.0}, path, params);
  std::vector<double> scores;
  for (const auto& tick : trace.ticks)
    if (tick.decision == sliding::Decision::Cruise && tick.score > 0.0)
      scores.push_back(tick.score);
  if (scores.empty())
    throw std::runtime_error("calibrate_l2_threshold: no cruise scores recorded");
  return sliding::quantile(scores, 0.99);
}

inline MetricsReport run_anomaly_experiment(const enc::EncoderParams& encoders,
                                            const AnomalyExperimentConfig& cfg) {
  MetricsReport report;
  report.task = "anomaly";
  report.seed = cfg.seed;
  report.config = json{{"trials", cfg.trials},
                       {"knot_diameter", cfg.knot_diameter},
                       {"m1", cfg.m1},
                       {"n1", cfg.n1},
                       {"window", cfg.window}};
  report.rows.resize(std::size_t(cfg.trials));

  parallel_for(std::size_t(cfg.trials), [&](std::size_t trial) {
    const std::uint64_t scene_seed = derive_seed(cfg.seed, 0xa0, trial);
    const auto task = make_anomaly_scene(scene_seed, cfg.knot_diameter);
    Rng trial_rng(derive_seed(cfg.seed, 0xa1, trial));
    const auto path =
        detail::path_from_arclength(task.path, trial_rng.uniform(0.0, 0.02));

    sliding::SlideParams params;
    params.max_ticks = cfg.max_ticks;
    const Pose2D start{path[0].x, path[0].y, 0.0};

    auto enc_copy = clone_encoders(encoders);
    sliding::AnomalyPolicy learned(enc_copy, cfg.m1, cfg.n1, cfg.window);
    const auto trace = sliding::run_slide(task.scene, learned, start, path, params);
    const bool success =
        trace.terminal_reason == "stopped" &&
        sim::footprint_touches_feature(task.scene, trace.final_pose,
                                       task.scene.config.tactile_fov,
                                       task.knot_index);

    const auto calibration = make_anomaly_calibration_scene(scene_seed, task);
    const double threshold = calibrate_l2_threshold(calibration, path, cfg.n1,
                                                    cfg.window, cfg.max_ticks);
    sliding::L2AnomalyPolicy baseline(threshold, cfg.n1, cfg.window);
    const auto base_trace =
        sliding::run_slide(task.scene, baseline, start, path, params);
    const bool base_success =
        base_trace.terminal_reason == "stopped" &&
        sim::footprint_touches_feature(task.scene, base_trace.final_pose,
                                       task.scene.config.tactile_fov,
                                       task.knot_index);

    if (trial == 0) detail::archive_trial(cfg.trace_dir, task.scene, trace);
    report.rows[trial] = json{{"trial", trial},
                              {"scene_seed", scene_seed},
                              {"success", success},
                              {"terminal", trace.terminal_reason},
                              {"stop_tick", trace.stop_tick},
                              {"baseline_success", base_success},
                              {"baseline_terminal", base_trace.terminal_reason},
                              {"l2_threshold", threshold}};
  }, cfg.threads);

  int ours = 0, base = 0;
  for (const auto& row : report.rows) {
    ours += row.at("success").get<bool>() ? 1 : 0;
    base += row.at("baseline_success").get<bool>() ? 1 : 0;
  }
  report.aggregates = json{{"success_count", ours},
                           {"baseline_success_count", base},
                           {"trials", cfg.trials}};
  finalize_report(report);
  return report;
}

// ---- vision-guided search (Table 2 analog) ----

struct SearchExperimentConfig {
  int trials = 10;
  std::uint64_t seed = 0;
  double m2 = 0.6;
  int n2 = 60;
  double m1 = 0.3;  // the anomaly baseline runs with its own thresholds
  int n1 = 20;
  std::size_t window = 40;
  int max_ticks = 1500;
  unsigned threads = 2;
  std::string trace_dir;
};

inline MetricsReport run_search_experiment(const enc::EncoderParams& encoders,
                                           const SearchExperimentConfig& cfg) {
  MetricsReport report;
  report.task = "search";
  report.seed = cfg.seed;
  report.config = json{{"trials", cfg.trials}, {"m2", cfg.m2}, {"n2", cfg.n2}};
  report.rows.resize(std::size_t(cfg.trials));

  parallel_for(std::size_t(cfg.trials), [&](std::size_t trial) {
    const std::uint64_t scene_seed = derive_seed(cfg.seed, 0x5e, trial);
    const auto task = make_search_scene(scene_seed);
    Rng trial_rng(derive_seed(cfg.seed, 0x5f, trial));
    const auto path =
        detail::path_from_arclength(task.path, trial_rng.uniform(0.0, 0.02));

    auto enc_copy = clone_encoders(encoders);
    const double fov_v = 2.0 * task.scene.config.tactile_fov;
    const auto query_patch =
        sim::render_visual(task.scene, task.query_pose, fov_v);
    const auto query = enc::encode_visual(enc_copy, query_patch.pixels);

    sliding::SlideParams params;
    params.max_ticks = cfg.max_ticks;
    const Pose2D start{path[0].x, path[0].y, 0.0};

    sliding::SearchPolicy learned(enc_copy, query, cfg.m2, cfg.n2);
    const auto trace = sliding::run_slide(task.scene, learned, start, path, params);
    const bool success =
        trace.terminal_reason == "stopped" &&
        sim::footprint_touches_feature(task.scene, trace.final_pose,
                                       task.scene.config.tactile_fov,
                                       task.target_index);

    // published baseline: plain anomaly detection, judged on the target
    sliding::AnomalyPolicy baseline(enc_copy, cfg.m1, cfg.n1, cfg.window);
    const auto base_trace =
        sliding::run_slide(task.scene, baseline, start, path, params);
    const bool base_success =
        base_trace.terminal_reason == "stopped" &&
        sim::footprint_touches_feature(task.scene, base_trace.final_pose,
                                       task.scene.config.tactile_fov,
                                       task.target_index);

    if (trial == 0) detail::archive_trial(cfg.trace_dir, task.scene, trace);
    report.rows[trial] = json{{"trial", trial},
                              {"scene_seed", scene_seed},
                              {"success", success},
                              {"terminal", trace.terminal_reason},
                              {"stop_tick", trace.stop_tick},
                              {"baseline_success", base_success},
                              {"baseline_terminal", base_trace.terminal_reason}};
  }, cfg.threads);

  int ours = 0, base = 0;
  for (const auto& row : report.rows) {
    ours += row.at("success").get<bool>() ? 1 : 0;
    base += row.at("baseline_success").get<bool>() ? 1 : 0;
  }
  report.aggregates = json{{"success_count", ours},
                           {"baseline_success_count", base},
                           {"trials", cfg.trials}};
  finalize_report(report);
  return report;
}

// ---- tactile servoing (Table 3 analog) ----

struct ServoExperimentConfig {
  int trials = 10;
  std::uint64_t seed = 0;
  sliding::ServoConfig servo;
  int max_ticks = 900;
  unsigned threads = 2;
  std::string trace_dir;
};

// percent of the feature length reached before the sensor footprint first
// loses the feature
inline double percent_traversed(const sliding::SlideTrace& trace,
                                const std::vector<Vec2>& spine,
                                double contact_radius, double total_length) {
  double best_s = 0.0;
  for (const auto& tick : trace.ticks) {
    double s = 0.0;
    const double dist =
        sim::detail::polyline_distance(spine, tick.pose.position(), &s);
    if (dist > contact_radius) break;
    best_s = std::max(best_s, s);
  }
  return total_length > 0.0 ? 100.0 * best_s / total_length : 0.0;
}

inline MetricsReport run_servo_experiment(const rot::RotationNetParams& rotnet,
                                          const ServoExperimentConfig& cfg) {
  MetricsReport report;
  report.task = "servo";
  report.seed = cfg.seed;
  report.config = json{{"trials", cfg.trials},
                       {"lambda", cfg.servo.lambda},
                       {"lateral_gain", cfg.servo.lateral_gain}};
  report.rows.resize(std::size_t(cfg.trials));

  parallel_for(std::size_t(cfg.trials), [&](std::size_t trial) {
    const std::uint64_t scene_seed = derive_seed(cfg.seed, 0x0e, trial);
    const auto task = make_servo_scene(scene_seed);

    // physical trials repeat from one start; simulation is deterministic,
    // so start pose noise stands in for real-world variation
    Rng trial_rng(derive_seed(cfg.seed, 0x0f, trial));
    Pose2D start = task.start;
    start.x += trial_rng.uniform(-0.002, 0.002);
    start.y += trial_rng.uniform(-0.002, 0.002);
    start.theta = wrap_angle(start.theta + trial_rng.uniform(-0.06, 0.06));

    const double fov_v = 2.0 * task.scene.config.tactile_fov;
    const auto reference =
        sim::render_visual(task.scene, task.reference_pose, fov_v);

    sliding::SlideParams params;
    params.max_ticks = cfg.max_ticks;
    const double contact_radius = task.scene.config.tactile_fov / 2.0;

    rot::RotationNetParams rot_copy{rotnet.net.clone(), rotnet.n_buckets,
                                    rotnet.image_size};
    sliding::ServoPolicy learned(rot_copy, reference.pixels, cfg.servo);
    const auto trace =
        sliding::run_slide(task.scene, learned, start, std::nullopt, params);
    const double percent = percent_traversed(trace, task.spine, contact_radius,
                                             task.total_length);

    sliding::EllipseServoPolicy baseline(task.scene.config.tactile_background);
    const auto base_trace =
        sliding::run_slide(task.scene, baseline, start, std::nullopt, params);
    const double base_percent = percent_traversed(base_trace, task.spine,
                                                  contact_radius, task.total_length);

    if (trial == 0) detail::archive_trial(cfg.trace_dir, task.scene, trace);
    report.rows[trial] = json{{"trial", trial},
                              {"scene_seed", scene_seed},
                              {"percent", percent},
                              {"terminal", trace.terminal_reason},
                              {"baseline_percent", base_percent},
                              {"baseline_terminal", base_trace.terminal_reason}};
  }, cfg.threads);

  std::vector<double> ours, base;
  for (const auto& row : report.rows) {
    ours.push_back(row.at("percent").get<double>());
    base.push_back(row.at("baseline_percent").get<double>());
  }
  const auto [om, os] = detail::mean_std(ours);
  const auto [bm, bs] = detail::mean_std(base);
  report.aggregates = json{{"mean_percent", om},
                           {"std_percent", os},
                           {"baseline_mean_percent", bm},
                           {"baseline_std_percent", bs},
                           {"trials", cfg.trials}};
  finalize_report(report);
  return report;
}

// ---- localization ----

struct LocalizeExperimentConfig {
  int trials = 10;
  std::uint64_t seed = 0;
  int stride_px = 32;
  unsigned threads = 2;
  std::string heatmap_dir;  // optional: save the first trial's heatmap here
};

inline MetricsReport run_localize_experiment(const enc::EncoderParams& encoders,
                                             const LocalizeExperimentConfig& cfg) {
  MetricsReport report;
  report.task = "localize";
  report.seed = cfg.seed;
  report.config = json{{"trials", cfg.trials}, {"stride_px", cfg.stride_px}};
  report.rows.resize(std::size_t(cfg.trials));

  parallel_for(std::size_t(cfg.trials), [&](std::size_t trial) {
    const std::uint64_t scene_seed = derive_seed(cfg.seed, 0x10, trial);
    const auto task = make_localize_scene(scene_seed);
    auto enc_copy = clone_encoders(encoders);

    const double fov_v = 2.0 * task.scene.config.tactile_fov;
    const double px_per_m = encoders.image_size / fov_v;
    const Image workspace = render_workspace(task.scene, px_per_m);

    const auto depth = sim::solve_press_depth(task.scene, task.query_pose,
                                              task.scene.config.target_force);
    if (!depth) throw std::runtime_error("localize trial: unreachable force");
    const auto tactile =
        sim::render_tactile(task.scene, task.query_pose, *depth);

    const int patch = encoders.image_size;
    const auto heatmap = passive::localize(workspace, tactile.pixels, enc_copy,
                                           patch, cfg.stride_px);
    // ground-truth cell: the grid cell whose patch center is nearest the
    // query location
    const double gt_pr =
        (task.scene.config.extent_y - task.query_pose.y) * px_per_m;
    const double gt_pc = task.query_pose.x * px_per_m;
    const int gt_row = int(std::lround((gt_pr - patch / 2.0) / cfg.stride_px));
    const int gt_col = int(std::lround((gt_pc - patch / 2.0) / cfg.stride_px));
    const int dr = std::abs(heatmap.argmax_row - gt_row);
    const int dc = std::abs(heatmap.argmax_col - gt_col);
    const int cell_distance = std::max(dr, dc);
    const bool success = cell_distance <= 1;

    if (trial == 0 && !cfg.heatmap_dir.empty())
      passive::save_heatmap(heatmap, cfg.heatmap_dir, workspace);

    report.rows[trial] = json{{"trial", trial},
                              {"scene_seed", scene_seed},
                              {"success", success},
                              {"cell_distance", cell_distance},
                              {"argmax_row", heatmap.argmax_row},
                              {"argmax_col", heatmap.argmax_col},
                              {"gt_row", gt_row},
                              {"gt_col", gt_col},
                              {"max_score", heatmap.max_score()}};
  }, cfg.threads);

  int ok = 0;
  std::vector<double> dists;
  for (const auto& row : report.rows) {
    ok += row.at("success").get<bool>() ? 1 : 0;
    dists.push_back(row.at("cell_distance").get<double>());
  }
  const auto [dm, ds] = detail::mean_std(dists);
  report.aggregates = json{{"success_count", ok},
                           {"trials", cfg.trials},
                           {"mean_cell_distance", dm},
                           {"std_cell_distance", ds}};
  finalize_report(report);
  return report;
}

// ---- classification (Table 4 analog) ----

struct ClassifyExperimentConfig {
  std::uint64_t seed = 0;
  int canonicals_per_class = 4;
  int queries_per_class = 36;
  int n_aug = 100;
  int k = 50;
  unsigned threads = 2;
};

inline MetricsReport run_classify_experiment(const enc::EncoderParams& encoders,
                                             const ClassifyExperimentConfig& cfg) {
  MetricsReport report;
  report.task = "classify";
  report.seed = cfg.seed;
  report.config = json{{"canonicals_per_class", cfg.canonicals_per_class},
                       {"queries_per_class", cfg.queries_per_class},
                       {"n_aug", cfg.n_aug},
                       {"k", cfg.k}};

  const int per_class = cfg.canonicals_per_class + cfg.queries_per_class;
  const auto towel = make_towel_scene(cfg.seed, per_class);
  auto enc_copy = clone_encoders(encoders);
  const double fov_v = 2.0 * towel.scene.config.tactile_fov;

  const std::vector<std::pair<std::string, const std::vector<Pose2D>*>> classes{
      {"edge", &towel.edge_poses},
      {"corner", &towel.corner_poses},
      {"interior", &towel.interior_poses}};

  std::vector<std::pair<std::string, std::vector<Image>>> canonicals;
  for (const auto& [name, poses] : classes) {
    std::vector<Image> imgs;
    for (int i = 0; i < cfg.canonicals_per_class; ++i)
      imgs.push_back(
          sim::render_visual(towel.scene, (*poses)[std::size_t(i)], fov_v).pixels);
    canonicals.emplace_back(name, std::move(imgs));
  }
  const auto refs = passive::build_classifier(canonicals, enc_copy, cfg.n_aug,
                                              cfg.k, {}, derive_seed(cfg.seed, 0xc1));

  std::vector<std::vector<int>> confusion(classes.size(),
                                          std::vector<int>(classes.size(), 0));
  int correct = 0, total = 0;
  for (std::size_t cls = 0; cls < classes.size(); ++cls) {
    for (int q = 0; q < cfg.queries_per_class; ++q) {
      const Pose2D pose =
          (*classes[cls].second)[std::size_t(cfg.canonicals_per_class + q)];
      const auto depth = sim::solve_press_depth(towel.scene, pose,
                                                towel.scene.config.target_force);
      if (!depth) continue;
      const auto tactile = sim::render_tactile(towel.scene, pose, *depth);
      const auto result = passive::classify(tactile.pixels, refs, enc_copy);
      confusion[cls][std::size_t(result.label)]++;
      correct += (std::size_t(result.label) == cls);
      ++total;
    }
  }

  for (std::size_t cls = 0; cls < classes.size(); ++cls) {
    int row_total = 0, row_correct = confusion[cls][cls];
    int confusor = -1, confusor_count = -1;
    for (std::size_t j = 0; j < classes.size(); ++j) {
      row_total += confusion[cls][j];
      if (j != cls && confusion[cls][j] > confusor_count) {
        confusor_count = confusion[cls][j];
        confusor = int(j);
      }
    }
    report.rows.push_back(
        json{{"category", classes[cls].first},
             {"accuracy", row_total > 0 ? double(row_correct) / row_total : 0.0},
             {"n", row_total},
             {"primary_confusor",
              confusor_count > 0 ? classes[std::size_t(confusor)].first : "none"},
             {"confusion_row", confusion[cls]}});
  }
  report.aggregates =
      json{{"overall_accuracy", total > 0 ? double(correct) / total : 0.0},
           {"total", total}};
  finalize_report(report);
  return report;
}

// ---- table rendering ----

inline std::string render_table(const MetricsReport& r) {
  std::ostringstream ss;
  if (r.task == "anomaly" || r.task == "search") {
    const int ours = r.aggregates.at("success_count");
    const int base = r.aggregates.at("baseline_success_count");
    const int n = r.aggregates.at("trials");
    ss << (r.task == "anomaly" ? "Anomaly detection success rate."
                               : "Vision-guided search success rate.")
       << "\n";
    ss << std::left << std::setw(16) << "Algorithm" << "Success\n";
    ss << std::left << std::setw(16) << "Baseline" << base << "/" << n << "\n";
    ss << std::left << std::setw(16) << "Our method" << ours << "/" << n << "\n";
  } else if (r.task == "servo") {
    ss << "Tactile servoing distance % completed.\n";
    ss << std::fixed << std::setprecision(1);
    ss << std::left << std::setw(16) << "Algorithm" << "% distance\n";
    ss << std::left << std::setw(16) << "Baseline"
       << r.aggregates.at("baseline_mean_percent").get<double>() << " +- "
       << r.aggregates.at("baseline_std_percent").get<double>() << "\n";
    ss << std::left << std::setw(16) << "Our method"
       << r.aggregates.at("mean_percent").get<double>() << " +- "
       << r.aggregates.at("std_percent").get<double>() << "\n";
  } else if (r.task == "classify") {
    ss << "Classification on towel edges, corners, and interiors.\n";
    ss << std::left << std::setw(12) << "Category" << std::setw(14)
       << "Accuracy (%)" << std::setw(18) << "Primary confusor" << "N\n";
    ss << std::fixed << std::setprecision(0);
    for (const auto& row : r.rows)
      ss << std::left << std::setw(12) << row.at("category").get<std::string>()
         << std::setw(14) << 100.0 * row.at("accuracy").get<double>()
         << std::setw(18) << row.at("primary_confusor").get<std::string>()
         << row.at("n").get<int>() << "\n";
    ss << std::left << std::setw(12) << "Overall" << std::setw(14)
       << 100.0 * r.aggregates.at("overall_accuracy").get<double>()
       << std::setw(18) << "N/A" << r.aggregates.at("total").get<int>() << "\n";
  } else if (r.task == "localize") {
    const int ok = r.aggregates.at("success_count");
    const int n = r.aggregates.at("trials");
    ss << "Tactile localization.\n";
    ss << "argmax within one stride of ground truth: " << ok << "/" << n << "\n";
    ss << "mean cell distance: " << std::fixed << std::setprecision(2)
       << r.aggregates.at("mean_cell_distance").get<double>() << "\n";
  }
  return ss.str();
}

}  // namespace vistac::harness
