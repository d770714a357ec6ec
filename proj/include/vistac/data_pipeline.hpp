#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vistac/common.hpp"
#include "vistac/rng.hpp"
#include "vistac/scene_io.hpp"
#include "vistac/surface_sim.hpp"

namespace vistac::data {

using json = nlohmann::json;

struct Jitter {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
  bool clipped = false;
};

struct SamplePair {
  sim::VisualPatch visual;
  sim::TactilePatch tactile;
  Pose2D nominal_pose;
  Jitter jitter;
  int scene_id = 0;
  int sample_id = 0;
};

struct CollectConfig {
  double grid_spacing = 0.02;       // meters between grid lines
  double offset_d = 0.05;           // camera-to-sensor offset move (m)
  double jitter_translation = 0.02; // +- range (m)
  double jitter_rotation_max = kPi / 4.0;
  int image_size = 64;
  int max_pairs_per_scene = 0;      // 0 = keep the full grid
  double max_skip_fraction = 0.2;
  unsigned threads = 0;             // 0 = hardware concurrency
};

inline json to_json(const CollectConfig& c) {
  return json{{"grid_spacing", c.grid_spacing},
              {"offset_d", c.offset_d},
              {"jitter_translation", c.jitter_translation},
              {"jitter_rotation_max", c.jitter_rotation_max},
              {"image_size", c.image_size},
              {"max_pairs_per_scene", c.max_pairs_per_scene},
              {"max_skip_fraction", c.max_skip_fraction}};
}

inline CollectConfig collect_config_from_json(const json& j) {
  CollectConfig c;
  c.grid_spacing = j.value("grid_spacing", c.grid_spacing);
  c.offset_d = j.value("offset_d", c.offset_d);
  c.jitter_translation = j.value("jitter_translation", c.jitter_translation);
  c.jitter_rotation_max = j.value("jitter_rotation_max", c.jitter_rotation_max);
  c.image_size = j.value("image_size", c.image_size);
  c.max_pairs_per_scene = j.value("max_pairs_per_scene", c.max_pairs_per_scene);
  c.max_skip_fraction = j.value("max_skip_fraction", c.max_skip_fraction);
  return c;
}

// Row-major nominal grid covering the extent, boundary lines included;
// degenerate extents collapse to a single centered line per axis.
inline std::vector<Pose2D> plan_grid(double extent_x, double extent_y,
                                     double spacing = 0.02) {
  if (spacing <= 0.0) throw std::invalid_argument("plan_grid: spacing must be > 0");
  auto axis = [&](double extent) {
    const int n = std::max(1, int(std::floor(extent / spacing + 1e-9)) + 1);
    const double offset = (extent - double(n - 1) * spacing) / 2.0;
    std::vector<double> xs(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) xs[std::size_t(i)] = offset + i * spacing;
    return xs;
  };
  const auto xs = axis(extent_x), ys = axis(extent_y);
  std::vector<Pose2D> poses;
  poses.reserve(xs.size() * ys.size());
  for (const double y : ys)
    for (const double x : xs) poses.push_back({x, y, 0.0});
  return poses;
}

// Uniform translation noise on both axes plus a rotation in [0, pi/4);
// the jittered position is clipped to the extent (and flagged) so the
// renderers stay in their domain.
inline std::pair<Pose2D, Jitter> jitter_pose(const Pose2D& pose, Rng& rng,
                                             double extent_x, double extent_y,
                                             double translation = 0.02,
                                             double rotation_max = kPi / 4.0) {
  Jitter j;
  j.dx = rng.uniform(-translation, translation);
  j.dy = rng.uniform(-translation, translation);
  j.dtheta = rng.uniform(0.0, rotation_max);
  Pose2D out{pose.x + j.dx, pose.y + j.dy, wrap_angle(pose.theta + j.dtheta)};
  const double cx = std::clamp(out.x, 0.0, extent_x);
  const double cy = std::clamp(out.y, 0.0, extent_y);
  j.clipped = (cx != out.x) || (cy != out.y);
  out.x = cx;
  out.y = cy;
  return {out, j};
}

struct SkipReason {
  int sample_id = 0;
  std::string reason;
};

// One aligned pair at the (jittered) pose: visual first, then the offset
// move, then a press to the target force. The offset move is exact in
// simulation, so both patches share the pose.
inline std::optional<SamplePair> collect_pair(const sim::SurfaceScene& scene,
                                              const Pose2D& pose,
                                              double offset_d,
                                              int image_size = 64,
                                              std::string* skip_reason = nullptr) {
  const Vec2 sensor_park{pose.x + offset_d, pose.y};
  if (!scene.in_extent(pose.position()) || !scene.in_extent(sensor_park)) {
    if (skip_reason) *skip_reason = "offset move leaves the workspace";
    return std::nullopt;
  }
  const double fov_tactile = scene.config.tactile_fov;
  const double fov_visual = 2.0 * fov_tactile;  // spatial alignment contract
  const auto depth = sim::solve_press_depth(scene, pose, scene.config.target_force);
  if (!depth) {
    if (skip_reason) *skip_reason = "target force unreachable within travel";
    return std::nullopt;
  }
  SamplePair pair;
  pair.visual = sim::render_visual(scene, pose, fov_visual, image_size);
  pair.tactile = sim::render_tactile(scene, pose, *depth, image_size);
  pair.nominal_pose = pose;
  return pair;
}

struct ManifestRecord {
  int sample_id = 0;
  int scene_id = 0;
  double x = 0.0, y = 0.0, theta = 0.0;
  double dx = 0.0, dy = 0.0, dtheta = 0.0;
  bool clipped = false;
  double force_n = 0.0;
  double press_depth = 0.0;
  double visual_fov = 0.0;
  double tactile_fov = 0.0;
  std::string visual_path;
  std::string tactile_path;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  std::string root_dir;
  CollectConfig config;
  std::vector<std::uint64_t> scene_seeds;
  json scene_config_snapshot;
  std::vector<ManifestRecord> records;
  std::vector<SkipReason> skips;
  std::vector<int> counts_per_scene;
};

inline json to_json(const ManifestRecord& r) {
  return json{{"sample_id", r.sample_id}, {"scene_id", r.scene_id},
              {"x", r.x},                 {"y", r.y},
              {"theta", r.theta},         {"dx", r.dx},
              {"dy", r.dy},               {"dtheta", r.dtheta},
              {"clipped", r.clipped},     {"force_n", r.force_n},
              {"press_depth", r.press_depth},
              {"visual_fov", r.visual_fov},
              {"tactile_fov", r.tactile_fov},
              {"visual_path", r.visual_path},
              {"tactile_path", r.tactile_path}};
}

inline ManifestRecord record_from_json(const json& j) {
  ManifestRecord r;
  r.sample_id = j.at("sample_id");
  r.scene_id = j.at("scene_id");
  r.x = j.at("x");
  r.y = j.at("y");
  r.theta = j.at("theta");
  r.dx = j.at("dx");
  r.dy = j.at("dy");
  r.dtheta = j.at("dtheta");
  r.clipped = j.at("clipped");
  r.force_n = j.at("force_n");
  r.press_depth = j.at("press_depth");
  r.visual_fov = j.at("visual_fov");
  r.tactile_fov = j.at("tactile_fov");
  r.visual_path = j.at("visual_path");
  r.tactile_path = j.at("tactile_path");
  return r;
}

inline void write_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_manifest: cannot open " + path);
  json skips = json::array();
  for (const auto& s : m.skips) skips.push_back({{"sample_id", s.sample_id}, {"reason", s.reason}});
  json header{{"type", "header"},
              {"seed", m.seed},
              {"collect_config", to_json(m.config)},
              {"scene_config", m.scene_config_snapshot},
              {"scene_seeds", m.scene_seeds},
              {"counts_per_scene", m.counts_per_scene},
              {"skips", skips}};
  f << header.dump() << "\n";
  for (const auto& r : m.records) f << to_json(r).dump() << "\n";
}

inline DatasetManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_manifest: cannot open " + path);
  DatasetManifest m;
  m.root_dir = std::filesystem::path(path).parent_path().string();
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("read_manifest: empty manifest " + path);
  json header = json::parse(line);
  if (header.value("type", "") != "header")
    throw std::runtime_error("read_manifest: missing header line in " + path);
  m.seed = header.at("seed");
  m.config = collect_config_from_json(header.at("collect_config"));
  m.scene_config_snapshot = header.value("scene_config", json::object());
  m.scene_seeds = header.value("scene_seeds", std::vector<std::uint64_t>{});
  m.counts_per_scene = header.value("counts_per_scene", std::vector<int>{});
  if (header.contains("skips"))
    for (const auto& s : header.at("skips"))
      m.skips.push_back({s.at("sample_id"), s.at("reason")});
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    m.records.push_back(record_from_json(json::parse(line)));
  }
  return m;
}

namespace detail {

inline std::string zero_pad(int v, int width) {
  std::ostringstream ss;
  ss.width(width);
  ss.fill('0');
  ss << v;
  return ss.str();
}

}  // namespace detail

// Collects the full dataset: per-scene grids, per-sample jitter, parallel
// renders, single-writer manifest ordered by sample_id. Deterministic in
// (seed, configs).
inline DatasetManifest collect_dataset(const std::vector<sim::SurfaceScene>& scenes,
                                       std::uint64_t seed,
                                       const CollectConfig& config,
                                       const std::string& out_dir) {
  if (scenes.empty())
    throw std::invalid_argument("collect_dataset: need at least one scene");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir + "/images");

  struct PlannedSample {
    int sample_id;
    int scene_id;
    Pose2D nominal;
  };
  std::vector<PlannedSample> plan;
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const auto& scene = scenes[si];
    auto poses = plan_grid(scene.config.extent_x, scene.config.extent_y,
                           config.grid_spacing);
    if (config.max_pairs_per_scene > 0 &&
        int(poses.size()) > config.max_pairs_per_scene) {
      // deterministic shuffle, then an even prefix: keeps spatial coverage
      Rng shuffle_rng(derive_seed(seed, 0x5a5a, si));
      for (std::size_t i = poses.size(); i > 1; --i) {
        const std::size_t j = std::size_t(shuffle_rng.uniform_index(i));
        std::swap(poses[i - 1], poses[j]);
      }
      poses.resize(std::size_t(config.max_pairs_per_scene));
    }
    for (const auto& p : poses)
      plan.push_back({int(plan.size()), int(si), p});
  }

  struct Outcome {
    std::optional<SamplePair> pair;
    Jitter jitter;
    Pose2D pose;
    std::string skip;
  };
  std::vector<Outcome> outcomes(plan.size());
  parallel_for(plan.size(), [&](std::size_t i) {
    const auto& ps = plan[std::size_t(i)];
    const auto& scene = scenes[std::size_t(ps.scene_id)];
    Rng rng(derive_seed(seed, 0x71773e, std::uint64_t(ps.sample_id)));
    // the sensor parks offset_d to the right of the camera spot, so the
    // collectible region is inset by the offset on that side
    const double reachable_x =
        std::max(0.0, scene.config.extent_x - std::max(0.0, config.offset_d));
    auto [pose, jit] = jitter_pose(ps.nominal, rng, reachable_x,
                                   scene.config.extent_y,
                                   config.jitter_translation,
                                   config.jitter_rotation_max);
    Outcome& out = outcomes[i];
    out.jitter = jit;
    out.pose = pose;
    std::string reason;
    out.pair = collect_pair(scene, pose, config.offset_d, config.image_size, &reason);
    out.skip = reason;
  }, config.threads);

  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.root_dir = out_dir;
  manifest.config = config;
  for (const auto& s : scenes) manifest.scene_seeds.push_back(s.seed);
  manifest.scene_config_snapshot = sim::to_json(scenes.front().config);
  manifest.counts_per_scene.assign(scenes.size(), 0);

  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& ps = plan[i];
    auto& out = outcomes[i];
    if (!out.pair) {
      manifest.skips.push_back({ps.sample_id, out.skip});
      continue;
    }
    ManifestRecord rec;
    rec.sample_id = ps.sample_id;
    rec.scene_id = ps.scene_id;
    rec.x = out.pose.x;
    rec.y = out.pose.y;
    rec.theta = out.pose.theta;
    rec.dx = out.jitter.dx;
    rec.dy = out.jitter.dy;
    rec.dtheta = out.jitter.dtheta;
    rec.clipped = out.jitter.clipped;
    rec.force_n = out.pair->tactile.contact_force;
    rec.press_depth = out.pair->tactile.press_depth;
    rec.visual_fov = out.pair->visual.fov;
    rec.tactile_fov = out.pair->tactile.fov;
    const std::string id = detail::zero_pad(ps.sample_id, 6);
    rec.visual_path = "images/v_" + id + ".pgm";
    rec.tactile_path = "images/t_" + id + ".ppm";
    write_pnm(out.pair->visual.pixels, out_dir + "/" + rec.visual_path);
    write_pnm(out.pair->tactile.pixels, out_dir + "/" + rec.tactile_path);
    manifest.counts_per_scene[std::size_t(ps.scene_id)]++;
    manifest.records.push_back(rec);
  }

  const double skip_fraction =
      plan.empty() ? 0.0 : double(manifest.skips.size()) / double(plan.size());
  if (skip_fraction > config.max_skip_fraction)
    throw std::runtime_error("collect_dataset: skipped " +
                             std::to_string(manifest.skips.size()) + " of " +
                             std::to_string(plan.size()) + " planned samples");
  write_manifest(manifest, out_dir + "/manifest.jsonl");
  return manifest;
}

struct LoadedPair {
  Image visual;
  Image tactile;
  ManifestRecord record;
};

inline LoadedPair load_pair(const DatasetManifest& m, const ManifestRecord& rec) {
  LoadedPair p;
  p.record = rec;
  const std::string vpath = m.root_dir + "/" + rec.visual_path;
  const std::string tpath = m.root_dir + "/" + rec.tactile_path;
  try {
    p.visual = read_pnm(vpath);
    p.tactile = read_pnm(tpath);
  } catch (const std::exception& e) {
    throw std::runtime_error("load_pair: sample " + std::to_string(rec.sample_id) +
                             ": " + e.what());
  }
  return p;
}

// Loads every referenced image in stable sample_id order.
inline std::vector<LoadedPair> load_dataset(const DatasetManifest& m,
                                            unsigned threads = 0) {
  std::vector<LoadedPair> out(m.records.size());
  parallel_for(m.records.size(), [&](std::size_t i) {
    out[i] = load_pair(m, m.records[i]);
  }, threads);
  return out;
}

inline DatasetManifest load_manifest(const std::string& path) {
  return read_manifest(path);
}

}  // namespace vistac::data
