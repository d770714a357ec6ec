#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vistac/surface_sim.hpp"

namespace vistac::harness {

using sim::FeatureKind;
using sim::FeatureSpec;
using sim::SceneConfig;
using sim::SurfaceScene;

// Feature mix for the self-supervised collection scenes: thin directional
// features dominate so most sampled patches carry orientation cues.
inline SceneConfig training_scene_config() {
  SceneConfig cfg;
  cfg.extent_x = 0.3;
  cfg.extent_y = 0.3;
  cfg.feature_counts[int(FeatureKind::CableSpline)] = 2;
  cfg.feature_counts[int(FeatureKind::Seam)] = 1;
  cfg.feature_counts[int(FeatureKind::Knot)] = 2;
  cfg.feature_counts[int(FeatureKind::Button)] = 1;
  cfg.feature_counts[int(FeatureKind::Zipper)] = 1;
  cfg.feature_counts[int(FeatureKind::TowelEdge)] = 1;
  cfg.feature_counts[int(FeatureKind::TowelCorner)] = 1;
  cfg.feature_counts[int(FeatureKind::EmbeddedLump)] = 1;
  cfg.feature_counts[int(FeatureKind::Ruffle)] = 1;
  cfg.feature_counts[int(FeatureKind::Wrinkle)] = 1;
  return cfg;
}

// top-down grayscale render of the whole workspace (row 0 at +y)
inline Image render_workspace(const SurfaceScene& scene, double px_per_m = 1280.0) {
  const int w = int(std::lround(scene.config.extent_x * px_per_m));
  const int h = int(std::lround(scene.config.extent_y * px_per_m));
  Image img(h, w, 1);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Vec2 p{(c + 0.5) / px_per_m,
                   scene.config.extent_y - (r + 0.5) / px_per_m};
      img.at(r, c) = scene.sample(scene.shaded, p, 0.5f);
    }
  quantize8(img);
  return img;
}

namespace detail {

// gentle left-to-right spline across the workspace
inline std::vector<Vec2> lateral_thread(Rng& rng, const SceneConfig& cfg) {
  std::vector<Vec2> pts;
  const double y0 = rng.uniform(0.10, cfg.extent_y - 0.10);
  const int n = 5;
  for (int i = 0; i < n; ++i) {
    const double x = 0.04 + (cfg.extent_x - 0.08) * i / double(n - 1);
    const double y = std::clamp(y0 + rng.uniform(-0.018, 0.018), 0.05,
                                cfg.extent_y - 0.05);
    pts.push_back({x, y});
  }
  return pts;
}

inline Vec2 point_at_arclength(const std::vector<Vec2>& pts, double s) {
  double walked = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = (pts[i] - pts[i - 1]).norm();
    if (walked + seg >= s)
      return pts[i - 1] + (pts[i] - pts[i - 1]) * ((s - walked) / seg);
    walked += seg;
  }
  return pts.back();
}

inline double tangent_at_arclength(const std::vector<Vec2>& pts, double s) {
  double walked = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = (pts[i] - pts[i - 1]).norm();
    if (walked + seg >= s) {
      const Vec2 d = pts[i] - pts[i - 1];
      return std::atan2(d.y, d.x);
    }
    walked += seg;
  }
  const Vec2 d = pts.back() - pts[pts.size() - 2];
  return std::atan2(d.y, d.x);
}

}  // namespace detail

// ---- anomaly: a knot tied somewhere along a thin thread ----

struct AnomalyScene {
  SurfaceScene scene;
  std::size_t thread_index = 0;
  std::size_t knot_index = 1;
  std::vector<Vec2> path;       // the thread spine, slid end to end
  double knot_arclength = 0.0;  // position of the knot along the path
};

// knot_diameter is the analog of the paper's 3 mm / 1 mm knots; the
// 1 mm case spans about two simulation cells
inline AnomalyScene make_anomaly_scene(std::uint64_t seed, double knot_diameter) {
  SceneConfig cfg = training_scene_config();
  cfg.feature_counts = {};  // only the thread and its knot
  Rng rng(derive_seed(seed, 0xa40));

  FeatureSpec thread;
  thread.kind = FeatureKind::CableSpline;
  thread.points = detail::lateral_thread(rng, cfg);
  thread.width = 0.0012;  // 1 mm surgical-thread analog
  thread.amplitude = 0.001;
  thread.stiffness_scale = 2.2;
  thread.albedo_delta = -0.05;  // dark thread on dark cloth

  const auto spine = sim::detail::densify_spline(thread.points, cfg.resolution * 0.5);
  const double total = sim::detail::polyline_length(spine);
  const double knot_s = rng.uniform(0.40, 0.80) * total;

  FeatureSpec knot;
  knot.kind = FeatureKind::Knot;
  knot.points = {detail::point_at_arclength(spine, knot_s)};
  knot.width = knot_diameter;
  knot.amplitude = knot_diameter * 1.1;
  knot.stiffness_scale = 3.0;
  knot.albedo_delta = -0.05;

  cfg.explicit_features = {thread, knot};
  AnomalyScene out;
  out.scene = sim::generate_scene(seed, cfg);
  out.thread_index = 0;
  out.knot_index = 1;
  out.path = out.scene.feature_spines[0];
  out.knot_arclength = knot_s;
  return out;
}

// knot-free twin used to calibrate the L2 baseline threshold
inline SurfaceScene make_anomaly_calibration_scene(std::uint64_t seed,
                                                   const AnomalyScene& task) {
  SceneConfig cfg = task.scene.config;
  cfg.explicit_features = {task.scene.features[task.thread_index]};
  return sim::generate_scene(seed, cfg);
}

// ---- search: a zipper target behind distractor features ----

struct SearchScene {
  SurfaceScene scene;
  std::size_t target_index = 0;
  std::vector<Vec2> path;
  Pose2D query_pose;     // where the visual query image is taken
  double target_arclength = 0.0;
};

inline SearchScene make_search_scene(std::uint64_t seed) {
  SceneConfig cfg = training_scene_config();
  cfg.feature_counts = {};
  Rng rng(derive_seed(seed, 0x5ea7));

  const double y = rng.uniform(0.10, cfg.extent_y - 0.10);
  const double x0 = 0.03, x1 = cfg.extent_x - 0.03;
  std::vector<Vec2> path{{x0, y}, {x1, y}};

  // distractors first, target near the far end, all crossing the path
  auto crossing = [&](double x, double tilt) {
    const double len = rng.uniform(0.05, 0.08);
    const Vec2 mid{x, y + rng.uniform(-0.004, 0.004)};
    const Vec2 dir{std::sin(tilt), std::cos(tilt)};
    Vec2 a = mid - dir * (len / 2.0), b = mid + dir * (len / 2.0);
    a.y = std::clamp(a.y, 0.025, cfg.extent_y - 0.025);
    b.y = std::clamp(b.y, 0.025, cfg.extent_y - 0.025);
    return std::vector<Vec2>{a, b};
  };

  FeatureSpec seam;
  seam.kind = FeatureKind::Seam;
  seam.points = crossing(x0 + 0.05, rng.uniform(-0.3, 0.3));
  seam.width = 0.006;
  seam.amplitude = 0.0016;
  seam.stiffness_scale = 1.6;
  seam.albedo_delta = -0.18;
  seam.pitch = 0.005;

  FeatureSpec ruffle;
  ruffle.kind = FeatureKind::Ruffle;
  ruffle.points = crossing(x0 + 0.10, rng.uniform(-0.3, 0.3));
  ruffle.width = 0.02;
  ruffle.amplitude = 0.0014;
  ruffle.stiffness_scale = 0.8;
  ruffle.pitch = 0.008;
  ruffle.albedo_delta = -0.06;

  FeatureSpec button;
  button.kind = FeatureKind::Button;
  button.points = {{x0 + 0.15, y + rng.uniform(-0.002, 0.002)}};
  button.width = 0.012;
  button.amplitude = 0.0018;
  button.stiffness_scale = 3.0;
  button.pitch = rng.uniform(0.0, kTau);

  FeatureSpec zipper;
  zipper.kind = FeatureKind::Zipper;
  const double zx = x0 + rng.uniform(0.19, 0.22);
  zipper.points = crossing(zx, rng.uniform(-0.25, 0.25));
  zipper.width = 0.008;
  zipper.amplitude = 0.0018;
  zipper.stiffness_scale = 3.0;
  zipper.pitch = 0.004;
  zipper.albedo_delta = -0.12;

  cfg.explicit_features = {seam, ruffle, button, zipper};
  SearchScene out;
  out.scene = sim::generate_scene(seed, cfg);
  out.target_index = 3;
  out.path = path;
  const Vec2 target_mid =
      (zipper.points[0] + zipper.points[1]) * 0.5;
  const Vec2 band = zipper.points[1] - zipper.points[0];
  out.query_pose = {target_mid.x, target_mid.y,
                    wrap_angle(std::atan2(band.y, band.x))};
  out.target_arclength = target_mid.x - x0;
  return out;
}

// ---- servo: an s-shaped cable ----

struct ServoScene {
  SurfaceScene scene;
  std::size_t cable_index = 0;
  std::vector<Vec2> spine;
  double total_length = 0.0;
  Pose2D reference_pose;  // tangent-aligned: the feature reads horizontal
  Pose2D start;
};

inline ServoScene make_servo_scene(std::uint64_t seed) {
  SceneConfig cfg = training_scene_config();
  cfg.feature_counts = {};
  Rng rng(derive_seed(seed, 0x5e40));

  // s-curve: 2 mm cable, ~0.3 m long
  const double cy = cfg.extent_y / 2.0 + rng.uniform(-0.01, 0.01);
  const double amp = 0.032 + rng.uniform(-0.004, 0.004);
  FeatureSpec cable;
  cable.kind = FeatureKind::CableSpline;
  cable.points = {{0.04, cy - amp},       {0.09, cy - amp},
                  {0.15, cy},             {0.21, cy + amp},
                  {0.26, cy + amp * 0.6}, {0.27, cy}};
  cable.width = 0.002;
  cable.amplitude = 0.0018;
  cable.stiffness_scale = 2.8;
  cable.albedo_delta = -0.25;

  cfg.explicit_features = {cable};
  ServoScene out;
  out.scene = sim::generate_scene(seed, cfg);
  out.cable_index = 0;
  out.spine = out.scene.feature_spines[0];
  out.total_length = sim::detail::polyline_length(out.spine);

  const double ref_s = 0.02;
  const Vec2 rp = detail::point_at_arclength(out.spine, ref_s);
  out.reference_pose = {rp.x, rp.y,
                        wrap_angle(detail::tangent_at_arclength(out.spine, ref_s))};
  const double start_s = 0.008;
  const Vec2 sp = detail::point_at_arclength(out.spine, start_s);
  out.start = {sp.x, sp.y,
               wrap_angle(detail::tangent_at_arclength(out.spine, start_s))};
  return out;
}

// ---- towel classification: hems, corners, and interiors ----

struct TowelScene {
  SurfaceScene scene;
  std::vector<Pose2D> edge_poses;
  std::vector<Pose2D> corner_poses;
  std::vector<Pose2D> interior_poses;
};

inline TowelScene make_towel_scene(std::uint64_t seed, int poses_per_class) {
  SceneConfig cfg = training_scene_config();
  cfg.feature_counts = {};
  Rng rng(derive_seed(seed, 0x70e1));

  // one long hem, one corner, generous towel body for interior patches
  FeatureSpec hem;
  hem.kind = FeatureKind::TowelEdge;
  hem.points = {{0.05, 0.10}, {0.25, 0.10}};  // raised side: +y
  hem.width = 0.003;
  hem.amplitude = 0.0022;
  hem.stiffness_scale = 1.4;
  hem.albedo_delta = 0.12;
  hem.region_depth = 0.10;

  FeatureSpec corner;
  corner.kind = FeatureKind::TowelCorner;
  corner.points = {{0.08, 0.22}, {0.16, 0.22}};
  corner.width = 0.003;
  corner.amplitude = 0.0022;
  corner.stiffness_scale = 1.4;
  corner.albedo_delta = 0.12;
  corner.region_depth = 0.08;

  cfg.explicit_features = {hem, corner};
  TowelScene out;
  out.scene = sim::generate_scene(seed, cfg);

  for (int i = 0; i < poses_per_class; ++i) {
    // edge: on the hem band, random position along it
    const double x = rng.uniform(0.07, 0.23);
    out.edge_poses.push_back({x, 0.10 + 0.006, rng.uniform(0.0, kTau)});
    // corner: near the corner apex, inside the quarter-plane
    out.corner_poses.push_back({0.08 + 0.004 + rng.uniform(-0.002, 0.002),
                                0.22 + 0.004 + rng.uniform(-0.002, 0.002),
                                rng.uniform(0.0, kTau)});
    // interior: deep inside the towel body behind the hem
    out.interior_poses.push_back(
        {rng.uniform(0.08, 0.22), rng.uniform(0.135, 0.165), rng.uniform(0.0, kTau)});
  }
  return out;
}

// ---- localization: a zipper plus clutter in one workspace ----

struct LocalizeScene {
  SurfaceScene scene;
  Pose2D query_pose;  // ground-truth location of the tactile query
};

inline LocalizeScene make_localize_scene(std::uint64_t seed) {
  SceneConfig cfg = training_scene_config();
  cfg.feature_counts = {};
  Rng rng(derive_seed(seed, 0x10c4));

  FeatureSpec zipper;
  zipper.kind = FeatureKind::Zipper;
  const Vec2 mid{rng.uniform(0.10, 0.20), rng.uniform(0.10, 0.20)};
  const double ang = rng.uniform(0.0, kTau);
  const Vec2 dir{std::cos(ang), std::sin(ang)};
  zipper.points = {mid - dir * 0.05, mid + dir * 0.05};
  zipper.width = 0.008;
  zipper.amplitude = 0.0018;
  zipper.stiffness_scale = 3.0;
  zipper.pitch = 0.004;
  zipper.albedo_delta = -0.12;

  FeatureSpec wrinkle;
  wrinkle.kind = FeatureKind::Wrinkle;
  wrinkle.points = {{0.05, 0.25}, {0.12, 0.22}, {0.2, 0.26}};
  wrinkle.width = 0.01;
  wrinkle.amplitude = 0.001;
  wrinkle.stiffness_scale = 0.8;

  FeatureSpec seam;
  seam.kind = FeatureKind::Seam;
  seam.points = {{0.22, 0.05}, {0.27, 0.12}};
  seam.width = 0.006;
  seam.amplitude = 0.0015;
  seam.stiffness_scale = 1.6;
  seam.albedo_delta = -0.15;

  cfg.explicit_features = {zipper, wrinkle, seam};
  LocalizeScene out;
  out.scene = sim::generate_scene(seed, cfg);
  out.query_pose = {mid.x, mid.y, wrap_angle(ang)};
  return out;
}

// duplicated-feature variant: two identical seams, multimodality check
struct TwinSeamScene {
  SurfaceScene scene;
  Pose2D query_pose;
  Pose2D twin_pose;
};

inline TwinSeamScene make_twin_seam_scene(std::uint64_t seed) {
  SceneConfig cfg = training_scene_config();
  cfg.feature_counts = {};
  FeatureSpec seam;
  seam.kind = FeatureKind::Seam;
  seam.points = {{0.06, 0.08}, {0.14, 0.08}};
  seam.width = 0.006;
  seam.amplitude = 0.0016;
  seam.stiffness_scale = 1.6;
  seam.albedo_delta = -0.18;
  seam.pitch = 0.005;
  FeatureSpec twin = seam;
  twin.points = {{0.06, 0.22}, {0.14, 0.22}};
  cfg.explicit_features = {seam, twin};
  TwinSeamScene out;
  out.scene = sim::generate_scene(seed, cfg);
  out.query_pose = {0.10, 0.08, 0.0};
  out.twin_pose = {0.10, 0.22, 0.0};
  return out;
}

}  // namespace vistac::harness
