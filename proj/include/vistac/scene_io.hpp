#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "vistac/surface_sim.hpp"

namespace vistac::sim {

using json = nlohmann::json;

inline json to_json(const FeatureSpec& f) {
  json pts = json::array();
  for (const auto& p : f.points) pts.push_back({p.x, p.y});
  return json{{"kind", feature_kind_name(f.kind)},
              {"points", pts},
              {"width", f.width},
              {"amplitude", f.amplitude},
              {"burial_depth", f.burial_depth},
              {"stiffness_scale", f.stiffness_scale},
              {"albedo_delta", f.albedo_delta},
              {"pitch", f.pitch},
              {"region_depth", f.region_depth}};
}

inline FeatureSpec feature_from_json(const json& j) {
  FeatureSpec f;
  f.kind = feature_kind_from_name(j.at("kind").get<std::string>());
  for (const auto& p : j.at("points")) f.points.push_back({p.at(0), p.at(1)});
  f.width = j.value("width", f.width);
  f.amplitude = j.value("amplitude", f.amplitude);
  f.burial_depth = j.value("burial_depth", f.burial_depth);
  f.stiffness_scale = j.value("stiffness_scale", f.stiffness_scale);
  f.albedo_delta = j.value("albedo_delta", f.albedo_delta);
  f.pitch = j.value("pitch", f.pitch);
  f.region_depth = j.value("region_depth", f.region_depth);
  return f;
}

inline json to_json(const SceneConfig& c) {
  json counts = json::object();
  for (int k = 0; k < kNumFeatureKinds; ++k)
    if (c.feature_counts[std::size_t(k)] > 0)
      counts[feature_kind_name(FeatureKind(k))] = c.feature_counts[std::size_t(k)];
  json feats = json::array();
  for (const auto& f : c.explicit_features) feats.push_back(to_json(f));
  return json{{"extent_x", c.extent_x},
              {"extent_y", c.extent_y},
              {"resolution", c.resolution},
              {"tactile_fov", c.tactile_fov},
              {"base_relief_amp", c.base_relief_amp},
              {"texture_scale_min", c.texture_scale_min},
              {"texture_scale_max", c.texture_scale_max},
              {"albedo_contrast_min", c.albedo_contrast_min},
              {"albedo_contrast_max", c.albedo_contrast_max},
              {"visual_light_angle", c.visual_light_angle},
              {"visual_shade_gain", c.visual_shade_gain},
              {"tactile_light_angle0", c.tactile_light_angle0},
              {"tactile_shade_gain", c.tactile_shade_gain},
              {"tactile_depth_gain", c.tactile_depth_gain},
              {"indentation_cap", c.indentation_cap},
              {"tactile_background", c.tactile_background},
              {"force_gain", c.force_gain},
              {"max_press_travel", c.max_press_travel},
              {"target_force", c.target_force},
              {"feature_counts", counts},
              {"explicit_features", feats}};
}

inline SceneConfig scene_config_from_json(const json& j) {
  SceneConfig c;
  c.extent_x = j.value("extent_x", c.extent_x);
  c.extent_y = j.value("extent_y", c.extent_y);
  c.resolution = j.value("resolution", c.resolution);
  c.tactile_fov = j.value("tactile_fov", c.tactile_fov);
  c.base_relief_amp = j.value("base_relief_amp", c.base_relief_amp);
  c.texture_scale_min = j.value("texture_scale_min", c.texture_scale_min);
  c.texture_scale_max = j.value("texture_scale_max", c.texture_scale_max);
  c.albedo_contrast_min = j.value("albedo_contrast_min", c.albedo_contrast_min);
  c.albedo_contrast_max = j.value("albedo_contrast_max", c.albedo_contrast_max);
  c.visual_light_angle = j.value("visual_light_angle", c.visual_light_angle);
  c.visual_shade_gain = j.value("visual_shade_gain", c.visual_shade_gain);
  c.tactile_light_angle0 = j.value("tactile_light_angle0", c.tactile_light_angle0);
  c.tactile_shade_gain = j.value("tactile_shade_gain", c.tactile_shade_gain);
  c.tactile_depth_gain = j.value("tactile_depth_gain", c.tactile_depth_gain);
  c.indentation_cap = j.value("indentation_cap", c.indentation_cap);
  if (j.contains("tactile_background"))
    c.tactile_background = j.at("tactile_background").get<std::array<double, 3>>();
  c.force_gain = j.value("force_gain", c.force_gain);
  c.max_press_travel = j.value("max_press_travel", c.max_press_travel);
  c.target_force = j.value("target_force", c.target_force);
  if (j.contains("feature_counts"))
    for (const auto& [name, count] : j.at("feature_counts").items())
      c.feature_counts[std::size_t(feature_kind_from_name(name))] = count.get<int>();
  if (j.contains("explicit_features"))
    for (const auto& fj : j.at("explicit_features"))
      c.explicit_features.push_back(feature_from_json(fj));
  return c;
}

inline SceneConfig load_scene_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_scene_config: cannot open " + path);
  json j;
  f >> j;
  return scene_config_from_json(j);
}

// scene fields as portable arrays + a json sidecar, for offline inspection
inline void export_scene(const SurfaceScene& scene, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto rows = std::size_t(scene.ny), cols = std::size_t(scene.nx);
  write_npy_f32(dir + "/height.npy", scene.height, rows, cols);
  write_npy_f32(dir + "/albedo.npy", scene.albedo, rows, cols);
  write_npy_f32(dir + "/tactile_relief.npy", scene.tactile_relief, rows, cols);
  std::vector<float> mask(scene.feature_id.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = float(scene.feature_id[i]);
  write_npy_f32(dir + "/feature_id.npy", mask, rows, cols);

  json features = json::array();
  for (const auto& f : scene.features) features.push_back(to_json(f));
  json meta{{"seed", scene.seed},
            {"nx", scene.nx},
            {"ny", scene.ny},
            {"footprint_fraction", scene.footprint_fraction},
            {"config", to_json(scene.config)},
            {"features", features}};
  std::ofstream out(dir + "/scene.json");
  out << meta.dump(2) << "\n";
}

}  // namespace vistac::sim
