#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "vistac/data_pipeline.hpp"

using namespace vistac;
using namespace vistac::data;

namespace {

sim::SceneConfig fast_scene_config() {
  sim::SceneConfig cfg;
  cfg.extent_x = 0.12;
  cfg.extent_y = 0.12;
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

// two-sided Kolmogorov-Smirnov statistic against U(lo, hi)
double ks_statistic(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  const double n = double(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = (xs[i] - lo) / (hi - lo);
    d = std::max(d, std::abs((i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - i / n));
  }
  return d;
}

}  // namespace

TEST_CASE("grid counting matches the protocol spacing", "[data]") {
  REQUIRE(plan_grid(0.10, 0.10, 0.02).size() == 36);   // 6 x 6
  REQUIRE(plan_grid(0.30, 0.30, 0.02).size() == 256);  // 16 x 16
  const auto single = plan_grid(0.01, 0.01, 0.02);
  REQUIRE(single.size() == 1);
  REQUIRE(single[0].x == Catch::Approx(0.005));
  REQUIRE(single[0].y == Catch::Approx(0.005));
  for (const auto& p : plan_grid(0.1, 0.1, 0.02)) REQUIRE(p.theta == 0.0);
}

TEST_CASE("jitter honors bounds and uniformity", "[data]") {
  Rng rng(123);
  const int n = 10000;
  std::vector<double> dxs, dys, dthetas;
  for (int i = 0; i < n; ++i) {
    auto [pose, j] = jitter_pose({0.15, 0.15, 0.0}, rng, 0.3, 0.3);
    REQUIRE(std::abs(j.dx) <= 0.02);
    REQUIRE(std::abs(j.dy) <= 0.02);
    REQUIRE(j.dtheta >= 0.0);
    REQUIRE(j.dtheta <= kPi / 4.0);
    REQUIRE(pose.theta == Catch::Approx(j.dtheta));
    dxs.push_back(j.dx);
    dys.push_back(j.dy);
    dthetas.push_back(j.dtheta);
  }
  // KS test at alpha = 0.01: critical value 1.628 / sqrt(n)
  const double crit = 1.628 / std::sqrt(double(n));
  REQUIRE(ks_statistic(dxs, -0.02, 0.02) < crit);
  REQUIRE(ks_statistic(dys, -0.02, 0.02) < crit);
  REQUIRE(ks_statistic(dthetas, 0.0, kPi / 4.0) < crit);
}

TEST_CASE("jitter streams are reproducible and clip at the boundary", "[data]") {
  Rng a(9), b(9);
  for (int i = 0; i < 50; ++i) {
    auto [pa, ja] = jitter_pose({0.1, 0.1, 0.0}, a, 0.3, 0.3);
    auto [pb, jb] = jitter_pose({0.1, 0.1, 0.0}, b, 0.3, 0.3);
    REQUIRE(pa.x == pb.x);
    REQUIRE(ja.dtheta == jb.dtheta);
  }
  // nominal pose on the boundary: some jitters must clip
  Rng rng(3);
  bool clipped = false;
  for (int i = 0; i < 50 && !clipped; ++i)
    clipped = jitter_pose({0.0, 0.0, 0.0}, rng, 0.3, 0.3).second.clipped;
  REQUIRE(clipped);
}

TEST_CASE("collect_pair aligns modalities on a seam", "[data]") {
  sim::SceneConfig cfg = fast_scene_config();
  sim::FeatureSpec seam;
  seam.kind = sim::FeatureKind::Seam;
  seam.points = {{0.02, 0.06}, {0.10, 0.06}};  // horizontal ridge
  seam.width = 0.006;
  seam.amplitude = 0.0016;
  seam.stiffness_scale = 1.6;
  seam.albedo_delta = -0.2;
  cfg.explicit_features = {seam};
  const auto scene = sim::generate_scene(31, cfg);

  const Pose2D pose{0.06, 0.06, 0.0};
  const auto pair = collect_pair(scene, pose, 0.0);
  REQUIRE(pair.has_value());
  REQUIRE(pair->visual.fov == Catch::Approx(2.0 * pair->tactile.fov));

  // centroid oracle: the ridge's energy centroid row in each modality must
  // land at the same surface location (squared deviation from the image
  // mean weights both shading flanks symmetrically)
  auto centroid_row_m = [](const Image& img, double fov) {
    std::vector<double> mean(std::size_t(img.channels), 0.0);
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c)
        for (int ch = 0; ch < img.channels; ++ch)
          mean[std::size_t(ch)] += img.at(r, c, ch);
    for (auto& m : mean) m /= double(img.height) * img.width;
    double acc = 0.0, norm = 0.0;
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c) {
        double w = 0.0;
        for (int ch = 0; ch < img.channels; ++ch) {
          const double d = img.at(r, c, ch) - mean[std::size_t(ch)];
          w += d * d;
        }
        acc += w * r;
        norm += w;
      }
    const double row = acc / norm;
    return (img.height / 2.0 - row - 0.5) * (fov / img.height);  // meters, +up
  };
  const double v_m = centroid_row_m(pair->visual.pixels, pair->visual.fov);
  const double t_m = centroid_row_m(pair->tactile.pixels, pair->tactile.fov);
  // < 2 px of the tactile image in meters
  REQUIRE(std::abs(v_m - t_m) < 2.0 * pair->tactile.fov / 64.0);
}

TEST_CASE("collect_pair skips when the offset move exits the workspace", "[data]") {
  const auto scene = sim::generate_scene(3, fast_scene_config());
  std::string reason;
  const auto pair = collect_pair(scene, {0.10, 0.06, 0.0}, 0.05, 64, &reason);
  REQUIRE_FALSE(pair.has_value());
  REQUIRE(reason.find("offset") != std::string::npos);
}

TEST_CASE("dataset collection is deterministic and round-trips", "[data]") {
  sim::SceneConfig cfg = fast_scene_config();
  cfg.feature_counts[int(sim::FeatureKind::Knot)] = 1;
  const auto scene = sim::generate_scene(17, cfg);

  CollectConfig cc;
  cc.grid_spacing = 0.04;
  cc.offset_d = 0.0;
  cc.threads = 2;
  const auto dir_a = std::filesystem::temp_directory_path() / "vistac_ds_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "vistac_ds_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
  const auto ma = collect_dataset({scene}, 99, cc, dir_a.string());
  const auto mb = collect_dataset({scene}, 99, cc, dir_b.string());

  // 4 x 4 grid, no skips expected away from boundaries
  REQUIRE(ma.records.size() == 16);
  REQUIRE(ma.skips.empty());
  REQUIRE(read_file((dir_a / "manifest.jsonl").string()) ==
          read_file((dir_b / "manifest.jsonl").string()));

  // image round trip: load gives pixel-identical data
  const auto loaded = load_dataset(ma, 2);
  REQUIRE(loaded.size() == 16);
  const auto direct = read_pnm((dir_a / ma.records[3].visual_path).string());
  REQUIRE(loaded[3].visual.px == direct.px);

  // stable iteration order
  for (std::size_t i = 1; i < loaded.size(); ++i)
    REQUIRE(loaded[i].record.sample_id > loaded[i - 1].record.sample_id);

  // deleting a file must fail loudly, naming the sample
  std::filesystem::remove(dir_a / ma.records[5].tactile_path);
  try {
    load_dataset(ma, 1);
    FAIL("expected load_dataset to throw");
  } catch (const std::exception& e) {
    REQUIRE(std::string(e.what()).find(std::to_string(ma.records[5].sample_id)) !=
            std::string::npos);
  }
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("manifest header survives the write/read cycle", "[data]") {
  sim::SceneConfig cfg = fast_scene_config();
  const auto scene = sim::generate_scene(17, cfg);
  CollectConfig cc;
  cc.grid_spacing = 0.06;
  cc.offset_d = 0.0;
  const auto dir = std::filesystem::temp_directory_path() / "vistac_ds_hdr";
  std::filesystem::remove_all(dir);
  const auto m = collect_dataset({scene}, 5, cc, dir.string());
  const auto back = read_manifest((dir / "manifest.jsonl").string());
  REQUIRE(back.seed == 5);
  REQUIRE(back.records.size() == m.records.size());
  REQUIRE(back.config.grid_spacing == Catch::Approx(0.06));
  REQUIRE(back.scene_seeds == std::vector<std::uint64_t>{17});
  std::filesystem::remove_all(dir);
}
