#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "vistac/passive.hpp"

using namespace vistac;
using namespace vistac::passive;

namespace {

// small untrained encoder pair: localization grid identities hold for any
// weights because equal crops embed equally
enc::EncoderParams tiny_encoders(std::uint64_t seed) {
  nn::ConvNetConfig vis;
  vis.in_channels = 1;
  vis.stage_channels = {4, 8};
  vis.head_dim = 8;
  vis.image_size = 16;
  nn::ConvNetConfig tac = vis;
  tac.in_channels = 3;
  enc::EncoderParams p;
  p.visual_net = nn::ConvNet(vis, derive_seed(seed, 1));
  p.tactile_net = nn::ConvNet(tac, derive_seed(seed, 2));
  p.embedding_dim = 8;
  p.image_size = 16;
  return p;
}

Image textured_workspace(int h, int w, std::uint64_t seed) {
  Image img(h, w, 1);
  Rng rng(seed);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      img.at(r, c) = float(0.3 + 0.4 * std::sin(0.2 * r + 0.1 * c) +
                           0.05 * rng.uniform(-1.0, 1.0));
  for (auto& v : img.px) v = std::clamp(v, 0.0f, 1.0f);
  quantize8(img);
  return img;
}

Image tactile_stub(int size) {
  Image img(size, size, 3, 0.5f);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) img.at(r, c, 1) = float(0.3 + 0.01 * r);
  quantize8(img);
  return img;
}

}  // namespace

TEST_CASE("localize produces a full grid of cosine scores", "[passive]") {
  auto params = tiny_encoders(3);
  const Image workspace = textured_workspace(64, 80, 5);
  const auto map = localize(workspace, tactile_stub(16), params, 16, 8);
  REQUIRE(map.rows == (64 - 16) / 8 + 1);
  REQUIRE(map.cols == (80 - 16) / 8 + 1);
  for (const float s : map.scores) {
    REQUIRE(s >= -1.0f);
    REQUIRE(s <= 1.0f);
  }
  REQUIRE(map.max_score() == map.at(map.argmax_row, map.argmax_col));
}

TEST_CASE("localize rejects undersized workspaces", "[passive]") {
  auto params = tiny_encoders(3);
  const Image small = textured_workspace(8, 8, 5);
  REQUIRE_THROWS_AS(localize(small, tactile_stub(16), params, 16, 8),
                    std::invalid_argument);
}

TEST_CASE("localization is translation-consistent by one stride", "[passive]") {
  auto params = tiny_encoders(7);
  const Image workspace = textured_workspace(96, 96, 9);
  const int stride = 8, patch = 16;
  const auto base = localize(workspace, tactile_stub(16), params, patch, stride);

  // shift the workspace left by one stride: crops coincide with the
  // originals one cell over, so scores must match cell-for-cell
  Image shifted(96, 96, 1);
  for (int r = 0; r < 96; ++r)
    for (int c = 0; c < 96; ++c)
      shifted.at(r, c) = workspace.at(r, std::min(95, c + stride));
  const auto moved = localize(shifted, tactile_stub(16), params, patch, stride);
  for (int r = 0; r < base.rows; ++r)
    for (int c = 0; c + 1 < base.cols; ++c)
      REQUIRE(moved.at(r, c) == Catch::Approx(base.at(r, c + 1)).margin(1e-6));
}

TEST_CASE("composite applies gamma to scaled scores", "[passive]") {
  LocalizationHeatmap map;
  map.rows = 1;
  map.cols = 3;
  map.patch_size_px = 4;
  map.stride_px = 4;
  map.scores = {0.0f, 0.5f, 1.0f};
  map.argmax_row = 0;
  map.argmax_col = 2;
  Image ws(4, 12, 1, 1.0f);
  const auto out = composite_heatmap(map, ws);
  REQUIRE_FALSE(out.degenerate);
  // cell centers: scaled scores 0, 0.5, 1 -> multipliers 0, 0.5^1.6, 1
  REQUIRE(out.image.at(2, 2) == Catch::Approx(0.0).margin(1e-6));
  REQUIRE(out.image.at(2, 6) == Catch::Approx(std::pow(0.5, 1.6)).margin(1e-6));
  REQUIRE(out.image.at(2, 10) == Catch::Approx(1.0).margin(1e-6));

  // constant heatmap: flagged, flat 0.5 weighting
  LocalizationHeatmap flat = map;
  flat.scores = {0.7f, 0.7f, 0.7f};
  const auto deg = composite_heatmap(flat, ws);
  REQUIRE(deg.degenerate);
  REQUIRE(deg.image.at(2, 6) == Catch::Approx(0.5).margin(1e-6));
}

TEST_CASE("classifier counts and determinism", "[passive]") {
  auto params = tiny_encoders(11);
  std::vector<std::pair<std::string, std::vector<Image>>> canonicals;
  for (const char* name : {"edge", "corner", "interior"}) {
    std::vector<Image> imgs;
    for (int i = 0; i < 4; ++i)
      imgs.push_back(textured_workspace(16, 16, fnv1a(std::string(name)) + i));
    canonicals.emplace_back(name, imgs);
  }
  const auto set = build_classifier(canonicals, params, 100, 50, {}, 42);
  REQUIRE(set.references.size() == 3 * 4 * 100);  // paper counts
  const auto set2 = build_classifier(canonicals, params, 100, 50, {}, 42);
  for (std::size_t i = 0; i < 20; ++i)
    REQUIRE(set.references[i].values == set2.references[i].values);

  REQUIRE_THROWS_AS(build_classifier(canonicals, params, 1, 5000, {}, 42),
                    std::invalid_argument);
}

TEST_CASE("zero-range augmentation keeps raw canonical embeddings", "[passive]") {
  auto params = tiny_encoders(13);
  enc::AugmentationConfig none;
  none.flip_prob = 0.0;
  none.brightness_range = 0.0;
  none.contrast_min = 1.0;
  none.contrast_max = 1.0;
  const Image canonical = textured_workspace(16, 16, 21);
  const auto set = build_classifier({{"only", {canonical}}}, params, 1, 1, none, 0);
  const auto direct = enc::encode_visual(params, canonical);
  REQUIRE(set.references.size() == 1);
  REQUIRE(set.references[0].values == direct.values);
}

TEST_CASE("classify basics: single class, exact match, duplication invariance",
          "[passive]") {
  auto params = tiny_encoders(17);
  const Image canonical = textured_workspace(16, 16, 31);
  auto single = build_classifier({{"lone", {canonical}}}, params, 8, 4, {}, 1);
  const auto tac = tactile_stub(16);
  REQUIRE(classify(tac, single, params).class_name == "lone");

  // two classes: duplicating the whole reference set with k doubled keeps
  // the label and doubles the scores
  std::vector<std::pair<std::string, std::vector<Image>>> canonicals{
      {"a", {textured_workspace(16, 16, 41)}},
      {"b", {textured_workspace(16, 16, 97)}}};
  auto set = build_classifier(canonicals, params, 10, 6, {}, 2);
  const auto before = classify(tac, set, params);
  ClassifierReferenceSet doubled = set;
  doubled.references.insert(doubled.references.end(), set.references.begin(),
                            set.references.end());
  doubled.labels.insert(doubled.labels.end(), set.labels.begin(), set.labels.end());
  doubled.k = set.k * 2;
  const auto after = classify(tac, doubled, params);
  REQUIRE(after.class_name == before.class_name);
  for (std::size_t c = 0; c < before.class_scores.size(); ++c)
    REQUIRE(after.class_scores[c] ==
            Catch::Approx(2.0 * before.class_scores[c]).margin(1e-9));
}

TEST_CASE("classify rejects mismatched encoder weights", "[passive]") {
  auto params = tiny_encoders(19);
  const auto set = build_classifier(
      {{"x", {textured_workspace(16, 16, 51)}}}, params, 2, 2, {}, 3);
  auto other = tiny_encoders(23);
  REQUIRE_THROWS_AS(classify(tactile_stub(16), set, other), std::invalid_argument);
}

TEST_CASE("reference sets round-trip through disk", "[passive]") {
  auto params = tiny_encoders(29);
  const auto set = build_classifier(
      {{"x", {textured_workspace(16, 16, 61)}},
       {"y", {textured_workspace(16, 16, 62)}}},
      params, 3, 2, {}, 4);
  const auto path =
      (std::filesystem::temp_directory_path() / "vistac_refs.json").string();
  save_reference_set(set, path);
  const auto back = load_reference_set(path);
  REQUIRE(back.class_names == set.class_names);
  REQUIRE(back.labels == set.labels);
  REQUIRE(back.k == set.k);
  REQUIRE(back.encoder_hash == set.encoder_hash);
  REQUIRE(back.references.size() == set.references.size());
  REQUIRE(back.references[0].values == set.references[0].values);
  std::filesystem::remove(path);
}
