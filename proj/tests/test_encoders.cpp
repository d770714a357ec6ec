#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "vistac/encoders.hpp"

using namespace vistac;
using namespace vistac::enc;

namespace {

Image noise_image(int size, int channels, std::uint64_t seed) {
  Image img(size, size, channels);
  Rng rng(seed);
  // smooth-ish blobs so augmentations stay informative
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double base = 0.5 + 0.3 * std::sin(0.5 * r + double(seed % 7)) *
                                    std::cos(0.4 * c);
      for (int ch = 0; ch < channels; ++ch)
        img.at(r, c, ch) = float(std::clamp(
            base + 0.1 * rng.uniform(-1.0, 1.0) + 0.1 * ch, 0.05, 0.95));
    }
  quantize8(img);
  return img;
}

// learnable toy set: tactile channels are shifted copies of the visual
TrainingSet synthetic_set(int n, int size, std::uint64_t seed) {
  TrainingSet set;
  set.image_size = size;
  for (int i = 0; i < n; ++i) {
    const Image v = noise_image(size, 1, derive_seed(seed, std::uint64_t(i)));
    Image t(size, size, 3);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c)
        for (int ch = 0; ch < 3; ++ch)
          t.at(r, c, ch) = std::clamp(v.at(r, c) * (0.6f + 0.2f * ch), 0.0f, 1.0f);
    quantize8(t);
    set.visual.push_back(pack_u8(v));
    set.tactile.push_back(pack_u8(t));
    set.sample_ids.push_back(i);
    set.scene_ids.push_back(0);
  }
  return set;
}

double ks_uniform(std::vector<double> xs, double lo, double hi) {
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

TEST_CASE("identity augmentation returns the inputs and records a rotation",
          "[encoders]") {
  AugmentationConfig cfg;
  cfg.flip_prob = 0.0;
  cfg.brightness_range = 0.0;
  cfg.contrast_min = 1.0;
  cfg.contrast_max = 1.0;
  cfg.tactile_rotation = false;
  const Image v = noise_image(16, 1, 1), t = noise_image(16, 3, 2);
  Rng rng(5);
  const auto out = augment_pair(v, t, cfg, rng);
  REQUIRE(out.visual.px == v.px);
  REQUIRE(out.tactile.px == t.px);
  REQUIRE(out.applied_rotation >= 0.0);
  REQUIRE(out.applied_rotation < kTau);
}

TEST_CASE("brightness shift clamps at one", "[encoders]") {
  Image img(8, 8, 1, 0.95f);
  enc::detail::color_jitter(img, 0.1, 1.0);
  for (float v : img.px) REQUIRE(v == 1.0f);
}

TEST_CASE("rotation draws are uniform on the circle", "[encoders]") {
  AugmentationConfig cfg;
  const Image v = noise_image(4, 1, 1), t = noise_image(4, 3, 2);
  std::vector<double> draws;
  Rng rng(77);
  for (int i = 0; i < 10000; ++i)
    draws.push_back(augment_pair(v, t, cfg, rng).applied_rotation);
  REQUIRE(ks_uniform(draws, 0.0, kTau) < 1.628 / std::sqrt(10000.0));
}

TEST_CASE("augmentation replays bit-identically from the same stream",
          "[encoders]") {
  AugmentationConfig cfg;
  const Image v = noise_image(16, 1, 3), t = noise_image(16, 3, 4);
  Rng a(42), b(42);
  const auto x = augment_pair(v, t, cfg, a);
  const auto y = augment_pair(v, t, cfg, b);
  REQUIRE(x.applied_rotation == y.applied_rotation);
  REQUIRE(x.visual.px == y.visual.px);
  REQUIRE(x.tactile.px == y.tactile.px);
}

TEST_CASE("cosine similarity basics", "[encoders]") {
  EmbeddingVector a{{1.0f, 0.0f, 0.0f}}, b{{0.0f, 1.0f, 0.0f}};
  EmbeddingVector neg{{-1.0f, 0.0f, 0.0f}};
  REQUIRE(cosine_similarity(a, a) == Catch::Approx(1.0));
  REQUIRE(cosine_similarity(a, b) == Catch::Approx(0.0));
  REQUIRE(cosine_similarity(a, neg) == Catch::Approx(-1.0));
}

TEST_CASE("encoders emit unit embeddings and reject bad shapes", "[encoders]") {
  TrainingSet set = synthetic_set(8, 16, 9);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.stage_channels = {4, 8};
  cfg.embedding_dim = 4;
  cfg.holdout_fraction = 0.0;
  AugmentationConfig aug;
  auto trained = train_encoders(set, cfg, aug);
  const auto e = encode_visual(trained.params, set.visual_image(0));
  REQUIRE(e.is_unit(1e-6));
  const auto et = encode_tactile(trained.params, set.tactile_image(0));
  REQUIRE(et.is_unit(1e-6));
  REQUIRE_THROWS_AS(encode_visual(trained.params, set.tactile_image(0)),
                    std::invalid_argument);
  Image wrong_size(8, 8, 1, 0.5f);
  REQUIRE_THROWS_AS(encode_visual(trained.params, wrong_size),
                    std::invalid_argument);
}

TEST_CASE("training starts at ln B and improves on a learnable toy set",
          "[encoders]") {
  TrainingSet set = synthetic_set(48, 16, 10);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 12;
  cfg.stage_channels = {8, 16};
  cfg.embedding_dim = 4;
  cfg.holdout_fraction = 0.0;
  cfg.seed = 3;
  cfg.inv_temperature_start = 1.0;  // constant, paper-form loss throughout
  AugmentationConfig aug;
  aug.tactile_rotation = false;  // the toy pairing is not rotation-invariant
  auto trained = train_encoders(set, cfg, aug);
  REQUIRE(trained.initial_loss ==
          Catch::Approx(std::log(16.0)).epsilon(0.10));
  REQUIRE(trained.final_loss < trained.initial_loss);
}

TEST_CASE("batch larger than dataset is rejected", "[encoders]") {
  TrainingSet set = synthetic_set(8, 16, 11);
  TrainConfig cfg;
  cfg.batch_size = 64;
  REQUIRE_THROWS_AS(train_encoders(set, cfg, AugmentationConfig{}),
                    std::invalid_argument);
}

TEST_CASE("encoder checkpoints round-trip", "[encoders]") {
  TrainingSet set = synthetic_set(8, 16, 12);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.stage_channels = {4};
  cfg.embedding_dim = 4;
  cfg.holdout_fraction = 0.0;
  auto trained = train_encoders(set, cfg, AugmentationConfig{});
  const auto dir =
      (std::filesystem::temp_directory_path() / "vistac_enc_ckpt").string();
  save_encoders(trained.params, dir);
  auto loaded = load_encoders(dir);
  const auto a = encode_visual(trained.params, set.visual_image(1));
  const auto b = encode_visual(loaded, set.visual_image(1));
  REQUIRE(a.values == b.values);
  std::filesystem::remove_all(dir);
}
