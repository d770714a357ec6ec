#include <catch2/catch_amalgamated.hpp>

#include "vistac/rotation_net.hpp"

using namespace vistac;
using namespace vistac::rot;

namespace {

Image pattern_image(int size, int channels, double angle, std::uint64_t seed) {
  // oriented stripes so the rotation is recoverable
  Image img(size, size, channels);
  Rng rng(seed);
  const double fx = std::cos(angle), fy = std::sin(angle);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double u = c - size / 2.0, v = size / 2.0 - r;
      const double phase = 0.9 * (fx * u + fy * v);
      for (int ch = 0; ch < channels; ++ch)
        img.at(r, c, ch) =
            float(std::clamp(0.5 + 0.4 * std::sin(phase + 0.3 * ch), 0.0, 1.0));
    }
  quantize8(img);
  return img;
}

enc::TrainingSet oriented_set(int n, int size, std::uint64_t seed) {
  enc::TrainingSet set;
  set.image_size = size;
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, std::uint64_t(i)));
    const double angle = rng.uniform(0.0, kTau);
    set.visual.push_back(enc::pack_u8(pattern_image(size, 1, angle, seed + i)));
    set.tactile.push_back(enc::pack_u8(pattern_image(size, 3, angle, seed + i)));
    set.sample_ids.push_back(i);
    set.scene_ids.push_back(0);
  }
  return set;
}

}  // namespace

TEST_CASE("bucketize arithmetic and boundaries", "[rotation]") {
  REQUIRE(bucketize(0.0, 18) == 0);
  REQUIRE(bucketize(25.0 * kPi / 180.0, 18) == 1);  // 20-degree buckets
  REQUIRE(bucketize(kTau - 1e-9, 18) == 17);
  REQUIRE_THROWS_AS(bucketize(1.0, 1), std::invalid_argument);
}

TEST_CASE("bucketize is total, periodic, and partitions the circle",
          "[rotation]") {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(-20.0, 20.0);
    const int b = bucketize(a, 18);
    REQUIRE(b >= 0);
    REQUIRE(b < 18);
    REQUIRE(bucketize(a + kTau, 18) == b);
    // the bucket's own center maps back to the bucket
    REQUIRE(bucketize(bucket_center(b, 18), 18) == b);
  }
  // exact partition: every bucket is hit by its half-open interval
  for (int b = 0; b < 18; ++b) {
    const double w = kTau / 18.0;
    REQUIRE(bucketize(b * w, 18) == b);
    REQUIRE(bucketize((b + 1) * w - 1e-12, 18) == b);
  }
}

TEST_CASE("confidence of uniform and one-hot distributions", "[rotation]") {
  RotationDistribution uniform;
  uniform.probs.assign(18, 1.0f / 18.0f);
  REQUIRE(confidence(uniform) == Catch::Approx(0.0).margin(1e-12));

  RotationDistribution onehot;
  onehot.probs.assign(18, 0.0f);
  onehot.probs[4] = 1.0f;
  // direct arithmetic oracle: sum (p_i - 1/18)^2 / 18
  double oracle = 0.0;
  for (int i = 0; i < 18; ++i) {
    const double p = (i == 4) ? 1.0 : 0.0;
    oracle += (p - 1.0 / 18.0) * (p - 1.0 / 18.0);
  }
  oracle /= 18.0;
  REQUIRE(confidence(onehot) == Catch::Approx(oracle).margin(1e-9));

  // one-hot is the maximum over the simplex for fixed bucket count
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    RotationDistribution d;
    d.probs.assign(18, 0.0f);
    double norm = 0.0;
    for (auto& p : d.probs) {
      p = float(rng.uniform());
      norm += p;
    }
    for (auto& p : d.probs) p = float(p / norm);
    REQUIRE(confidence(d) <= confidence(onehot) + 1e-12);
  }
}

TEST_CASE("merging mass toward the peak never lowers confidence", "[rotation]") {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    RotationDistribution d;
    d.probs.assign(18, 0.0f);
    double norm = 0.0;
    for (auto& p : d.probs) {
      p = float(rng.uniform());
      norm += p;
    }
    for (auto& p : d.probs) p = float(p / norm);
    const double before = confidence(d);
    // move mass from a random non-peak bucket onto the peak
    const int peak = d.argmax();
    int src = int(rng.uniform_index(18));
    if (src == peak) src = (src + 1) % 18;
    const float moved = d.probs[std::size_t(src)] * float(rng.uniform());
    d.probs[std::size_t(src)] -= moved;
    d.probs[std::size_t(peak)] += moved;
    REQUIRE(confidence(d) >= before - 1e-12);
  }
}

TEST_CASE("circular confidence mode ranks peaked above uniform", "[rotation]") {
  RotationDistribution uniform, onehot;
  uniform.probs.assign(18, 1.0f / 18.0f);
  onehot.probs.assign(18, 0.0f);
  onehot.probs[2] = 1.0f;
  REQUIRE(confidence(onehot, ConfidenceMode::CircularResultant) ==
          Catch::Approx(1.0).margin(1e-6));
  REQUIRE(confidence(uniform, ConfidenceMode::CircularResultant) ==
          Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("untrained predictions are near-uniform and normalized", "[rotation]") {
  nn::ConvNetConfig cfg;
  cfg.in_channels = 4;
  cfg.stage_channels = {8, 16};
  cfg.head_dim = 18;
  cfg.normalize_output = false;
  cfg.head_init_scale = 0.05;
  cfg.image_size = 16;
  RotationNetParams params{nn::ConvNet(cfg, 3), 18, 16};
  double max_prob_acc = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Image v = pattern_image(16, 1, 0.1 * i, std::uint64_t(i));
    const Image t = pattern_image(16, 3, 0.2 * i, std::uint64_t(i) + 999);
    const auto dist = predict_rotation(params, v, t);
    double sum = 0.0, mx = 0.0;
    for (float p : dist.probs) {
      sum += p;
      mx = std::max(mx, double(p));
    }
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-6));
    max_prob_acc += mx;
  }
  REQUIRE(max_prob_acc / 100.0 < 3.0 / 18.0);
}

TEST_CASE("rotation training starts near ln N and the loss decreases",
          "[rotation]") {
  auto set = oriented_set(96, 16, 21);
  RotationTrainConfig cfg;
  cfg.batch_size = 32;
  cfg.epochs = 6;
  cfg.n_buckets = 18;
  cfg.stage_channels = {8, 16};
  cfg.holdout_fraction = 0.1;
  cfg.seed = 11;
  auto trained = train_rotation(set, cfg, enc::AugmentationConfig{});
  REQUIRE(trained.initial_loss == Catch::Approx(std::log(18.0)).epsilon(0.10));
  REQUIRE(trained.log.back().loss < trained.initial_loss);
}

TEST_CASE("rotation training requires rotation labels", "[rotation]") {
  auto set = oriented_set(40, 16, 22);
  RotationTrainConfig cfg;
  cfg.batch_size = 8;
  enc::AugmentationConfig aug;
  aug.tactile_rotation = false;
  REQUIRE_THROWS_AS(train_rotation(set, cfg, aug), std::invalid_argument);
}

TEST_CASE("rotation checkpoint keeps bucket metadata", "[rotation]") {
  nn::ConvNetConfig cfg;
  cfg.in_channels = 4;
  cfg.stage_channels = {4};
  cfg.head_dim = 18;
  cfg.normalize_output = false;
  cfg.image_size = 16;
  RotationNetParams params{nn::ConvNet(cfg, 8), 18, 16};
  const auto path =
      (std::filesystem::temp_directory_path() / "vistac_rot.ckpt").string();
  save_rotation_net(params, path);
  auto loaded = load_rotation_net(path);
  REQUIRE(loaded.n_buckets == 18);
  REQUIRE(loaded.net.serialize() == params.net.serialize());
  std::filesystem::remove(path);
}
