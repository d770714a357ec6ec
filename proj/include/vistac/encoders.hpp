#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "vistac/data_pipeline.hpp"
#include "vistac/image.hpp"
#include "vistac/nn/adam.hpp"
#include "vistac/nn/checkpoint.hpp"
#include "vistac/nn/layers.hpp"
#include "vistac/nn/losses.hpp"
#include "vistac/rng.hpp"

namespace vistac::enc {

using json = nlohmann::json;

// Unit-norm point in the shared latent space.
struct EmbeddingVector {
  std::vector<float> values;

  double dot(const EmbeddingVector& o) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      acc += double(values[i]) * o.values[i];
    return acc;
  }
  double norm() const {
    double acc = 0.0;
    for (const float v : values) acc += double(v) * v;
    return std::sqrt(acc);
  }
  bool is_unit(double tol = 1e-6) const { return std::abs(norm() - 1.0) <= tol; }
};

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  return a.dot(b);
}

struct AugmentationConfig {
  double flip_prob = 0.5;          // per axis, independent per modality
  double brightness_range = 0.12;  // additive, symmetric
  double contrast_min = 0.85;
  double contrast_max = 1.15;
  bool tactile_rotation = true;    // U(0, 2pi) rotation of the tactile image
};

inline json to_json(const AugmentationConfig& a) {
  return json{{"flip_prob", a.flip_prob},
              {"brightness_range", a.brightness_range},
              {"contrast_min", a.contrast_min},
              {"contrast_max", a.contrast_max},
              {"tactile_rotation", a.tactile_rotation}};
}

inline AugmentationConfig augmentation_from_json(const json& j) {
  AugmentationConfig a;
  a.flip_prob = j.value("flip_prob", a.flip_prob);
  a.brightness_range = j.value("brightness_range", a.brightness_range);
  a.contrast_min = j.value("contrast_min", a.contrast_min);
  a.contrast_max = j.value("contrast_max", a.contrast_max);
  a.tactile_rotation = j.value("tactile_rotation", a.tactile_rotation);
  return a;
}

// rotation-net training reuses the pipeline without flips, which would
// corrupt the rotation labels (a mirror is not a rotation)
inline AugmentationConfig rotation_augmentation(AugmentationConfig base) {
  base.flip_prob = 0.0;
  return base;
}

struct AugmentedPair {
  Image visual;
  Image tactile;
  double applied_rotation = 0.0;
};

namespace detail {

inline void color_jitter(Image& img, double brightness, double contrast) {
  for (auto& v : img.px)
    v = std::clamp(float((double(v) + brightness - 0.5) * contrast + 0.5), 0.0f,
                   1.0f);
}

}  // namespace detail

// Every random draw happens unconditionally so the stream replays
// identically whichever knobs are enabled; the rotation draw is always
// recorded for reuse as the rotation-net label.
inline AugmentedPair augment_pair(const Image& visual, const Image& tactile,
                                  const AugmentationConfig& cfg, Rng& rng,
                                  const std::array<double, 3>& tactile_bg = {
                                      0.35, 0.45, 0.55}) {
  AugmentedPair out;
  out.visual = visual;
  out.tactile = tactile;

  const bool vflip_h = rng.bernoulli(cfg.flip_prob);
  const bool vflip_v = rng.bernoulli(cfg.flip_prob);
  const double v_bright = rng.uniform(-cfg.brightness_range, cfg.brightness_range);
  const double v_contrast = rng.uniform(cfg.contrast_min, cfg.contrast_max);
  const bool tflip_h = rng.bernoulli(cfg.flip_prob);
  const bool tflip_v = rng.bernoulli(cfg.flip_prob);
  const double t_bright = rng.uniform(-cfg.brightness_range, cfg.brightness_range);
  const double t_contrast = rng.uniform(cfg.contrast_min, cfg.contrast_max);
  out.applied_rotation = rng.uniform(0.0, kTau);

  if (vflip_h) out.visual = flip_horizontal(out.visual);
  if (vflip_v) out.visual = flip_vertical(out.visual);
  detail::color_jitter(out.visual, v_bright, v_contrast);
  if (tflip_h) out.tactile = flip_horizontal(out.tactile);
  if (tflip_v) out.tactile = flip_vertical(out.tactile);
  if (cfg.tactile_rotation && out.applied_rotation != 0.0) {
    const std::vector<float> border{float(tactile_bg[0]), float(tactile_bg[1]),
                                    float(tactile_bg[2])};
    out.tactile = rotate_image(out.tactile, out.applied_rotation, border);
  }
  detail::color_jitter(out.tactile, t_bright, t_contrast);
  return out;
}

// ---- dataset held in memory as 8-bit pixels ----

struct TrainingSet {
  int image_size = 64;
  std::array<double, 3> tactile_background = {0.35, 0.45, 0.55};
  std::vector<std::vector<std::uint8_t>> visual;   // H*W
  std::vector<std::vector<std::uint8_t>> tactile;  // H*W*3
  std::vector<int> sample_ids;
  std::vector<int> scene_ids;

  std::size_t size() const { return visual.size(); }

  Image visual_image(std::size_t i) const {
    Image img(image_size, image_size, 1);
    for (std::size_t p = 0; p < img.px.size(); ++p)
      img.px[p] = float(visual[i][p]) / 255.0f;
    return img;
  }
  Image tactile_image(std::size_t i) const {
    Image img(image_size, image_size, 3);
    for (std::size_t p = 0; p < img.px.size(); ++p)
      img.px[p] = float(tactile[i][p]) / 255.0f;
    return img;
  }
};

inline std::vector<std::uint8_t> pack_u8(const Image& img) {
  std::vector<std::uint8_t> out(img.px.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::uint8_t(std::lround(std::clamp(img.px[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

inline TrainingSet load_training_set(const data::DatasetManifest& manifest,
                                     unsigned threads = 0) {
  TrainingSet set;
  set.image_size = manifest.config.image_size;
  if (manifest.scene_config_snapshot.contains("tactile_background"))
    set.tactile_background = manifest.scene_config_snapshot.at("tactile_background")
                                 .get<std::array<double, 3>>();
  const auto pairs = data::load_dataset(manifest, threads);
  set.visual.resize(pairs.size());
  set.tactile.resize(pairs.size());
  set.sample_ids.resize(pairs.size());
  set.scene_ids.resize(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    set.visual[i] = pack_u8(pairs[i].visual);
    set.tactile[i] = pack_u8(pairs[i].tactile);
    set.sample_ids[i] = pairs[i].record.sample_id;
    set.scene_ids[i] = pairs[i].record.scene_id;
  }
  return set;
}

// ---- encoders ----

struct EncoderParams {
  nn::ConvNet visual_net;   // 1-channel input
  nn::ConvNet tactile_net;  // 3-channel input
  int embedding_dim = 8;
  int image_size = 64;
};

struct TrainConfig {
  int batch_size = 128;
  int epochs = 30;
  double learning_rate = 1e-3;  // Adam, default parameters
  std::uint64_t seed = 0;
  double holdout_fraction = 0.1;
  bool symmetrized = false;     // row-wise cross-entropy is the default
  double inv_temperature = 1.0; // fidelity: raw dot-product logits
  // from-scratch warmup: sharpen the logits early, anneal back to the
  // plain dot-product loss by the final epochs
  double inv_temperature_start = 10.0;
  std::vector<int> stage_channels = {16, 32, 64, 128};
  int embedding_dim = 8;
};

inline json to_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"seed", c.seed},
              {"holdout_fraction", c.holdout_fraction},
              {"symmetrized", c.symmetrized},
              {"inv_temperature", c.inv_temperature},
              {"inv_temperature_start", c.inv_temperature_start},
              {"stage_channels", c.stage_channels},
              {"embedding_dim", c.embedding_dim}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
  c.symmetrized = j.value("symmetrized", c.symmetrized);
  c.inv_temperature = j.value("inv_temperature", c.inv_temperature);
  c.inv_temperature_start = j.value("inv_temperature_start", c.inv_temperature_start);
  c.stage_channels = j.value("stage_channels", c.stage_channels);
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  return c;
}

inline nn::Tensor to_tensor(const std::vector<Image>& images) {
  if (images.empty()) throw std::invalid_argument("to_tensor: empty batch");
  const int h = images[0].height, w = images[0].width, c = images[0].channels;
  nn::Tensor t(int(images.size()), c, h, w);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = images[n];
    if (img.height != h || img.width != w || img.channels != c)
      throw std::invalid_argument("to_tensor: ragged batch");
    // HWC -> CHW
    for (int ch = 0; ch < c; ++ch)
      for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col)
          t.at(int(n), ch, r, col) = img.at(r, col, ch);
  }
  return t;
}

inline EmbeddingVector row_embedding(const nn::Tensor& out, int row) {
  const int d = int(out.per_sample());
  EmbeddingVector e;
  e.values.assign(out.data.begin() + std::size_t(row) * d,
                  out.data.begin() + std::size_t(row + 1) * d);
  return e;
}

inline EmbeddingVector encode_visual(EncoderParams& params, const Image& visual) {
  if (visual.channels != 1)
    throw std::invalid_argument("encode_visual: expected a grayscale image");
  return row_embedding(params.visual_net.forward(to_tensor({visual})), 0);
}

inline EmbeddingVector encode_tactile(EncoderParams& params, const Image& tactile) {
  if (tactile.channels != 3)
    throw std::invalid_argument("encode_tactile: expected a 3-channel image");
  return row_embedding(params.tactile_net.forward(to_tensor({tactile})), 0);
}

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double top1 = 0.0;
};

struct TrainedEncoders {
  EncoderParams params;
  std::vector<EpochLog> log;
  double holdout_top1 = 0.0;      // mean over 32-way held-out batches
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<int> holdout_indices;
};

// deterministic split: every k-th sample is held out
inline std::pair<std::vector<int>, std::vector<int>> split_holdout(
    std::size_t n, double holdout_fraction) {
  std::vector<int> train, holdout;
  const int stride =
      holdout_fraction > 0.0 ? std::max(2, int(std::lround(1.0 / holdout_fraction)))
                             : 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (stride > 0 && int(i) % stride == stride - 1)
      holdout.push_back(int(i));
    else
      train.push_back(int(i));
  }
  return {train, holdout};
}

// mean top-1 over disjoint `way`-sized batches of the given indices
inline double grouped_retrieval_top1(EncoderParams& params,
                                     const TrainingSet& set,
                                     const std::vector<int>& indices, int way,
                                     std::uint64_t shuffle_seed) {
  std::vector<int> order = indices;
  Rng rng(shuffle_seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  double acc = 0.0;
  int groups = 0;
  for (std::size_t start = 0; start + std::size_t(way) <= order.size();
       start += std::size_t(way)) {
    std::vector<Image> vis, tac;
    for (int k = 0; k < way; ++k) {
      const std::size_t idx = std::size_t(order[start + std::size_t(k)]);
      vis.push_back(set.visual_image(idx));
      tac.push_back(set.tactile_image(idx));
    }
    const nn::Tensor ie = params.visual_net.forward(to_tensor(vis));
    const nn::Tensor te = params.tactile_net.forward(to_tensor(tac));
    acc += nn::retrieval_top1(ie, te);
    ++groups;
  }
  return groups == 0 ? 0.0 : acc / groups;
}

inline TrainedEncoders train_encoders(const TrainingSet& set,
                                      const TrainConfig& cfg,
                                      const AugmentationConfig& aug,
                                      std::ostream* progress = nullptr) {
  if (set.size() < std::size_t(cfg.batch_size))
    throw std::invalid_argument("train_encoders: batch size exceeds dataset");
  if (cfg.batch_size < 2)
    throw std::invalid_argument("train_encoders: InfoNCE needs a batch >= 2");

  nn::ConvNetConfig vis_cfg;
  vis_cfg.in_channels = 1;
  vis_cfg.stage_channels = cfg.stage_channels;
  vis_cfg.head_dim = cfg.embedding_dim;
  vis_cfg.image_size = set.image_size;
  nn::ConvNetConfig tac_cfg = vis_cfg;
  tac_cfg.in_channels = 3;

  TrainedEncoders out;
  out.params.visual_net = nn::ConvNet(vis_cfg, derive_seed(cfg.seed, 0x11));
  out.params.tactile_net = nn::ConvNet(tac_cfg, derive_seed(cfg.seed, 0x22));
  out.params.embedding_dim = cfg.embedding_dim;
  out.params.image_size = set.image_size;

  auto [train_idx, holdout_idx] = split_holdout(set.size(), cfg.holdout_fraction);
  out.holdout_indices = holdout_idx;

  nn::Adam opt_vis(cfg.learning_rate), opt_tac(cfg.learning_rate);
  bool first_batch = true;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // hold the sharpened logits for half of training, then anneal down to
    // the plain dot-product loss for the final epochs
    const double phase =
        cfg.epochs > 1 ? double(epoch) / double(cfg.epochs - 1) : 1.0;
    const double ramp = std::clamp((phase - 0.5) / 0.5, 0.0, 1.0);
    const double inv_temp =
        cfg.inv_temperature_start +
        (cfg.inv_temperature - cfg.inv_temperature_start) * ramp;
    std::vector<int> order = train_idx;
    Rng shuffle(derive_seed(cfg.seed, 0x8f, std::uint64_t(epoch)));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.uniform_index(i)]);

    double epoch_loss = 0.0, epoch_top1 = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start + std::size_t(cfg.batch_size) <= order.size();
         start += std::size_t(cfg.batch_size)) {
      std::vector<Image> vis, tac;
      for (int k = 0; k < cfg.batch_size; ++k) {
        const int idx = order[start + std::size_t(k)];
        Rng aug_rng(derive_seed(cfg.seed, 0xa6, std::uint64_t(epoch),
                                std::uint64_t(set.sample_ids[std::size_t(idx)])));
        auto pair = augment_pair(set.visual_image(std::size_t(idx)),
                                 set.tactile_image(std::size_t(idx)), aug, aug_rng,
                                 set.tactile_background);
        vis.push_back(std::move(pair.visual));
        tac.push_back(std::move(pair.tactile));
      }
      const nn::Tensor ie = out.params.visual_net.forward(to_tensor(vis));
      const nn::Tensor te = out.params.tactile_net.forward(to_tensor(tac));
      const double loss = nn::info_nce_loss(ie, te, cfg.symmetrized, inv_temp);
      if (first_batch) {
        // recorded at the plain dot-product loss, whatever the schedule
        out.initial_loss =
            nn::info_nce_loss(ie, te, cfg.symmetrized, cfg.inv_temperature);
        first_batch = false;
      }
      auto grads = nn::info_nce_grad(ie, te, cfg.symmetrized, inv_temp);
      out.params.visual_net.zero_grads();
      out.params.tactile_net.zero_grads();
      out.params.visual_net.backward(grads.d_image);
      out.params.tactile_net.backward(grads.d_tactile);
      opt_vis.step(out.params.visual_net.params(), out.params.visual_net.grads());
      opt_tac.step(out.params.tactile_net.params(), out.params.tactile_net.grads());

      epoch_loss += loss;
      epoch_top1 += nn::retrieval_top1(ie, te);
      ++batches;
    }
    if (batches == 0)
      throw std::runtime_error("train_encoders: no full batch available");
    EpochLog log{epoch, epoch_loss / batches, epoch_top1 / batches};
    out.log.push_back(log);
    out.final_loss = log.loss;
    if (progress)
      (*progress) << "epoch " << epoch << " loss " << log.loss << " top1 "
                  << log.top1 << "\n";
  }
  if (!holdout_idx.empty())
    out.holdout_top1 = grouped_retrieval_top1(out.params, set, holdout_idx, 32,
                                              derive_seed(cfg.seed, 0xe7a1));
  return out;
}

// ---- persistence ----

inline void save_encoders(const EncoderParams& params, const std::string& dir,
                          const json& meta = json::object()) {
  std::filesystem::create_directories(dir);
  nn::save_checkpoint(params.visual_net, dir + "/visual.ckpt", meta);
  nn::save_checkpoint(params.tactile_net, dir + "/tactile.ckpt", meta);
}

inline EncoderParams load_encoders(const std::string& dir) {
  EncoderParams p;
  auto vis = nn::load_checkpoint(dir + "/visual.ckpt");
  auto tac = nn::load_checkpoint(dir + "/tactile.ckpt");
  p.visual_net = std::move(vis.net);
  p.tactile_net = std::move(tac.net);
  p.embedding_dim = p.visual_net.config().head_dim;
  p.image_size = p.visual_net.config().image_size;
  return p;
}

inline void write_train_log(const std::vector<EpochLog>& log,
                            const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_train_log: cannot open " + path);
  for (const auto& e : log)
    f << json{{"epoch", e.epoch}, {"loss", e.loss}, {"top1", e.top1}}.dump()
      << "\n";
}

}  // namespace vistac::enc
