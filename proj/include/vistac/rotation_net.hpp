#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vistac/encoders.hpp"
#include "vistac/nn/adam.hpp"
#include "vistac/nn/checkpoint.hpp"
#include "vistac/nn/layers.hpp"
#include "vistac/nn/losses.hpp"

namespace vistac::rot {

using json = nlohmann::json;

// floor((angle mod 2pi) / bucket_width), total and periodic
inline int bucketize(double angle, int n_buckets) {
  if (n_buckets < 2) throw std::invalid_argument("bucketize: need >= 2 buckets");
  const double wrapped = wrap_angle(angle);
  int idx = int(std::floor(wrapped / (kTau / n_buckets)));
  if (idx >= n_buckets) idx = n_buckets - 1;  // guard the 2pi float edge
  return idx;
}

inline double bucket_center(int idx, int n_buckets) {
  return (idx + 0.5) * (kTau / n_buckets);
}

struct RotationDistribution {
  std::vector<float> probs;

  int n_buckets() const { return int(probs.size()); }
  double bucket_width() const { return kTau / double(probs.size()); }
  int argmax() const {
    return int(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
};

enum class ConfidenceMode {
  ProbVariance,        // variance across the probability values (default)
  CircularResultant,   // |sum p_k e^{i theta_k}|, 1 - circular variance
};

// Higher means more peaked under either reading.
inline double confidence(const RotationDistribution& dist,
                         ConfidenceMode mode = ConfidenceMode::ProbVariance) {
  const int n = dist.n_buckets();
  if (n == 0) throw std::invalid_argument("confidence: empty distribution");
  if (mode == ConfidenceMode::ProbVariance) {
    const double mean = 1.0 / double(n);
    double acc = 0.0;
    for (const float p : dist.probs) acc += (double(p) - mean) * (double(p) - mean);
    return acc / double(n);
  }
  double cx = 0.0, cy = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = bucket_center(k, n);
    cx += double(dist.probs[std::size_t(k)]) * std::cos(a);
    cy += double(dist.probs[std::size_t(k)]) * std::sin(a);
  }
  return std::sqrt(cx * cx + cy * cy);
}

struct RotationNetParams {
  nn::ConvNet net;  // 4-channel input: concat(visual, tactile)
  int n_buckets = 18;
  int image_size = 64;
};

// channel-concatenated visuo-tactile pair
inline nn::Tensor concat_pair_tensor(const std::vector<Image>& visual,
                                     const std::vector<Image>& tactile) {
  if (visual.size() != tactile.size() || visual.empty())
    throw std::invalid_argument("concat_pair_tensor: batch mismatch");
  const int h = visual[0].height, w = visual[0].width;
  nn::Tensor t(int(visual.size()), 4, h, w);
  for (std::size_t n = 0; n < visual.size(); ++n) {
    const Image& v = visual[n];
    const Image& ta = tactile[n];
    if (v.channels != 1 || ta.channels != 3 || ta.height != h || ta.width != w ||
        v.height != h || v.width != w)
      throw std::invalid_argument("concat_pair_tensor: bad shapes");
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        t.at(int(n), 0, r, c) = v.at(r, c);
        for (int ch = 0; ch < 3; ++ch) t.at(int(n), 1 + ch, r, c) = ta.at(r, c, ch);
      }
  }
  return t;
}

inline RotationDistribution softmax_distribution(const nn::Tensor& logits, int row) {
  const int k = int(logits.per_sample());
  RotationDistribution dist;
  dist.probs.resize(std::size_t(k));
  const float* src = logits.data.data() + std::size_t(row) * k;
  double mx = src[0];
  for (int j = 1; j < k; ++j) mx = std::max(mx, double(src[j]));
  double denom = 0.0;
  for (int j = 0; j < k; ++j) denom += std::exp(double(src[j]) - mx);
  for (int j = 0; j < k; ++j)
    dist.probs[std::size_t(j)] = float(std::exp(double(src[j]) - mx) / denom);
  return dist;
}

inline RotationDistribution predict_rotation(RotationNetParams& params,
                                             const Image& visual,
                                             const Image& tactile) {
  const nn::Tensor logits = params.net.forward(concat_pair_tensor({visual}, {tactile}));
  return softmax_distribution(logits, 0);
}

struct RotationTrainConfig {
  int batch_size = 32;
  int epochs = 15;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.1;
  int n_buckets = 18;
  std::vector<int> stage_channels = {16, 32, 64, 128};
};

inline json to_json(const RotationTrainConfig& c) {
  return json{{"batch_size", c.batch_size},   {"epochs", c.epochs},
              {"learning_rate", c.learning_rate}, {"seed", c.seed},
              {"holdout_fraction", c.holdout_fraction},
              {"n_buckets", c.n_buckets},     {"stage_channels", c.stage_channels}};
}

inline RotationTrainConfig rotation_config_from_json(const json& j) {
  RotationTrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
  c.n_buckets = j.value("n_buckets", c.n_buckets);
  c.stage_channels = j.value("stage_channels", c.stage_channels);
  return c;
}

struct RotationEpochLog {
  int epoch = 0;
  double loss = 0.0;
  double holdout_exact = 0.0;
  double holdout_pm1 = 0.0;
};

struct TrainedRotationNet {
  RotationNetParams params;
  std::vector<RotationEpochLog> log;
  double initial_loss = 0.0;
  double holdout_exact = 0.0;
  double holdout_pm1 = 0.0;
};

namespace detail {

struct EvalBatch {
  nn::Tensor input;
  std::vector<int> labels;
};

// augmentation replay: the label is the rotation drawn inside augment_pair,
// the same stream family the encoder trainer uses (one dataset, two
// consumers); flips are disabled so the label stays a pure rotation
inline EvalBatch make_batch(const enc::TrainingSet& set,
                            const std::vector<int>& indices, std::size_t start,
                            std::size_t count, const enc::AugmentationConfig& aug,
                            std::uint64_t seed, int epoch, int n_buckets) {
  std::vector<Image> vis, tac;
  EvalBatch out;
  for (std::size_t k = 0; k < count; ++k) {
    const int idx = indices[start + k];
    Rng rng(derive_seed(seed, 0xa6, std::uint64_t(epoch),
                        std::uint64_t(set.sample_ids[std::size_t(idx)])));
    auto pair = enc::augment_pair(set.visual_image(std::size_t(idx)),
                                  set.tactile_image(std::size_t(idx)), aug, rng,
                                  set.tactile_background);
    out.labels.push_back(bucketize(pair.applied_rotation, n_buckets));
    vis.push_back(std::move(pair.visual));
    tac.push_back(std::move(pair.tactile));
  }
  out.input = concat_pair_tensor(vis, tac);
  return out;
}

}  // namespace detail

inline TrainedRotationNet train_rotation(const enc::TrainingSet& set,
                                         const RotationTrainConfig& cfg,
                                         const enc::AugmentationConfig& base_aug,
                                         std::ostream* progress = nullptr) {
  if (set.size() < std::size_t(cfg.batch_size))
    throw std::invalid_argument("train_rotation: batch size exceeds dataset");
  const enc::AugmentationConfig aug = enc::rotation_augmentation(base_aug);
  if (!aug.tactile_rotation)
    throw std::invalid_argument(
        "train_rotation: rotation labels require tactile_rotation augmentation");

  nn::ConvNetConfig net_cfg;
  net_cfg.in_channels = 4;
  net_cfg.stage_channels = cfg.stage_channels;
  net_cfg.head_dim = cfg.n_buckets;
  net_cfg.normalize_output = false;
  net_cfg.head_init_scale = 0.05;
  net_cfg.image_size = set.image_size;

  TrainedRotationNet out;
  out.params.net = nn::ConvNet(net_cfg, derive_seed(cfg.seed, 0x33));
  out.params.n_buckets = cfg.n_buckets;
  out.params.image_size = set.image_size;

  auto [train_idx, holdout_idx] = enc::split_holdout(set.size(), cfg.holdout_fraction);

  auto eval_holdout = [&](int epoch) -> std::pair<double, double> {
    if (holdout_idx.empty()) return {0.0, 0.0};
    int exact = 0, pm1 = 0, total = 0;
    const std::size_t chunk = 64;
    for (std::size_t start = 0; start < holdout_idx.size(); start += chunk) {
      const std::size_t count = std::min(chunk, holdout_idx.size() - start);
      // held-out replay uses a fixed epoch tag so it never overlaps training
      auto batch = detail::make_batch(set, holdout_idx, start, count, aug,
                                      cfg.seed, 1000003 + epoch, cfg.n_buckets);
      const nn::Tensor logits = out.params.net.forward(batch.input);
      for (std::size_t i = 0; i < count; ++i) {
        const auto dist = softmax_distribution(logits, int(i));
        const int pred = dist.argmax();
        const int label = batch.labels[i];
        const int diff = std::abs(pred - label);
        const int circ = std::min(diff, cfg.n_buckets - diff);
        exact += (circ == 0);
        pm1 += (circ <= 1);
        ++total;
      }
    }
    return {double(exact) / total, double(pm1) / total};
  };

  nn::Adam opt(cfg.learning_rate);
  bool first = true;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = train_idx;
    Rng shuffle(derive_seed(cfg.seed, 0x90, std::uint64_t(epoch)));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.uniform_index(i)]);

    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start + std::size_t(cfg.batch_size) <= order.size();
         start += std::size_t(cfg.batch_size)) {
      auto batch = detail::make_batch(set, order, start, std::size_t(cfg.batch_size),
                                      aug, cfg.seed, epoch, cfg.n_buckets);
      const nn::Tensor logits = out.params.net.forward(batch.input);
      auto ce = nn::softmax_cross_entropy(logits, batch.labels);
      if (first) {
        out.initial_loss = ce.loss;
        first = false;
      }
      out.params.net.zero_grads();
      out.params.net.backward(ce.d_logits);
      opt.step(out.params.net.params(), out.params.net.grads());
      epoch_loss += ce.loss;
      ++batches;
    }
    if (batches == 0) throw std::runtime_error("train_rotation: no full batch");
    auto [exact, pm1] = eval_holdout(epoch);
    out.log.push_back({epoch, epoch_loss / batches, exact, pm1});
    out.holdout_exact = exact;
    out.holdout_pm1 = pm1;
    if (progress)
      (*progress) << "epoch " << epoch << " loss " << epoch_loss / batches
                  << " exact " << exact << " pm1 " << pm1 << "\n";
  }
  return out;
}

inline void save_rotation_net(const RotationNetParams& params,
                              const std::string& path,
                              const json& meta = json::object()) {
  json m = meta;
  m["n_buckets"] = params.n_buckets;
  nn::save_checkpoint(params.net, path, m);
}

inline RotationNetParams load_rotation_net(const std::string& path) {
  auto loaded = nn::load_checkpoint(path);
  RotationNetParams p;
  p.n_buckets = loaded.meta.value("n_buckets", loaded.net.config().head_dim);
  p.image_size = loaded.net.config().image_size;
  p.net = std::move(loaded.net);
  return p;
}

inline void write_rotation_log(const std::vector<RotationEpochLog>& log,
                               const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_rotation_log: cannot open " + path);
  for (const auto& e : log)
    f << json{{"epoch", e.epoch},
              {"loss", e.loss},
              {"holdout_exact", e.holdout_exact},
              {"holdout_pm1", e.holdout_pm1}}
             .dump()
      << "\n";
}

}  // namespace vistac::rot
