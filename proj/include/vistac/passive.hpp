#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vistac/encoders.hpp"

namespace vistac::passive {

using json = nlohmann::json;
using enc::EmbeddingVector;

inline std::uint64_t encoder_fingerprint(const enc::EncoderParams& params) {
  const auto v = params.visual_net.serialize();
  const auto t = params.tactile_net.serialize();
  std::uint64_t h = fnv1a(v.data(), v.size() * sizeof(float));
  return fnv1a(t.data(), t.size() * sizeof(float), h);
}

// ---- tactile localization over a workspace image ----

struct LocalizationHeatmap {
  int rows = 0;
  int cols = 0;
  int patch_size_px = 0;
  int stride_px = 0;
  std::vector<float> scores;  // cosine similarities, row-major
  int argmax_row = 0;
  int argmax_col = 0;

  float at(int r, int c) const { return scores[std::size_t(r) * cols + c]; }
  float max_score() const { return scores[std::size_t(argmax_row) * cols + argmax_col]; }
};

// Embeds every patch of a uniform grid over the workspace image and scores
// it against the tactile embedding. Scores are raw cosine similarities.
inline LocalizationHeatmap localize(const Image& workspace_visual,
                                    const Image& tactile,
                                    enc::EncoderParams& params,
                                    int patch_size_px, int stride_px) {
  if (workspace_visual.channels != 1)
    throw std::invalid_argument("localize: workspace image must be grayscale");
  if (stride_px <= 0) throw std::invalid_argument("localize: stride must be > 0");
  if (workspace_visual.height < patch_size_px ||
      workspace_visual.width < patch_size_px)
    throw std::invalid_argument("localize: workspace smaller than one patch");

  const EmbeddingVector tactile_emb = enc::encode_tactile(params, tactile);
  LocalizationHeatmap map;
  map.patch_size_px = patch_size_px;
  map.stride_px = stride_px;
  map.rows = (workspace_visual.height - patch_size_px) / stride_px + 1;
  map.cols = (workspace_visual.width - patch_size_px) / stride_px + 1;
  map.scores.assign(std::size_t(map.rows) * map.cols, 0.0f);

  const int enc_size = params.image_size;
  std::vector<Image> batch;
  std::vector<std::size_t> batch_cells;
  auto flush = [&]() {
    if (batch.empty()) return;
    const nn::Tensor emb = params.visual_net.forward(enc::to_tensor(batch));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const EmbeddingVector e = enc::row_embedding(emb, int(i));
      map.scores[batch_cells[i]] = float(tactile_emb.dot(e));
    }
    batch.clear();
    batch_cells.clear();
  };
  for (int gr = 0; gr < map.rows; ++gr)
    for (int gc = 0; gc < map.cols; ++gc) {
      Image patch(patch_size_px, patch_size_px, 1);
      for (int r = 0; r < patch_size_px; ++r)
        for (int c = 0; c < patch_size_px; ++c)
          patch.at(r, c) =
              workspace_visual.at(gr * stride_px + r, gc * stride_px + c);
      if (patch_size_px != enc_size)
        patch = resize_bilinear(patch, enc_size, enc_size);
      batch.push_back(std::move(patch));
      batch_cells.push_back(std::size_t(gr) * map.cols + gc);
      if (batch.size() == 64) flush();
    }
  flush();

  float best = -2.0f;
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c)
      if (map.at(r, c) > best) {
        best = map.at(r, c);
        map.argmax_row = r;
        map.argmax_col = c;
      }
  return map;
}

struct CompositeResult {
  Image image;
  bool degenerate = false;  // constant heatmap: flat 0.5 weighting applied
};

// Display composite: min-max scale, gamma 1.6, multiply into the value
// channel of the workspace image.
inline CompositeResult composite_heatmap(const LocalizationHeatmap& map,
                                         const Image& workspace_visual,
                                         double gamma = 1.6) {
  CompositeResult out;
  out.image = workspace_visual;
  float lo = map.scores.empty() ? 0.0f : map.scores[0];
  float hi = lo;
  for (const float s : map.scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const bool degenerate = !(hi > lo);
  out.degenerate = degenerate;
  // heatmap cell centers in image pixels
  const double half = map.patch_size_px / 2.0;
  for (int r = 0; r < out.image.height; ++r)
    for (int c = 0; c < out.image.width; ++c) {
      double weight = 0.5;
      if (!degenerate) {
        const double gr =
            std::clamp((r - half) / map.stride_px, 0.0, double(map.rows - 1));
        const double gc =
            std::clamp((c - half) / map.stride_px, 0.0, double(map.cols - 1));
        const int r0 = int(gr), c0 = int(gc);
        const int r1 = std::min(r0 + 1, map.rows - 1);
        const int c1 = std::min(c0 + 1, map.cols - 1);
        const double fr = gr - r0, fc = gc - c0;
        const double raw =
            (map.at(r0, c0) * (1 - fc) + map.at(r0, c1) * fc) * (1 - fr) +
            (map.at(r1, c0) * (1 - fc) + map.at(r1, c1) * fc) * fr;
        weight = std::pow(std::clamp((raw - lo) / double(hi - lo), 0.0, 1.0), gamma);
      }
      for (int ch = 0; ch < out.image.channels; ++ch)
        out.image.at(r, c, ch) = float(out.image.at(r, c, ch) * weight);
    }
  return out;
}

// ---- canonical-image k-NN classifier ----

struct ClassifierReferenceSet {
  std::vector<std::string> class_names;
  std::vector<int> labels;  // per reference, index into class_names
  std::vector<EmbeddingVector> references;
  int k = 50;
  int n_aug = 100;
  std::uint64_t encoder_hash = 0;
};

// Embeds n_aug augmented copies of every canonical visual image, using the
// training-time augmentation pipeline.
inline ClassifierReferenceSet build_classifier(
    const std::vector<std::pair<std::string, std::vector<Image>>>& canonicals,
    enc::EncoderParams& params, int n_aug = 100, int k = 50,
    const enc::AugmentationConfig& aug_base = {}, std::uint64_t seed = 0) {
  if (canonicals.empty())
    throw std::invalid_argument("build_classifier: need at least one class");
  enc::AugmentationConfig aug = aug_base;
  aug.tactile_rotation = false;  // visual-side references: no rotation channel
  ClassifierReferenceSet set;
  set.k = k;
  set.n_aug = n_aug;
  set.encoder_hash = encoder_fingerprint(params);
  for (const auto& [name, images] : canonicals) {
    if (images.empty())
      throw std::invalid_argument("build_classifier: class '" + name +
                                  "' has no canonical images");
    set.class_names.push_back(name);
  }
  const Image dummy_tactile(2, 2, 3, 0.5f);
  for (std::size_t cls = 0; cls < canonicals.size(); ++cls) {
    for (std::size_t img = 0; img < canonicals[cls].second.size(); ++img) {
      for (int a = 0; a < n_aug; ++a) {
        Rng rng(derive_seed(seed, cls, img, std::uint64_t(a)));
        const auto augmented = enc::augment_pair(canonicals[cls].second[img],
                                                 dummy_tactile, aug, rng);
        set.references.push_back(enc::encode_visual(params, augmented.visual));
        set.labels.push_back(int(cls));
      }
    }
  }
  if (k > int(set.references.size()))
    throw std::invalid_argument("build_classifier: k exceeds the reference count");
  return set;
}

struct Classification {
  int label = 0;
  std::string class_name;
  std::vector<double> class_scores;  // similarity-weighted votes per class
};

// Weighted k-NN over cosine similarity; weights are similarities clamped
// at zero, ties break by class-name order.
inline Classification classify(const Image& tactile,
                               const ClassifierReferenceSet& refs,
                               enc::EncoderParams& params) {
  if (refs.references.empty())
    throw std::invalid_argument("classify: empty reference set");
  if (refs.encoder_hash != 0 && refs.encoder_hash != encoder_fingerprint(params))
    throw std::invalid_argument(
        "classify: reference set was built with different encoder weights");
  const EmbeddingVector z = enc::encode_tactile(params, tactile);
  std::vector<std::pair<double, int>> sims;  // (similarity, reference index)
  sims.reserve(refs.references.size());
  for (std::size_t i = 0; i < refs.references.size(); ++i)
    sims.emplace_back(z.dot(refs.references[i]), int(i));
  const std::size_t k = std::min<std::size_t>(std::size_t(refs.k), sims.size());
  std::partial_sort(sims.begin(), sims.begin() + std::ptrdiff_t(k), sims.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  Classification out;
  out.class_scores.assign(refs.class_names.size(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double weight = std::max(0.0, sims[i].first);
    out.class_scores[std::size_t(refs.labels[std::size_t(sims[i].second)])] += weight;
  }
  int best = 0;
  for (std::size_t c = 1; c < out.class_scores.size(); ++c) {
    const bool better = out.class_scores[c] > out.class_scores[std::size_t(best)];
    const bool tie = out.class_scores[c] == out.class_scores[std::size_t(best)];
    if (better || (tie && refs.class_names[c] < refs.class_names[std::size_t(best)]))
      best = int(c);
  }
  out.label = best;
  out.class_name = refs.class_names[std::size_t(best)];
  return out;
}

// ---- persistence ----

inline void save_reference_set(const ClassifierReferenceSet& set,
                               const std::string& path) {
  json refs = json::array();
  for (const auto& e : set.references) refs.push_back(e.values);
  json j{{"class_names", set.class_names}, {"labels", set.labels},
         {"k", set.k},                     {"n_aug", set.n_aug},
         {"encoder_hash", set.encoder_hash}, {"references", refs}};
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_reference_set: cannot open " + path);
  f << j.dump() << "\n";
}

inline ClassifierReferenceSet load_reference_set(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_reference_set: cannot open " + path);
  json j;
  f >> j;
  ClassifierReferenceSet set;
  set.class_names = j.at("class_names").get<std::vector<std::string>>();
  set.labels = j.at("labels").get<std::vector<int>>();
  set.k = j.at("k");
  set.n_aug = j.at("n_aug");
  set.encoder_hash = j.at("encoder_hash");
  for (const auto& r : j.at("references"))
    set.references.push_back(EmbeddingVector{r.get<std::vector<float>>()});
  return set;
}

// heatmap arrays for offline inspection
inline void save_heatmap(const LocalizationHeatmap& map, const std::string& dir,
                         const Image& workspace_visual) {
  std::filesystem::create_directories(dir);
  write_npy_f32(dir + "/scores.npy", map.scores, std::size_t(map.rows),
                std::size_t(map.cols));
  const auto composite = composite_heatmap(map, workspace_visual);
  write_pnm(composite.image, dir + "/composite.pgm");
  json meta{{"rows", map.rows},
            {"cols", map.cols},
            {"patch_size_px", map.patch_size_px},
            {"stride_px", map.stride_px},
            {"argmax_row", map.argmax_row},
            {"argmax_col", map.argmax_col},
            {"degenerate", composite.degenerate}};
  std::ofstream f(dir + "/heatmap.json");
  f << meta.dump(2) << "\n";
}

}  // namespace vistac::passive
