#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "vistac/nn/tensor.hpp"

namespace vistac::nn {

using MatrixXdRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline MatrixXdRM to_double(const Tensor& t, int rows, int cols) {
  MatrixXdRM out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out(r, c) = double(t.data[std::size_t(r) * cols + c]);
  return out;
}

inline void check_unit_rows(const Tensor& t, const char* who) {
  const int d = int(t.per_sample());
  for (int n = 0; n < t.n(); ++n) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      const double v = t.data[std::size_t(n) * d + i];
      acc += v * v;
    }
    if (std::abs(std::sqrt(acc) - 1.0) > 1e-3)
      throw std::invalid_argument(std::string(who) +
                                  ": embeddings must be unit-norm");
  }
}

// row-softmax in double with the max-shift trick
inline MatrixXdRM row_softmax(const MatrixXdRM& s) {
  MatrixXdRM p = s;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double mx = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - mx).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

inline double diagonal_cross_entropy(const MatrixXdRM& s) {
  double loss = 0.0;
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    const double lse = std::log((s.row(r).array() - mx).exp().sum()) + mx;
    loss += lse - s(r, r);
  }
  return loss / double(s.rows());
}

}  // namespace detail

// Contrastive loss over the B x B cross-modal similarity matrix with
// diagonal targets: cross_entropy(Ie * Te^T, 0..B-1). Row-wise by default
// (images as queries); the symmetrized variant averages both directions.
// inv_temperature defaults to 1: raw dot-product logits.
inline double info_nce_loss(const Tensor& image_emb, const Tensor& tactile_emb,
                            bool symmetrized = false,
                            double inv_temperature = 1.0) {
  const int b = image_emb.n();
  const int d = int(image_emb.per_sample());
  if (b < 2) throw std::invalid_argument("info_nce_loss: need batch >= 2");
  if (tactile_emb.n() != b || int(tactile_emb.per_sample()) != d)
    throw std::invalid_argument("info_nce_loss: shape mismatch");
  detail::check_unit_rows(image_emb, "info_nce_loss");
  detail::check_unit_rows(tactile_emb, "info_nce_loss");
  const MatrixXdRM ie = detail::to_double(image_emb, b, d);
  const MatrixXdRM te = detail::to_double(tactile_emb, b, d);
  const MatrixXdRM s = inv_temperature * (ie * te.transpose());
  double loss = detail::diagonal_cross_entropy(s);
  if (symmetrized)
    loss = 0.5 * (loss + detail::diagonal_cross_entropy(s.transpose()));
  return loss;
}

struct InfoNceGrads {
  Tensor d_image;
  Tensor d_tactile;
};

inline InfoNceGrads info_nce_grad(const Tensor& image_emb,
                                  const Tensor& tactile_emb,
                                  bool symmetrized = false,
                                  double inv_temperature = 1.0) {
  const int b = image_emb.n();
  const int d = int(image_emb.per_sample());
  if (b < 2) throw std::invalid_argument("info_nce_grad: need batch >= 2");
  if (tactile_emb.n() != b || int(tactile_emb.per_sample()) != d)
    throw std::invalid_argument("info_nce_grad: shape mismatch");
  const MatrixXdRM ie = detail::to_double(image_emb, b, d);
  const MatrixXdRM te = detail::to_double(tactile_emb, b, d);
  const MatrixXdRM s = inv_temperature * (ie * te.transpose());

  // dL/dS for the row-wise loss: (row_softmax(S) - I) / B
  MatrixXdRM ds = detail::row_softmax(s);
  ds.diagonal().array() -= 1.0;
  ds /= double(b);
  if (symmetrized) {
    MatrixXdRM ds_col = detail::row_softmax(s.transpose()).transpose();
    ds_col.diagonal().array() -= 1.0;
    ds_col /= double(b);
    ds = 0.5 * (ds + ds_col);
  }
  ds *= inv_temperature;
  const MatrixXdRM d_ie = ds * te;
  const MatrixXdRM d_te = ds.transpose() * ie;

  InfoNceGrads out;
  out.d_image = Tensor(b, d, 1, 1);
  out.d_tactile = Tensor(b, d, 1, 1);
  for (int r = 0; r < b; ++r)
    for (int c = 0; c < d; ++c) {
      out.d_image.data[std::size_t(r) * d + c] = float(d_ie(r, c));
      out.d_tactile.data[std::size_t(r) * d + c] = float(d_te(r, c));
    }
  return out;
}

struct SoftmaxCeResult {
  double loss = 0.0;
  Tensor d_logits;
};

inline SoftmaxCeResult softmax_cross_entropy(const Tensor& logits,
                                             const std::vector<int>& labels) {
  const int n = logits.n();
  const int k = int(logits.per_sample());
  if (int(labels.size()) != n)
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  SoftmaxCeResult res;
  res.d_logits = Tensor(n, k, 1, 1);
  for (int i = 0; i < n; ++i) {
    const float* row = logits.data.data() + std::size_t(i) * k;
    const int label = labels[std::size_t(i)];
    if (label < 0 || label >= k)
      throw std::invalid_argument("softmax_cross_entropy: label out of range");
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, double(row[j]));
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(double(row[j]) - mx);
    res.loss += std::log(denom) - (double(row[label]) - mx);
    for (int j = 0; j < k; ++j) {
      const double p = std::exp(double(row[j]) - mx) / denom;
      res.d_logits.data[std::size_t(i) * k + j] =
          float((p - (j == label ? 1.0 : 0.0)) / double(n));
    }
  }
  res.loss /= double(n);
  return res;
}

// fraction of rows whose own pair is the argmax of the similarity row
inline double retrieval_top1(const Tensor& image_emb, const Tensor& tactile_emb) {
  const int b = image_emb.n();
  const int d = int(image_emb.per_sample());
  int correct = 0;
  for (int i = 0; i < b; ++i) {
    double best = -2.0;
    int best_j = -1;
    for (int j = 0; j < b; ++j) {
      double sim = 0.0;
      for (int c = 0; c < d; ++c)
        sim += double(image_emb.data[std::size_t(i) * d + c]) *
               tactile_emb.data[std::size_t(j) * d + c];
      if (sim > best) {
        best = sim;
        best_j = j;
      }
    }
    if (best_j == i) ++correct;
  }
  return double(correct) / double(b);
}

}  // namespace vistac::nn
