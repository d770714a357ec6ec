#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "vistac/nn/tensor.hpp"
#include "vistac/rng.hpp"

namespace vistac::nn {

struct Layer {
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) {
    (void)params;
    (void)grads;
  }
};

// 3x3 (or kxk) convolution, zero padding, im2col + GEMM. The im2col
// matrix is rebuilt in backward from the cached input, trading compute
// for memory.
class Conv2d final : public Layer {
public:
  Conv2d(int cin, int cout, int kernel, int stride, int pad, Rng& rng)
      : cin_(cin), cout_(cout), k_(kernel), stride_(stride), pad_(pad),
        weight_(1, 1, cin * kernel * kernel, cout), bias_(1, 1, 1, cout),
        gw_(1, 1, cin * kernel * kernel, cout), gb_(1, 1, 1, cout) {
    const double std_dev = std::sqrt(2.0 / (double(cin) * kernel * kernel));
    for (auto& v : weight_.data) v = float(rng.normal() * std_dev);
  }

  Tensor forward(const Tensor& x) override {
    x_ = x;
    const int oh = out_dim(x.h()), ow = out_dim(x.w());
    const int rows = x.n() * oh * ow, cols = cin_ * k_ * k_;
    im2col(x, col_);
    Tensor y(x.n(), cout_, oh, ow);
    MatrixRM out = ConstMapRM(col_.data(), rows, cols) *
                   weight_.as_matrix(cols, cout_);
    out.rowwise() += ConstMapRM(bias_.data.data(), 1, cout_).row(0);
    // scatter [row, cout] -> NCHW
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < cout_; ++c)
        for (int p = 0; p < oh * ow; ++p)
          y.data[((std::size_t(n) * cout_ + c) * oh * ow) + p] =
              out(n * oh * ow + p, c);
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    const int oh = out_dim(x_.h()), ow = out_dim(x_.w());
    const int rows = x_.n() * oh * ow, cols = cin_ * k_ * k_;
    // gather NCHW -> [row, cout]
    MatrixRM dy_mat(rows, cout_);
    for (int n = 0; n < x_.n(); ++n)
      for (int c = 0; c < cout_; ++c)
        for (int p = 0; p < oh * ow; ++p)
          dy_mat(n * oh * ow + p, c) =
              dy.data[((std::size_t(n) * cout_ + c) * oh * ow) + p];
    im2col(x_, col_);
    ConstMapRM col(col_.data(), rows, cols);
    gw_.as_matrix(cols, cout_).noalias() += col.transpose() * dy_mat;
    MapRM(gb_.data.data(), 1, cout_).noalias() += dy_mat.colwise().sum();
    MatrixRM dcol = dy_mat * weight_.as_matrix(cols, cout_).transpose();
    Tensor dx(x_.n(), cin_, x_.h(), x_.w());
    col2im(dcol, dx);
    return dx;
  }

  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) override {
    params.push_back(&weight_);
    params.push_back(&bias_);
    grads.push_back(&gw_);
    grads.push_back(&gb_);
  }

private:
  int out_dim(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  void im2col(const Tensor& x, std::vector<float>& buf) const {
    const int oh = out_dim(x.h()), ow = out_dim(x.w());
    const std::size_t rows = std::size_t(x.n()) * oh * ow;
    const std::size_t cols = std::size_t(cin_) * k_ * k_;
    buf.assign(rows * cols, 0.0f);
    for (int n = 0; n < x.n(); ++n)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          float* row = buf.data() + ((std::size_t(n) * oh + y) * ow + xx) * cols;
          for (int c = 0; c < cin_; ++c) {
            const float* src =
                x.data.data() + (std::size_t(n) * cin_ + c) * x.h() * x.w();
            for (int ky = 0; ky < k_; ++ky) {
              const int iy = y * stride_ + ky - pad_;
              if (iy < 0 || iy >= x.h()) continue;
              for (int kx = 0; kx < k_; ++kx) {
                const int ix = xx * stride_ + kx - pad_;
                if (ix < 0 || ix >= x.w()) continue;
                row[(std::size_t(c) * k_ + ky) * k_ + kx] = src[iy * x.w() + ix];
              }
            }
          }
        }
  }

  void col2im(const MatrixRM& dcol, Tensor& dx) const {
    const int oh = out_dim(dx.h()), ow = out_dim(dx.w());
    const std::size_t cols = std::size_t(cin_) * k_ * k_;
    for (int n = 0; n < dx.n(); ++n)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          const auto row = dcol.row(n * oh * ow + y * ow + xx);
          for (int c = 0; c < cin_; ++c) {
            float* dst =
                dx.data.data() + (std::size_t(n) * cin_ + c) * dx.h() * dx.w();
            for (int ky = 0; ky < k_; ++ky) {
              const int iy = y * stride_ + ky - pad_;
              if (iy < 0 || iy >= dx.h()) continue;
              for (int kx = 0; kx < k_; ++kx) {
                const int ix = xx * stride_ + kx - pad_;
                if (ix < 0 || ix >= dx.w()) continue;
                dst[iy * dx.w() + ix] +=
                    row(Eigen::Index((std::size_t(c) * k_ + ky) * k_ + kx));
              }
            }
          }
        }
  }

  int cin_, cout_, k_, stride_, pad_;
  Tensor weight_, bias_, gw_, gb_;
  Tensor x_;
  mutable std::vector<float> col_;
};

class ReLU final : public Layer {
public:
  Tensor forward(const Tensor& x) override {
    mask_.assign(x.size(), 0);
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y.data[i] > 0.0f) {
        mask_[i] = 1;
      } else {
        y.data[i] = 0.0f;
      }
    }
    return y;
  }
  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (!mask_[i]) dx.data[i] = 0.0f;
    return dx;
  }

private:
  std::vector<std::uint8_t> mask_;
};

// Per-sample, per-channel normalization over the spatial map. Keeps
// texture contrast alive through depth without any batch coupling, so
// single-item and batched inference agree exactly.
class InstanceNorm final : public Layer {
public:
  explicit InstanceNorm(double eps = 1e-4) : eps_(eps) {}

  Tensor forward(const Tensor& x) override {
    y_ = x;
    const int m = x.h() * x.w();
    inv_std_.assign(std::size_t(x.n()) * x.c(), 0.0f);
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c) {
        float* px = y_.data.data() + (std::size_t(n) * x.c() + c) * m;
        double mean = 0.0;
        for (int i = 0; i < m; ++i) mean += px[i];
        mean /= m;
        double var = 0.0;
        for (int i = 0; i < m; ++i) var += (px[i] - mean) * (px[i] - mean);
        var /= m;
        const float inv = float(1.0 / std::sqrt(var + eps_));
        inv_std_[std::size_t(n) * x.c() + c] = inv;
        for (int i = 0; i < m; ++i) px[i] = float((px[i] - mean) * inv);
      }
    return y_;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    const int m = dy.h() * dy.w();
    for (int n = 0; n < dy.n(); ++n)
      for (int c = 0; c < dy.c(); ++c) {
        const std::size_t base = (std::size_t(n) * dy.c() + c) * m;
        const float* gy = dy.data.data() + base;
        const float* y = y_.data.data() + base;
        double mean_gy = 0.0, mean_gy_y = 0.0;
        for (int i = 0; i < m; ++i) {
          mean_gy += gy[i];
          mean_gy_y += double(gy[i]) * y[i];
        }
        mean_gy /= m;
        mean_gy_y /= m;
        const float inv = inv_std_[std::size_t(n) * dy.c() + c];
        float* gx = dx.data.data() + base;
        for (int i = 0; i < m; ++i)
          gx[i] = float((gy[i] - mean_gy - y[i] * mean_gy_y) * inv);
      }
    return dx;
  }

private:
  double eps_;
  Tensor y_;
  std::vector<float> inv_std_;
};

// fully connected over the flattened per-sample features
class Dense final : public Layer {
public:
  Dense(int in_features, int out_features, Rng& rng, double init_scale = 1.0)
      : fin_(in_features), fout_(out_features), weight_(1, 1, in_features, out_features),
        bias_(1, 1, 1, out_features), gw_(1, 1, in_features, out_features),
        gb_(1, 1, 1, out_features) {
    const double std_dev = init_scale * std::sqrt(2.0 / double(in_features));
    for (auto& v : weight_.data) v = float(rng.normal() * std_dev);
  }

  Tensor forward(const Tensor& x) override {
    if (int(x.per_sample()) != fin_)
      throw std::invalid_argument("Dense: expected " + std::to_string(fin_) +
                                  " features, got " + std::to_string(x.per_sample()));
    x_ = x;
    Tensor y(x.n(), fout_, 1, 1);
    y.as_matrix(x.n(), fout_).noalias() =
        x.as_matrix(x.n(), fin_) * weight_.as_matrix(fin_, fout_);
    y.as_matrix(x.n(), fout_).rowwise() +=
        ConstMapRM(bias_.data.data(), 1, fout_).row(0);
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    gw_.as_matrix(fin_, fout_).noalias() +=
        x_.as_matrix(x_.n(), fin_).transpose() * dy.as_matrix(dy.n(), fout_);
    MapRM(gb_.data.data(), 1, fout_).noalias() +=
        dy.as_matrix(dy.n(), fout_).colwise().sum();
    Tensor dx = x_;
    dx.as_matrix(x_.n(), fin_).noalias() =
        dy.as_matrix(dy.n(), fout_) * weight_.as_matrix(fin_, fout_).transpose();
    return dx;
  }

  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) override {
    params.push_back(&weight_);
    params.push_back(&bias_);
    grads.push_back(&gw_);
    grads.push_back(&gb_);
  }

private:
  int fin_, fout_;
  Tensor weight_, bias_, gw_, gb_;
  Tensor x_;
};

// row-wise x / ||x||, the unit-norm embedding head
class L2Normalize final : public Layer {
public:
  Tensor forward(const Tensor& x) override {
    y_ = x;
    norms_.assign(std::size_t(x.n()), 0.0f);
    const int d = int(x.per_sample());
    for (int n = 0; n < x.n(); ++n) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) {
        const float v = x.data[std::size_t(n) * d + i];
        acc += double(v) * v;
      }
      const float norm = float(std::sqrt(acc) + 1e-12);
      norms_[std::size_t(n)] = norm;
      for (int i = 0; i < d; ++i) y_.data[std::size_t(n) * d + i] /= norm;
    }
    return y_;
  }
  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    const int d = int(dy.per_sample());
    for (int n = 0; n < dy.n(); ++n) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i)
        dot += double(dy.data[std::size_t(n) * d + i]) * y_.data[std::size_t(n) * d + i];
      const float norm = norms_[std::size_t(n)];
      for (int i = 0; i < d; ++i) {
        const std::size_t idx = std::size_t(n) * d + i;
        dx.data[idx] = (dy.data[idx] - float(dot) * y_.data[idx]) / norm;
      }
    }
    return dx;
  }

private:
  Tensor y_;
  std::vector<float> norms_;
};

// ---- the small convolutional backbone shared by every network ----

struct ConvNetConfig {
  int in_channels = 1;
  std::vector<int> stage_channels = {16, 32, 64, 128};
  int head_dim = 8;
  bool normalize_output = true;  // embedding heads project to the unit sphere
  double head_init_scale = 0.1;
  int image_size = 64;
};

class ConvNet {
public:
  ConvNet() = default;
  ConvNet(const ConvNetConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    Rng rng(init_seed);
    int cin = cfg.in_channels;
    int spatial = cfg.image_size;
    for (const int cout : cfg.stage_channels) {
      layers_.push_back(std::make_unique<Conv2d>(cin, cout, 3, 2, 1, rng));
      layers_.push_back(std::make_unique<InstanceNorm>());
      layers_.push_back(std::make_unique<ReLU>());
      layers_.push_back(std::make_unique<Conv2d>(cout, cout, 3, 1, 1, rng));
      layers_.push_back(std::make_unique<InstanceNorm>());
      layers_.push_back(std::make_unique<ReLU>());
      cin = cout;
      spatial = (spatial + 1) / 2;
    }
    // the head sees the full (flattened) final map: spatial structure
    // matters both for pair discrimination and rotation estimation
    layers_.push_back(std::make_unique<Dense>(cin * spatial * spatial,
                                              cfg.head_dim, rng,
                                              cfg.head_init_scale));
    if (cfg.normalize_output) layers_.push_back(std::make_unique<L2Normalize>());
    for (auto& l : layers_) l->collect(params_, grads_);
  }

  const ConvNetConfig& config() const { return cfg_; }

  Tensor forward(const Tensor& x) {
    if (x.c() != cfg_.in_channels)
      throw std::invalid_argument("ConvNet: expected " +
                                  std::to_string(cfg_.in_channels) +
                                  " input channels, got " + std::to_string(x.c()));
    if (x.h() != cfg_.image_size || x.w() != cfg_.image_size)
      throw std::invalid_argument("ConvNet: expected " +
                                  std::to_string(cfg_.image_size) + "x" +
                                  std::to_string(cfg_.image_size) + " input");
    Tensor cur = x;
    for (auto& l : layers_) cur = l->forward(cur);
    return cur;
  }

  Tensor backward(const Tensor& dy) {
    Tensor cur = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      cur = (*it)->backward(cur);
    return cur;
  }

  std::vector<Tensor*>& params() { return params_; }
  std::vector<Tensor*>& grads() { return grads_; }

  void zero_grads() {
    for (auto* g : grads_) g->fill(0.0f);
  }

  std::size_t param_count() const {
    std::size_t total = 0;
    for (const auto* p : params_) total += p->size();
    return total;
  }

  // forward passes cache activations, so concurrent users clone first
  ConvNet clone() const {
    ConvNet copy(cfg_, 0);
    copy.deserialize(serialize());
    return copy;
  }

  std::vector<float> serialize() const {
    std::vector<float> out;
    for (const auto* p : params_) out.insert(out.end(), p->data.begin(), p->data.end());
    return out;
  }

  void deserialize(const std::vector<float>& flat) {
    std::size_t offset = 0;
    for (auto* p : params_) {
      if (offset + p->size() > flat.size())
        throw std::invalid_argument("ConvNet::deserialize: parameter blob too short");
      std::copy(flat.begin() + std::ptrdiff_t(offset),
                flat.begin() + std::ptrdiff_t(offset + p->size()), p->data.begin());
      offset += p->size();
    }
    if (offset != flat.size())
      throw std::invalid_argument("ConvNet::deserialize: parameter blob too long");
  }

private:
  ConvNetConfig cfg_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Tensor*> params_;
  std::vector<Tensor*> grads_;
};

}  // namespace vistac::nn
