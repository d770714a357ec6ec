#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace vistac::nn {

using MatrixRM =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

// Dense NCHW tensor. Vectors (embeddings, logits) use H = W = 1.
struct Tensor {
  std::array<int, 4> shape{0, 1, 1, 1};
  std::vector<float> data;

  Tensor() = default;
  Tensor(int n, int c, int h, int w)
      : shape{n, c, h, w},
        data(std::size_t(n) * std::size_t(c) * std::size_t(h) * std::size_t(w),
             0.0f) {}

  int n() const { return shape[0]; }
  int c() const { return shape[1]; }
  int h() const { return shape[2]; }
  int w() const { return shape[3]; }
  std::size_t size() const { return data.size(); }
  std::size_t per_sample() const {
    return std::size_t(shape[1]) * shape[2] * shape[3];
  }

  float& at(int in, int ic, int ih, int iw) {
    return data[((std::size_t(in) * shape[1] + ic) * shape[2] + ih) * shape[3] + iw];
  }
  float at(int in, int ic, int ih, int iw) const {
    return data[((std::size_t(in) * shape[1] + ic) * shape[2] + ih) * shape[3] + iw];
  }

  void fill(float v) { std::fill(data.begin(), data.end(), v); }

  // view as a (rows x cols) row-major matrix; sizes must multiply out
  MapRM as_matrix(int rows, int cols) {
    if (std::size_t(rows) * std::size_t(cols) != data.size())
      throw std::invalid_argument("Tensor::as_matrix: size mismatch");
    return MapRM(data.data(), rows, cols);
  }
  ConstMapRM as_matrix(int rows, int cols) const {
    if (std::size_t(rows) * std::size_t(cols) != data.size())
      throw std::invalid_argument("Tensor::as_matrix: size mismatch");
    return ConstMapRM(data.data(), rows, cols);
  }
};

}  // namespace vistac::nn
