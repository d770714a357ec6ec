#pragma once

#include <cmath>
#include <vector>

#include "vistac/nn/tensor.hpp"

namespace vistac::nn {

// Adam with the default parameters from the original paper.
class Adam {
public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) {
    if (m_.empty()) {
      for (const auto* p : params) {
        m_.emplace_back(p->size(), 0.0f);
        v_.emplace_back(p->size(), 0.0f);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, double(t_));
    const double c2 = 1.0 - std::pow(beta2_, double(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i]->data;
      auto& g = grads[i]->data;
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        m[j] = float(beta1_ * m[j] + (1.0 - beta1_) * g[j]);
        v[j] = float(beta2_ * v[j] + (1.0 - beta2_) * double(g[j]) * g[j]);
        const double mhat = m[j] / c1;
        const double vhat = v[j] / c2;
        p[j] -= float(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  double learning_rate() const { return lr_; }

private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace vistac::nn
