// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "gsm/core/error.hpp"

namespace gsm {

// Adaptive-moment first-order update over a flat parameter array.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw ShapeMismatch("Adam::step: size mismatch");
    ++t_;
    double c1 = 1.0 - std::pow(beta1_, t_);
    double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      double g = grads[i];
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
      double mhat = m_[i] / c1;
      double vhat = v_[i] / c2;
      params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }

  // Keeps only the listed entries (in order); used when surfels are pruned.
  void keep_indices(const std::vector<int>& keep, int stride) {
    std::vector<double> m2, v2;
    m2.reserve(keep.size() * stride);
    v2.reserve(keep.size() * stride);
    for (int idx : keep)
      for (int k = 0; k < stride; ++k) {
        m2.push_back(m_[static_cast<std::size_t>(idx) * stride + k]);
        v2.push_back(v_[static_cast<std::size_t>(idx) * stride + k]);
      }
    m_ = std::move(m2);
    v_ = std::move(v2);
  }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace gsm
