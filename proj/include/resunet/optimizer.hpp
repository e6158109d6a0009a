#pragma once

#include <cmath>
#include <vector>

#include "resunet/network.hpp"

namespace resunet {

/// Adam with optional L2 regularization. The decay term 2*l2*w is added to the
/// raw gradient of convolution kernel matrices only; biases and normalization
/// parameters are left undecayed.
template <class T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>> params, double lr, double l2 = 0.0,
       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), l2_(l2), b1_(beta1), b2_(beta2), eps_(eps) {
    for (auto& p : params_) {
      if (!p.grad) continue;
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    std::size_t slot = 0;
    for (auto& p : params_) {
      if (!p.grad) continue;
      Tensor<T>& m = m_[slot];
      Tensor<T>& v = v_[slot];
      ++slot;
      T* w = p.value->data();
      const T* gr = p.grad->data();
      const bool decay = p.conv_kernel && l2_ != 0.0;
      for (std::size_t i = 0; i < p.value->size(); ++i) {
        double g = static_cast<double>(gr[i]);
        if (decay) g += 2.0 * l2_ * static_cast<double>(w[i]);
        const double mi = b1_ * static_cast<double>(m[i]) + (1.0 - b1_) * g;
        const double vi = b2_ * static_cast<double>(v[i]) + (1.0 - b2_) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        w[i] -= static_cast<T>(lr_ * (mi / c1) / (std::sqrt(vi / c2) + eps_));
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_)
      if (p.grad) p.grad->fill(T{});
  }

  double learning_rate() const { return lr_; }

 private:
  std::vector<ParamRef<T>> params_;
  double lr_, l2_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace resunet
