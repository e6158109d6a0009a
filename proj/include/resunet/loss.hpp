#pragma once

#include <cstdint>
#include <vector>

#include "resunet/errors.hpp"
#include "resunet/tensor.hpp"

namespace resunet {

/// Expands index-space labels (B,H,W) to one-hot (B,C,H,W).
template <class T>
Tensor<T> one_hot(const Tensor<std::uint8_t>& labels, int n_classes) {
  const int B = labels.dim(0), H = labels.dim(1), W = labels.dim(2);
  Tensor<T> out({B, n_classes, H, W});
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int bi = 0; bi < B; ++bi) {
    const std::uint8_t* lp = labels.data() + static_cast<std::size_t>(bi) * plane;
    T* ob = out.data() + static_cast<std::size_t>(bi) * n_classes * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      require(lp[i] < n_classes, ErrorKind::InvalidIndex,
              "label index out of range for one-hot encoding");
      ob[static_cast<std::size_t>(lp[i]) * plane + i] = T(1);
    }
  }
  return out;
}

template <class T>
struct DiceLossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d probs
};

/// Multi-class Dice loss with inverse-volume class weights:
///
///   w_c  = 1 / (sum_i g_ci + eps_w)
///   loss = 1 - (2 sum_c w_c sum_i g_ci p_ci + eps)
///            / (sum_c w_c sum_i (g_ci^2 + p_ci^2) + eps)
///
/// The sums run over every pixel of the batch and every class, background
/// included. Accumulation and the ratio are done in double regardless of T,
/// in fixed order, so the value is reproducible bit for bit.
template <class T>
DiceLossResult<T> weighted_dice_loss(const Tensor<T>& probs, const Tensor<T>& target,
                                     double eps = 1e-5, double eps_w = 1e-6) {
  require(probs.same_shape(target), ErrorKind::ShapeMismatch,
          "probability and target tensors disagree");
  require(probs.rank() == 4, ErrorKind::ShapeError, "dice loss expects rank-4 tensors");
  const int B = probs.dim(0), C = probs.dim(1), H = probs.dim(2), W = probs.dim(3);
  const std::size_t plane = static_cast<std::size_t>(H) * W;

  std::vector<double> g_sum(static_cast<std::size_t>(C), 0.0);
  std::vector<double> gp(static_cast<std::size_t>(C), 0.0);
  std::vector<double> g2(static_cast<std::size_t>(C), 0.0);
  std::vector<double> p2(static_cast<std::size_t>(C), 0.0);
  for (int bi = 0; bi < B; ++bi) {
    for (int c = 0; c < C; ++c) {
      const std::size_t off = (static_cast<std::size_t>(bi) * C + c) * plane;
      const T* pp = probs.data() + off;
      const T* gg = target.data() + off;
      double s_g = 0.0, s_gp = 0.0, s_g2 = 0.0, s_p2 = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const double p = static_cast<double>(pp[i]);
        const double g = static_cast<double>(gg[i]);
        s_g += g;
        s_gp += g * p;
        s_g2 += g * g;
        s_p2 += p * p;
      }
      g_sum[static_cast<std::size_t>(c)] += s_g;
      gp[static_cast<std::size_t>(c)] += s_gp;
      g2[static_cast<std::size_t>(c)] += s_g2;
      p2[static_cast<std::size_t>(c)] += s_p2;
    }
  }

  std::vector<double> wc(static_cast<std::size_t>(C));
  double num = 0.0, den = 0.0;
  for (int c = 0; c < C; ++c) {
    wc[static_cast<std::size_t>(c)] = 1.0 / (g_sum[static_cast<std::size_t>(c)] + eps_w);
    num += wc[static_cast<std::size_t>(c)] * gp[static_cast<std::size_t>(c)];
    den += wc[static_cast<std::size_t>(c)] *
           (g2[static_cast<std::size_t>(c)] + p2[static_cast<std::size_t>(c)]);
  }
  const double A2 = 2.0 * num + eps;
  const double Bd = den + eps;

  DiceLossResult<T> out;
  out.loss = 1.0 - A2 / Bd;
  out.grad = Tensor<T>(probs.shape());
  const double inv_b2 = 1.0 / (Bd * Bd);
  for (int bi = 0; bi < B; ++bi) {
    for (int c = 0; c < C; ++c) {
      const std::size_t off = (static_cast<std::size_t>(bi) * C + c) * plane;
      const T* pp = probs.data() + off;
      const T* gg = target.data() + off;
      T* gr = out.grad.data() + off;
      const double w = wc[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < plane; ++i) {
        const double p = static_cast<double>(pp[i]);
        const double g = static_cast<double>(gg[i]);
        gr[i] = static_cast<T>(-(2.0 * w * g * Bd - A2 * 2.0 * w * p) * inv_b2);
      }
    }
  }
  return out;
}

}  // namespace resunet
