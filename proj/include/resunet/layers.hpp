#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "resunet/gemm.hpp"
#include "resunet/parallel.hpp"
#include "resunet/rng.hpp"
#include "resunet/tensor.hpp"

namespace resunet {

namespace detail {

template <class T>
std::vector<T>& col_buffer() {
  thread_local std::vector<T> buf;
  return buf;
}

/// Unpacks one sample (C,H,W) into a (C*k*k, out_h*out_w) column matrix.
/// Zero padding, square kernel.
template <class T>
void im2col(const T* x, int channels, int h, int w, int k, int stride, int pad,
            int out_h, int out_w, T* col) {
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            std::memset(dst + static_cast<std::size_t>(oy) * out_w, 0,
                        sizeof(T) * static_cast<std::size_t>(out_w));
            continue;
          }
          const T* src_row = x + (static_cast<std::size_t>(c) * h + iy) * w;
          T* dst_row = dst + static_cast<std::size_t>(oy) * out_w;
          if (stride == 1) {
            // contiguous run of valid columns
            int ox0 = 0;
            while (ox0 < out_w && ox0 + kx - pad < 0) dst_row[ox0++] = T{};
            int ox1 = out_w;
            while (ox1 > ox0 && ox1 - 1 + kx - pad >= w) dst_row[--ox1] = T{};
            if (ox1 > ox0)
              std::memcpy(dst_row + ox0, src_row + ox0 + kx - pad,
                          sizeof(T) * static_cast<std::size_t>(ox1 - ox0));
          } else {
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = ox * stride + kx - pad;
              dst_row[ox] = (ix >= 0 && ix < w) ? src_row[ix] : T{};
            }
          }
        }
      }
    }
  }
}

/// Scatter-add of a column matrix back onto the input grid; transpose of
/// im2col.
template <class T>
void col2im(const T* col, int channels, int h, int w, int k, int stride, int pad,
            int out_h, int out_w, T* x) {
  std::memset(x, 0, sizeof(T) * static_cast<std::size_t>(channels) * h * w);
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          T* dst_row = x + (static_cast<std::size_t>(c) * h + iy) * w;
          const T* src_row = src + static_cast<std::size_t>(oy) * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) dst_row[ix] += src_row[ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 2D convolution, square kernel, zero padding. Weights are stored as a
/// (out_ch, in_ch*k*k) matrix so forward is a single GEMM per sample over the
/// im2col buffer. Samples are dispatched to the thread pool; all cross-sample
/// reductions (weight gradients) are summed in sample order, so results are
/// independent of the thread count.
template <class T>
struct Conv2d {
  int in_ch = 0, out_ch = 0, ksize = 3, stride = 1, pad = 1;
  Tensor<T> w;   // (out_ch, in_ch*k*k)
  Tensor<T> b;   // (out_ch)
  Tensor<T> gw;  // gradient accumulators, same shapes
  Tensor<T> gb;

  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride_, int pad_)
      : in_ch(in_channels),
        out_ch(out_channels),
        ksize(kernel),
        stride(stride_),
        pad(pad_),
        w({out_channels, in_channels * kernel * kernel}),
        b({out_channels}),
        gw({out_channels, in_channels * kernel * kernel}),
        gb({out_channels}) {}

  void init(Rng& rng) {
    // He initialization, fan-in scaled.
    const double std_dev = std::sqrt(2.0 / (in_ch * ksize * ksize));
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = static_cast<T>(rng.normal(0.0, std_dev));
    b.fill(T{});
  }

  int out_extent(int in) const { return (in + 2 * pad - ksize) / stride + 1; }

  Tensor<T> forward(const Tensor<T>& x, bool keep_input) {
    const int B = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int oh = out_extent(H), ow = out_extent(W);
    const int K = in_ch * ksize * ksize;
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    Tensor<T> y({B, out_ch, oh, ow});
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t bi) {
      auto& col = detail::col_buffer<T>();
      col.resize(static_cast<std::size_t>(K) * plane);
      const T* xb = x.data() + bi * in_ch * H * W;
      T* yb = y.data() + bi * out_ch * plane;
      detail::im2col(xb, in_ch, H, W, ksize, stride, pad, oh, ow, col.data());
      gemm(false, false, out_ch, static_cast<int>(plane), K, T(1), w.data(), K,
           col.data(), static_cast<int>(plane), T(0), yb, static_cast<int>(plane));
      for (int c = 0; c < out_ch; ++c) {
        T* row = yb + static_cast<std::size_t>(c) * plane;
        const T bias = b[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < plane; ++i) row[i] += bias;
      }
    });
    if (keep_input) x_ = x;
    return y;
  }

  /// Accumulates gw/gb and returns the input gradient. The im2col buffers are
  /// recomputed here rather than cached from forward to keep memory flat.
  Tensor<T> backward(const Tensor<T>& dy) {
    const int B = x_.dim(0), H = x_.dim(2), W = x_.dim(3);
    const int oh = dy.dim(2), ow = dy.dim(3);
    const int K = in_ch * ksize * ksize;
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    Tensor<T> dx({B, in_ch, H, W});
    std::vector<Tensor<T>> gw_parts(static_cast<std::size_t>(B));
    std::vector<Tensor<T>> gb_parts(static_cast<std::size_t>(B));
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t bi) {
      auto& col = detail::col_buffer<T>();
      col.resize(static_cast<std::size_t>(K) * plane);
      const T* xb = x_.data() + bi * in_ch * H * W;
      const T* dyb = dy.data() + bi * out_ch * plane;
      // weight gradient: dW_b = dy_b * col_b^T
      detail::im2col(xb, in_ch, H, W, ksize, stride, pad, oh, ow, col.data());
      Tensor<T> gw_b({out_ch, K});
      gemm(false, true, out_ch, K, static_cast<int>(plane), T(1), dyb,
           static_cast<int>(plane), col.data(), static_cast<int>(plane), T(0),
           gw_b.data(), K);
      gw_parts[bi] = std::move(gw_b);
      Tensor<T> gb_b({out_ch});
      for (int c = 0; c < out_ch; ++c) {
        T s{};
        const T* row = dyb + static_cast<std::size_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += row[i];
        gb_b[static_cast<std::size_t>(c)] = s;
      }
      gb_parts[bi] = std::move(gb_b);
      // input gradient: dcol = W^T * dy_b, then scatter
      gemm(true, false, K, static_cast<int>(plane), out_ch, T(1), w.data(), K, dyb,
           static_cast<int>(plane), T(0), col.data(), static_cast<int>(plane));
      detail::col2im(col.data(), in_ch, H, W, ksize, stride, pad, oh, ow,
                     dx.data() + bi * in_ch * H * W);
    });
    for (std::size_t bi = 0; bi < static_cast<std::size_t>(B); ++bi) {
      for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += gw_parts[bi][i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gb_parts[bi][i];
    }
    x_ = Tensor<T>();
    return dx;
  }

  std::int64_t parameter_count() const {
    return static_cast<std::int64_t>(w.size() + b.size());
  }

 private:
  Tensor<T> x_;
};

/// Batch normalization over (B,H,W) per channel. Training mode normalizes by
/// batch statistics (biased variance) and updates running averages; inference
/// mode uses the running averages. momentum 0.99, epsilon 1e-3.
template <class T>
struct BatchNorm2d {
  int channels = 0;
  double momentum = 0.99;
  double eps = 1e-3;
  Tensor<T> gamma, beta;
  Tensor<T> running_mean, running_var;
  Tensor<T> ggamma, gbeta;

  BatchNorm2d() = default;
  explicit BatchNorm2d(int ch)
      : channels(ch),
        gamma({ch}, T(1)),
        beta({ch}),
        running_mean({ch}),
        running_var({ch}, T(1)),
        ggamma({ch}),
        gbeta({ch}) {}

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    const int B = x.dim(0), H = x.dim(2), W = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t m = static_cast<std::size_t>(B) * plane;
    Tensor<T> y(x.shape());
    if (train) {
      mean_ = Tensor<T>({channels});
      invstd_ = Tensor<T>({channels});
      for (int c = 0; c < channels; ++c) {
        double sum = 0.0, sq = 0.0;
        for (int bi = 0; bi < B; ++bi) {
          const T* p = x.data() + (static_cast<std::size_t>(bi) * channels + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            const double v = static_cast<double>(p[i]);
            sum += v;
            sq += v * v;
          }
        }
        const double mean = sum / static_cast<double>(m);
        double var = sq / static_cast<double>(m) - mean * mean;
        if (var < 0.0) var = 0.0;
        mean_[static_cast<std::size_t>(c)] = static_cast<T>(mean);
        invstd_[static_cast<std::size_t>(c)] = static_cast<T>(1.0 / std::sqrt(var + eps));
        running_mean[static_cast<std::size_t>(c)] = static_cast<T>(
            momentum * static_cast<double>(running_mean[static_cast<std::size_t>(c)]) +
            (1.0 - momentum) * mean);
        running_var[static_cast<std::size_t>(c)] = static_cast<T>(
            momentum * static_cast<double>(running_var[static_cast<std::size_t>(c)]) +
            (1.0 - momentum) * var);
      }
      apply(x, y, mean_, invstd_);
      x_ = x;
    } else {
      Tensor<T> inv({channels});
      for (int c = 0; c < channels; ++c)
        inv[static_cast<std::size_t>(c)] = static_cast<T>(
            1.0 / std::sqrt(static_cast<double>(running_var[static_cast<std::size_t>(c)]) + eps));
      apply(x, y, running_mean, inv);
    }
    return y;
  }

  /// Training-mode backward.
  Tensor<T> backward(const Tensor<T>& dy) {
    const int B = x_.dim(0), H = x_.dim(2), W = x_.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const double m = static_cast<double>(B) * static_cast<double>(plane);
    Tensor<T> dx(x_.shape());
    for (int c = 0; c < channels; ++c) {
      const double mean = static_cast<double>(mean_[static_cast<std::size_t>(c)]);
      const double invstd = static_cast<double>(invstd_[static_cast<std::size_t>(c)]);
      const double g = static_cast<double>(gamma[static_cast<std::size_t>(c)]);
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int bi = 0; bi < B; ++bi) {
        const T* xp = x_.data() + (static_cast<std::size_t>(bi) * channels + c) * plane;
        const T* dp = dy.data() + (static_cast<std::size_t>(bi) * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (static_cast<double>(xp[i]) - mean) * invstd;
          sum_dy += static_cast<double>(dp[i]);
          sum_dy_xhat += static_cast<double>(dp[i]) * xhat;
        }
      }
      ggamma[static_cast<std::size_t>(c)] += static_cast<T>(sum_dy_xhat);
      gbeta[static_cast<std::size_t>(c)] += static_cast<T>(sum_dy);
      const double k1 = g * invstd;
      for (int bi = 0; bi < B; ++bi) {
        const T* xp = x_.data() + (static_cast<std::size_t>(bi) * channels + c) * plane;
        const T* dp = dy.data() + (static_cast<std::size_t>(bi) * channels + c) * plane;
        T* op = dx.data() + (static_cast<std::size_t>(bi) * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (static_cast<double>(xp[i]) - mean) * invstd;
          const double v = static_cast<double>(dp[i]) - sum_dy / m - xhat * sum_dy_xhat / m;
          op[i] = static_cast<T>(k1 * v);
        }
      }
    }
    x_ = Tensor<T>();
    return dx;
  }

  std::int64_t parameter_count() const {
    return static_cast<std::int64_t>(gamma.size() + beta.size());
  }

 private:
  void apply(const Tensor<T>& x, Tensor<T>& y, const Tensor<T>& mean,
             const Tensor<T>& invstd) const {
    const int B = x.dim(0), H = x.dim(2), W = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t bi) {
      for (int c = 0; c < channels; ++c) {
        const T mu = mean[static_cast<std::size_t>(c)];
        const T is = invstd[static_cast<std::size_t>(c)];
        const T g = gamma[static_cast<std::size_t>(c)];
        const T bt = beta[static_cast<std::size_t>(c)];
        const T* xp = x.data() + (bi * channels + c) * plane;
        T* yp = y.data() + (bi * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) yp[i] = g * (xp[i] - mu) * is + bt;
      }
    });
  }

  Tensor<T> x_;
  Tensor<T> mean_, invstd_;
};

/// ReLU; the sign of the cached output drives the backward mask.
template <class T>
struct Relu {
  Tensor<T> forward(const Tensor<T>& x, bool keep) {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{} ? x[i] : T{};
    if (keep) y_ = y;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = y_[i] > T{} ? dy[i] : T{};
    y_ = Tensor<T>();
    return dx;
  }

 private:
  Tensor<T> y_;
};

/// Factor-2 bilinear upsampling with half-pixel centers. Linear, so backward
/// is the exact transpose scatter.
template <class T>
struct BilinearUp2 {
  Tensor<T> forward(const Tensor<T>& x) {
    in_h_ = x.dim(2);
    in_w_ = x.dim(3);
    const int B = x.dim(0), C = x.dim(1);
    const int oh = in_h_ * 2, ow = in_w_ * 2;
    Tensor<T> y({B, C, oh, ow});
    parallel_for(static_cast<std::size_t>(B) * C, [&](std::size_t bc) {
      const T* xp = x.data() + bc * static_cast<std::size_t>(in_h_) * in_w_;
      T* yp = y.data() + bc * static_cast<std::size_t>(oh) * ow;
      for (int oy = 0; oy < oh; ++oy) {
        int y0, y1;
        T wy;
        tap(oy, in_h_, y0, y1, wy);
        for (int ox = 0; ox < ow; ++ox) {
          int x0, x1;
          T wx;
          tap(ox, in_w_, x0, x1, wx);
          const T v00 = xp[static_cast<std::size_t>(y0) * in_w_ + x0];
          const T v01 = xp[static_cast<std::size_t>(y0) * in_w_ + x1];
          const T v10 = xp[static_cast<std::size_t>(y1) * in_w_ + x0];
          const T v11 = xp[static_cast<std::size_t>(y1) * in_w_ + x1];
          yp[static_cast<std::size_t>(oy) * ow + ox] =
              (T(1) - wy) * ((T(1) - wx) * v00 + wx * v01) +
              wy * ((T(1) - wx) * v10 + wx * v11);
        }
      }
    });
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int B = dy.dim(0), C = dy.dim(1);
    const int oh = dy.dim(2), ow = dy.dim(3);
    Tensor<T> dx({B, C, in_h_, in_w_});
    parallel_for(static_cast<std::size_t>(B) * C, [&](std::size_t bc) {
      const T* dp = dy.data() + bc * static_cast<std::size_t>(oh) * ow;
      T* xp = dx.data() + bc * static_cast<std::size_t>(in_h_) * in_w_;
      for (int oy = 0; oy < oh; ++oy) {
        int y0, y1;
        T wy;
        tap(oy, in_h_, y0, y1, wy);
        for (int ox = 0; ox < ow; ++ox) {
          int x0, x1;
          T wx;
          tap(ox, in_w_, x0, x1, wx);
          const T g = dp[static_cast<std::size_t>(oy) * ow + ox];
          xp[static_cast<std::size_t>(y0) * in_w_ + x0] += (T(1) - wy) * (T(1) - wx) * g;
          xp[static_cast<std::size_t>(y0) * in_w_ + x1] += (T(1) - wy) * wx * g;
          xp[static_cast<std::size_t>(y1) * in_w_ + x0] += wy * (T(1) - wx) * g;
          xp[static_cast<std::size_t>(y1) * in_w_ + x1] += wy * wx * g;
        }
      }
    });
    return dx;
  }

 private:
  // Source taps for output index o: input coordinate (o + 0.5)/2 - 0.5.
  static void tap(int o, int extent, int& i0, int& i1, T& frac) {
    const double src = (o + 0.5) / 2.0 - 0.5;
    double fl = std::floor(src);
    int lo = static_cast<int>(fl);
    double f = src - fl;
    if (lo < 0) {
      lo = 0;
      f = 0.0;
    }
    int hi = lo + 1;
    if (hi > extent - 1) {
      hi = extent - 1;
      f = 0.0;
    }
    i0 = lo;
    i1 = hi;
    frac = static_cast<T>(f);
  }

  int in_h_ = 0, in_w_ = 0;
};

/// Channel concatenation [a ; b] and its split backward.
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const int B = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2), W = a.dim(3);
  require(b.dim(0) == B && b.dim(2) == H && b.dim(3) == W, ErrorKind::ShapeError,
          "concat operands disagree on batch or spatial dims");
  Tensor<T> y({B, Ca + Cb, H, W});
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int bi = 0; bi < B; ++bi) {
    std::memcpy(y.data() + (static_cast<std::size_t>(bi) * (Ca + Cb)) * plane,
                a.data() + (static_cast<std::size_t>(bi) * Ca) * plane,
                sizeof(T) * Ca * plane);
    std::memcpy(y.data() + (static_cast<std::size_t>(bi) * (Ca + Cb) + Ca) * plane,
                b.data() + (static_cast<std::size_t>(bi) * Cb) * plane,
                sizeof(T) * Cb * plane);
  }
  return y;
}

template <class T>
void split_channels(const Tensor<T>& dy, int ca, Tensor<T>& da, Tensor<T>& db) {
  const int B = dy.dim(0), C = dy.dim(1), H = dy.dim(2), W = dy.dim(3);
  const int cb = C - ca;
  da = Tensor<T>({B, ca, H, W});
  db = Tensor<T>({B, cb, H, W});
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int bi = 0; bi < B; ++bi) {
    std::memcpy(da.data() + (static_cast<std::size_t>(bi) * ca) * plane,
                dy.data() + (static_cast<std::size_t>(bi) * C) * plane,
                sizeof(T) * ca * plane);
    std::memcpy(db.data() + (static_cast<std::size_t>(bi) * cb) * plane,
                dy.data() + (static_cast<std::size_t>(bi) * C + ca) * plane,
                sizeof(T) * cb * plane);
  }
}

/// Per-pixel softmax over the channel axis.
template <class T>
struct SoftmaxChannels {
  Tensor<T> forward(const Tensor<T>& x, bool keep) {
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    Tensor<T> y(x.shape());
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t bi) {
      const T* xb = x.data() + bi * C * plane;
      T* yb = y.data() + bi * C * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        T mx = xb[i];
        for (int c = 1; c < C; ++c) mx = std::max(mx, xb[static_cast<std::size_t>(c) * plane + i]);
        T sum{};
        for (int c = 0; c < C; ++c) {
          const T e = std::exp(xb[static_cast<std::size_t>(c) * plane + i] - mx);
          yb[static_cast<std::size_t>(c) * plane + i] = e;
          sum += e;
        }
        const T inv = T(1) / sum;
        for (int c = 0; c < C; ++c) yb[static_cast<std::size_t>(c) * plane + i] *= inv;
      }
    });
    if (keep) probs_ = y;
    return y;
  }

  /// dlogit_c = p_c * (dp_c - sum_k p_k dp_k)
  Tensor<T> backward(const Tensor<T>& dprobs) {
    const int B = dprobs.dim(0), C = dprobs.dim(1), H = dprobs.dim(2), W = dprobs.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    Tensor<T> dx(dprobs.shape());
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t bi) {
      const T* pb = probs_.data() + bi * C * plane;
      const T* db = dprobs.data() + bi * C * plane;
      T* ob = dx.data() + bi * C * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        T dot{};
        for (int c = 0; c < C; ++c)
          dot += pb[static_cast<std::size_t>(c) * plane + i] *
                 db[static_cast<std::size_t>(c) * plane + i];
        for (int c = 0; c < C; ++c) {
          const std::size_t at = static_cast<std::size_t>(c) * plane + i;
          ob[at] = pb[at] * (db[at] - dot);
        }
      }
    });
    probs_ = Tensor<T>();
    return dx;
  }

 private:
  Tensor<T> probs_;
};

}  // namespace resunet
