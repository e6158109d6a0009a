#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "resunet/errors.hpp"
#include "resunet/layers.hpp"

namespace resunet {

struct NetworkConfig {
  int in_channels = 4;
  int n_classes = 4;
  int base_filters = 32;
  int depth = 3;

  bool operator==(const NetworkConfig&) const = default;
};

/// Named view onto one tensor of a network. Entries with a null grad are
/// running statistics: serialized with checkpoints but not touched by the
/// optimizer. conv_kernel marks convolution weight matrices, the only tensors
/// weight decay applies to.
template <class T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
  bool conv_kernel = false;
};

/// Two 3x3 conv/BN stages with a shortcut. When the channel count changes the
/// shortcut is a 1x1 convolution (bias, no normalization); otherwise it is the
/// identity. The addition happens after the second BN, with one final ReLU.
template <class T>
struct ResidualBlock {
  Conv2d<T> conv1, conv2;
  BatchNorm2d<T> bn1, bn2;
  Conv2d<T> proj;
  bool has_proj = false;
  Relu<T> relu1, relu_out;

  ResidualBlock() = default;
  ResidualBlock(int in_ch, int out_ch)
      : conv1(in_ch, out_ch, 3, 1, 1),
        conv2(out_ch, out_ch, 3, 1, 1),
        bn1(out_ch),
        bn2(out_ch),
        has_proj(in_ch != out_ch) {
    if (has_proj) proj = Conv2d<T>(in_ch, out_ch, 1, 1, 0);
  }

  void init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    if (has_proj) proj.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    Tensor<T> h = conv1.forward(x, train);
    h = bn1.forward(h, train);
    h = relu1.forward(h, train);
    h = conv2.forward(h, train);
    h = bn2.forward(h, train);
    if (has_proj) {
      Tensor<T> s = proj.forward(x, train);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += s[i];
    } else {
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += x[i];
    }
    return relu_out.forward(h, train);
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dsum = relu_out.backward(dy);
    Tensor<T> d = bn2.backward(dsum);
    d = conv2.backward(d);
    d = relu1.backward(d);
    d = bn1.backward(d);
    Tensor<T> dx = conv1.backward(d);
    if (has_proj) {
      Tensor<T> ds = proj.backward(dsum);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += ds[i];
    } else {
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dsum[i];
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".conv1.w", &conv1.w, &conv1.gw, true});
    out.push_back({prefix + ".conv1.b", &conv1.b, &conv1.gb, false});
    out.push_back({prefix + ".bn1.gamma", &bn1.gamma, &bn1.ggamma, false});
    out.push_back({prefix + ".bn1.beta", &bn1.beta, &bn1.gbeta, false});
    out.push_back({prefix + ".bn1.running_mean", &bn1.running_mean, nullptr, false});
    out.push_back({prefix + ".bn1.running_var", &bn1.running_var, nullptr, false});
    out.push_back({prefix + ".conv2.w", &conv2.w, &conv2.gw, true});
    out.push_back({prefix + ".conv2.b", &conv2.b, &conv2.gb, false});
    out.push_back({prefix + ".bn2.gamma", &bn2.gamma, &bn2.ggamma, false});
    out.push_back({prefix + ".bn2.beta", &bn2.beta, &bn2.gbeta, false});
    out.push_back({prefix + ".bn2.running_mean", &bn2.running_mean, nullptr, false});
    out.push_back({prefix + ".bn2.running_var", &bn2.running_var, nullptr, false});
    if (has_proj) {
      out.push_back({prefix + ".proj.w", &proj.w, &proj.gw, true});
      out.push_back({prefix + ".proj.b", &proj.b, &proj.gb, false});
    }
  }
};

/// Residual U-Net over 2D multichannel slices.
///
/// Encoder: a 3x3 stem conv to base_filters, then per level a residual block
/// followed by a strided 3x3 conv that halves the grid and doubles the
/// channels. A residual block at base*2^depth forms the bottleneck. Decoder:
/// per level a factor-2 bilinear upsample, a 1x1 conv halving the channels,
/// concatenation with the matching encoder output, and a residual block that
/// folds the pair back to the skip width. A 1x1 conv and per-pixel softmax
/// produce class probabilities at input resolution.
template <class T>
class ResUNet {
 public:
  ResUNet() = default;
  explicit ResUNet(const NetworkConfig& cfg) { build(cfg); }

  void build(const NetworkConfig& cfg) {
    require(cfg.depth >= 1, ErrorKind::ConfigError, "network depth must be >= 1");
    require(cfg.base_filters >= 1, ErrorKind::ConfigError, "base_filters must be >= 1");
    require(cfg.in_channels >= 1 && cfg.n_classes >= 2, ErrorKind::ConfigError,
            "bad channel configuration");
    cfg_ = cfg;
    stem_ = Conv2d<T>(cfg.in_channels, cfg.base_filters, 3, 1, 1);
    enc_.clear();
    dec_.clear();
    for (int i = 0; i < cfg.depth; ++i) {
      const int w = cfg.base_filters << i;
      enc_.push_back({ResidualBlock<T>(w, w), Conv2d<T>(w, 2 * w, 3, 2, 1)});
    }
    bottleneck_ = ResidualBlock<T>(cfg.base_filters << cfg.depth,
                                   cfg.base_filters << cfg.depth);
    for (int i = cfg.depth - 1; i >= 0; --i) {
      const int w = cfg.base_filters << i;
      dec_.push_back({BilinearUp2<T>{}, Conv2d<T>(2 * w, w, 1, 1, 0),
                      ResidualBlock<T>(2 * w, w)});
    }
    head_ = Conv2d<T>(cfg.base_filters, cfg.n_classes, 1, 1, 0);
  }

  void init(Rng& rng) {
    stem_.init(rng);
    for (auto& lv : enc_) {
      lv.block.init(rng);
      lv.down.init(rng);
    }
    bottleneck_.init(rng);
    for (auto& lv : dec_) {
      lv.reduce.init(rng);
      lv.block.init(rng);
    }
    head_.init(rng);
  }

  const NetworkConfig& config() const { return cfg_; }

  int bottleneck_channels() const { return cfg_.base_filters << cfg_.depth; }

  /// (channels, rows, cols) of the bottleneck activation in the most recent
  /// forward pass.
  std::array<int, 3> last_bottleneck_shape() const { return bottleneck_shape_; }

  /// Class probabilities, shape (B, n_classes, H, W). Training mode keeps the
  /// activations backward() needs and drives batch statistics through the BN
  /// layers.
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    require(x.rank() == 4, ErrorKind::ShapeError, "network input must be rank 4");
    require(x.dim(1) == cfg_.in_channels, ErrorKind::ShapeError,
            "network input has wrong channel count");
    const int h = x.dim(2), w = x.dim(3);
    const int div = 1 << cfg_.depth;
    require(h % div == 0 && w % div == 0, ErrorKind::ShapeError,
            "spatial dims must be divisible by 2^depth");
    require(h >= div && w >= div, ErrorKind::ShapeError, "input too small for depth");

    Tensor<T> cur = stem_.forward(x, train);
    skips_.assign(static_cast<std::size_t>(cfg_.depth), Tensor<T>());
    for (int i = 0; i < cfg_.depth; ++i) {
      cur = enc_[static_cast<std::size_t>(i)].block.forward(cur, train);
      skips_[static_cast<std::size_t>(i)] = cur;
      cur = enc_[static_cast<std::size_t>(i)].down.forward(cur, train);
    }
    cur = bottleneck_.forward(cur, train);
    bottleneck_shape_ = {cur.dim(1), cur.dim(2), cur.dim(3)};
    for (int i = 0; i < cfg_.depth; ++i) {
      auto& lv = dec_[static_cast<std::size_t>(i)];
      cur = lv.up.forward(cur);
      cur = lv.reduce.forward(cur, train);
      cur = concat_channels(cur, skips_[static_cast<std::size_t>(cfg_.depth - 1 - i)]);
      cur = lv.block.forward(cur, train);
    }
    if (!train) skips_.clear();
    Tensor<T> logits = head_.forward(cur, train);
    return softmax_.forward(logits, train);
  }

  /// Backpropagates a gradient with respect to the output probabilities,
  /// accumulating parameter gradients. Returns the input gradient.
  Tensor<T> backward(const Tensor<T>& dprobs) {
    Tensor<T> d = softmax_.backward(dprobs);
    d = head_.backward(d);
    std::vector<Tensor<T>> skip_grads(static_cast<std::size_t>(cfg_.depth));
    for (int i = cfg_.depth - 1; i >= 0; --i) {
      auto& lv = dec_[static_cast<std::size_t>(i)];
      d = lv.block.backward(d);
      Tensor<T> d_up, d_skip;
      const int skip_level = cfg_.depth - 1 - i;
      split_channels(d, d.dim(1) / 2, d_up, d_skip);
      skip_grads[static_cast<std::size_t>(skip_level)] = std::move(d_skip);
      d = lv.reduce.backward(d_up);
      d = lv.up.backward(d);
    }
    d = bottleneck_.backward(d);
    for (int i = cfg_.depth - 1; i >= 0; --i) {
      auto& lv = enc_[static_cast<std::size_t>(i)];
      d = lv.down.backward(d);
      for (std::size_t j = 0; j < d.size(); ++j)
        d[j] += skip_grads[static_cast<std::size_t>(i)][j];
      d = lv.block.backward(d);
    }
    skips_.clear();
    return stem_.backward(d);
  }

  void zero_grad() {
    for (auto& p : parameters())
      if (p.grad) p.grad->fill(T{});
  }

  /// Every tensor of the model in a fixed order; the ordering is part of the
  /// checkpoint contract.
  std::vector<ParamRef<T>> parameters() {
    std::vector<ParamRef<T>> out;
    out.push_back({"stem.w", &stem_.w, &stem_.gw, true});
    out.push_back({"stem.b", &stem_.b, &stem_.gb, false});
    for (int i = 0; i < cfg_.depth; ++i) {
      auto& lv = enc_[static_cast<std::size_t>(i)];
      lv.block.collect("enc" + std::to_string(i), out);
      out.push_back({"down" + std::to_string(i) + ".w", &lv.down.w, &lv.down.gw, true});
      out.push_back({"down" + std::to_string(i) + ".b", &lv.down.b, &lv.down.gb, false});
    }
    bottleneck_.collect("bottleneck", out);
    for (int i = 0; i < cfg_.depth; ++i) {
      auto& lv = dec_[static_cast<std::size_t>(i)];
      out.push_back({"up" + std::to_string(i) + ".w", &lv.reduce.w, &lv.reduce.gw, true});
      out.push_back({"up" + std::to_string(i) + ".b", &lv.reduce.b, &lv.reduce.gb, false});
      lv.block.collect("dec" + std::to_string(i), out);
    }
    out.push_back({"head.w", &head_.w, &head_.gw, true});
    out.push_back({"head.b", &head_.b, &head_.gb, false});
    return out;
  }

  /// Trainable parameter count (running statistics excluded).
  std::int64_t parameter_count() {
    std::int64_t n = 0;
    for (auto& p : parameters())
      if (p.grad) n += static_cast<std::int64_t>(p.value->size());
    return n;
  }

 private:
  struct EncoderLevel {
    ResidualBlock<T> block;
    Conv2d<T> down;
  };
  struct DecoderLevel {
    BilinearUp2<T> up;
    Conv2d<T> reduce;
    ResidualBlock<T> block;
  };

  NetworkConfig cfg_;
  Conv2d<T> stem_;
  std::vector<EncoderLevel> enc_;
  ResidualBlock<T> bottleneck_;
  std::vector<DecoderLevel> dec_;
  Conv2d<T> head_;
  SoftmaxChannels<T> softmax_;
  std::vector<Tensor<T>> skips_;
  std::array<int, 3> bottleneck_shape_{0, 0, 0};
};

}  // namespace resunet
