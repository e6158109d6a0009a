#pragma once

#include <cmath>

#include "resunet/rng.hpp"
#include "resunet/tensor.hpp"

namespace resunet {

/// Rotates (C,H,W) image channels and the (H,W) mask about the grid center
/// (H-1)/2, (W-1)/2 by `degrees`, using inverse mapping: bilinear
/// interpolation with zero fill for the image, nearest neighbor for the mask
/// so labels stay categorical.
inline void rotate_patch(Tensor<float>& image, Tensor<std::uint8_t>& mask, double degrees) {
  const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
  const double rad = degrees * 3.14159265358979323846 / 180.0;
  const double ca = std::cos(rad), sa = std::sin(rad);
  const double cy = (H - 1) / 2.0, cx = (W - 1) / 2.0;

  Tensor<float> img_out(image.shape());
  Tensor<std::uint8_t> mask_out(mask.shape());
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      // rotate the output coordinate backwards to find the source point
      const double dy = r - cy, dx = c - cx;
      const double sy = ca * dy + sa * dx + cy;
      const double sx = -sa * dy + ca * dx + cx;

      const int y0 = static_cast<int>(std::floor(sy));
      const int x0 = static_cast<int>(std::floor(sx));
      const double fy = sy - y0, fx = sx - x0;
      for (int ch = 0; ch < C; ++ch) {
        auto tap = [&](int yy, int xx) -> double {
          if (yy < 0 || yy >= H || xx < 0 || xx >= W) return 0.0;
          return image[(static_cast<std::size_t>(ch) * H + yy) * W + xx];
        };
        const double v = (1 - fy) * ((1 - fx) * tap(y0, x0) + fx * tap(y0, x0 + 1)) +
                         fy * ((1 - fx) * tap(y0 + 1, x0) + fx * tap(y0 + 1, x0 + 1));
        img_out[(static_cast<std::size_t>(ch) * H + r) * W + c] = static_cast<float>(v);
      }
      const int ny = static_cast<int>(std::llround(sy));
      const int nx = static_cast<int>(std::llround(sx));
      mask_out[static_cast<std::size_t>(r) * W + c] =
          (ny >= 0 && ny < H && nx >= 0 && nx < W)
              ? mask[static_cast<std::size_t>(ny) * W + nx]
              : 0;
    }
  }
  image = std::move(img_out);
  mask = std::move(mask_out);
}

inline void flip_horizontal(Tensor<float>& image, Tensor<std::uint8_t>& mask) {
  const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
  for (int ch = 0; ch < C; ++ch)
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W / 2; ++c)
        std::swap(image[(static_cast<std::size_t>(ch) * H + r) * W + c],
                  image[(static_cast<std::size_t>(ch) * H + r) * W + (W - 1 - c)]);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W / 2; ++c)
      std::swap(mask[static_cast<std::size_t>(r) * W + c],
                mask[static_cast<std::size_t>(r) * W + (W - 1 - c)]);
}

inline void flip_vertical(Tensor<float>& image, Tensor<std::uint8_t>& mask) {
  const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
  for (int ch = 0; ch < C; ++ch)
    for (int r = 0; r < H / 2; ++r)
      for (int c = 0; c < W; ++c)
        std::swap(image[(static_cast<std::size_t>(ch) * H + r) * W + c],
                  image[(static_cast<std::size_t>(ch) * H + (H - 1 - r)) * W + c]);
  for (int r = 0; r < H / 2; ++r)
    for (int c = 0; c < W; ++c)
      std::swap(mask[static_cast<std::size_t>(r) * W + c],
                mask[static_cast<std::size_t>(H - 1 - r) * W + c]);
}

/// Training-time augmentation: a rotation by a uniform angle in [-180, 180)
/// followed by independent horizontal and vertical flips at p=0.5. Always
/// consumes exactly three draws so the stream stays aligned regardless of
/// outcomes.
inline void augment_patch(Tensor<float>& image, Tensor<std::uint8_t>& mask, Rng& rng) {
  const double angle = rng.uniform(-180.0, 180.0);
  const bool h = rng.bernoulli(0.5);
  const bool v = rng.bernoulli(0.5);
  rotate_patch(image, mask, angle);
  if (h) flip_horizontal(image, mask);
  if (v) flip_vertical(image, mask);
}

}  // namespace resunet
