#pragma once

#include <vector>

#include "resunet/tensor.hpp"
#include "resunet/volume.hpp"

namespace resunet {

/// In-plane shape of a slice taken along `view` from a (D,H,W) grid.
/// Rows/cols are the remaining axes in (D,H,W) order, so:
///   axial    -> (H, W)
///   sagittal -> (D, W)
///   coronal  -> (D, H)
inline std::array<int, 2> slice_shape(std::array<int, 3> dims, View view) {
  switch (view) {
    case View::Axial: return {dims[1], dims[2]};
    case View::Sagittal: return {dims[0], dims[2]};
    case View::Coronal: return {dims[0], dims[1]};
  }
  return {0, 0};
}

inline int slice_count(std::array<int, 3> dims, View view) {
  return dims[view_axis(view)];
}

namespace detail {

/// Maps (slice k, row r, col c) in a view back to (z,y,x).
inline std::array<int, 3> voxel_of(View view, int k, int r, int c) {
  switch (view) {
    case View::Axial: return {k, r, c};
    case View::Sagittal: return {r, k, c};
    case View::Coronal: return {r, c, k};
  }
  return {0, 0, 0};
}

}  // namespace detail

/// Cross-sections along the view axis, one 2D grid per index.
template <class T>
std::vector<Tensor<T>> reslice(const Grid3<T>& vol, View view) {
  const auto [rows, cols] = slice_shape(vol.dims, view);
  const int n = slice_count(vol.dims, view);
  std::vector<Tensor<T>> slices;
  slices.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Tensor<T> s({rows, cols});
    T* out = s.data();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const auto [z, y, x] = detail::voxel_of(view, k, r, c);
        out[static_cast<std::size_t>(r) * cols + c] = vol.at(z, y, x);
      }
    slices.push_back(std::move(s));
  }
  return slices;
}

/// Inverse of reslice; exact. Slices must be (rows, cols) grids matching the
/// view and dims.
template <class T>
Grid3<T> reassemble(const std::vector<Tensor<T>>& slices, View view,
                    std::array<int, 3> dims) {
  const auto [rows, cols] = slice_shape(dims, view);
  const int n = slice_count(dims, view);
  require(static_cast<int>(slices.size()) == n, ErrorKind::ShapeMismatch,
          "expected " + std::to_string(n) + " slices, got " +
              std::to_string(slices.size()));
  Grid3<T> vol(dims);
  for (int k = 0; k < n; ++k) {
    const Tensor<T>& s = slices[static_cast<std::size_t>(k)];
    require(s.rank() == 2 && s.dim(0) == rows && s.dim(1) == cols,
            ErrorKind::ShapeMismatch, "slice " + std::to_string(k) + " has wrong shape");
    const T* in = s.data();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const auto [z, y, x] = detail::voxel_of(view, k, r, c);
        vol.at(z, y, x) = in[static_cast<std::size_t>(r) * cols + c];
      }
  }
  return vol;
}

/// 4-channel slices (C, rows, cols) of a case's modalities, channel order
/// T1, T1ce, T2, FLAIR.
inline std::vector<Tensor<float>> reslice_multimodal(const MultiModalCase& cse,
                                                     View view) {
  const auto [rows, cols] = slice_shape(cse.dims(), view);
  const int n = slice_count(cse.dims(), view);
  std::vector<Tensor<float>> slices;
  slices.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Tensor<float> s({kNumModalities, rows, cols});
    float* out = s.data();
    for (int m = 0; m < kNumModalities; ++m) {
      const ScalarVolume& vol = cse.modalities[static_cast<std::size_t>(m)];
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const auto [z, y, x] = detail::voxel_of(view, k, r, c);
          out[(static_cast<std::size_t>(m) * rows + r) * cols + c] = vol.at(z, y, x);
        }
    }
    slices.push_back(std::move(s));
  }
  return slices;
}

/// Per-voxel class probabilities over a (D,H,W) grid, classes contiguous per
/// voxel.
struct ProbabilityVolume {
  std::array<int, 3> dims{0, 0, 0};
  int n_classes = 0;
  std::vector<float> data;

  ProbabilityVolume() = default;
  ProbabilityVolume(std::array<int, 3> d, int classes)
      : dims(d),
        n_classes(classes),
        data(static_cast<std::size_t>(d[0]) * d[1] * d[2] * classes, 0.0f) {}

  std::size_t voxels() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }

  float* voxel(int z, int y, int x) {
    return data.data() +
           ((static_cast<std::size_t>(z) * dims[1] + y) * dims[2] + x) * n_classes;
  }
  const float* voxel(int z, int y, int x) const {
    return data.data() +
           ((static_cast<std::size_t>(z) * dims[1] + y) * dims[2] + x) * n_classes;
  }
};

/// Scatter per-slice class probabilities (C, rows, cols) back onto the volume
/// grid. Inverse of reslicing a ProbabilityVolume channelwise; exact.
inline ProbabilityVolume reassemble_probabilities(
    const std::vector<Tensor<float>>& slices, View view, std::array<int, 3> dims) {
  const auto [rows, cols] = slice_shape(dims, view);
  const int n = slice_count(dims, view);
  require(static_cast<int>(slices.size()) == n, ErrorKind::ShapeMismatch,
          "expected " + std::to_string(n) + " probability slices, got " +
              std::to_string(slices.size()));
  require(!slices.empty(), ErrorKind::ShapeMismatch, "no slices");
  const int C = slices[0].dim(0);
  ProbabilityVolume out(dims, C);
  for (int k = 0; k < n; ++k) {
    const Tensor<float>& s = slices[static_cast<std::size_t>(k)];
    require(s.rank() == 3 && s.dim(0) == C && s.dim(1) == rows && s.dim(2) == cols,
            ErrorKind::ShapeMismatch,
            "probability slice " + std::to_string(k) + " has wrong shape");
    const float* in = s.data();
    for (int c0 = 0; c0 < C; ++c0)
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const auto [z, y, x] = detail::voxel_of(view, k, r, c);
          out.voxel(z, y, x)[c0] =
              in[(static_cast<std::size_t>(c0) * rows + r) * cols + c];
        }
  }
  return out;
}

/// Extract per-slice class probabilities; inverse of reassemble_probabilities.
inline std::vector<Tensor<float>> reslice_probabilities(const ProbabilityVolume& vol,
                                                        View view) {
  const auto [rows, cols] = slice_shape(vol.dims, view);
  const int n = slice_count(vol.dims, view);
  const int C = vol.n_classes;
  std::vector<Tensor<float>> slices;
  slices.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Tensor<float> s({C, rows, cols});
    float* out = s.data();
    for (int c0 = 0; c0 < C; ++c0)
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const auto [z, y, x] = detail::voxel_of(view, k, r, c);
          out[(static_cast<std::size_t>(c0) * rows + r) * cols + c] =
              vol.voxel(z, y, x)[c0];
        }
    slices.push_back(std::move(s));
  }
  return slices;
}

}  // namespace resunet
