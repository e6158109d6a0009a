#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "resunet/errors.hpp"
#include "resunet/fixture.hpp"
#include "resunet/reslice.hpp"
#include "resunet/rng.hpp"
#include "resunet/volume.hpp"

namespace resunet {

struct ModalityStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t nonzero = 0;
};

/// Normalizes one modality in place to zero mean and unit variance over its
/// nonzero voxels (population variance). Zero voxels are background by
/// convention and stay exactly zero.
inline ModalityStats normalize_volume(ScalarVolume& vol, const std::string& tag) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const float v : vol.data) {
    if (v == 0.0f) continue;
    sum += v;
    sq += static_cast<double>(v) * v;
    ++n;
  }
  require(n > 0, ErrorKind::EmptyBrain, "no nonzero voxels in " + tag);
  const double mean = sum / static_cast<double>(n);
  double var = sq / static_cast<double>(n) - mean * mean;
  if (var < 0.0) var = 0.0;
  const double stddev = std::sqrt(var);
  require(stddev >= 1e-6, ErrorKind::DegenerateIntensity,
          "intensity spread too small in " + tag);
  for (float& v : vol.data) {
    if (v == 0.0f) continue;
    v = static_cast<float>((v - mean) / stddev);
  }
  return {mean, stddev, n};
}

inline std::array<ModalityStats, kNumModalities> normalize_case(MultiModalCase& cse) {
  std::array<ModalityStats, kNumModalities> stats;
  for (int m = 0; m < kNumModalities; ++m) {
    stats[static_cast<std::size_t>(m)] = normalize_volume(
        cse.modalities[static_cast<std::size_t>(m)],
        cse.case_id + modality_suffix(static_cast<Modality>(m)));
  }
  return stats;
}

struct PatchSample {
  Tensor<float> image;        // (channels, P, P)
  Tensor<std::uint8_t> mask;  // (P, P), original label values
  std::string case_id;
  View view = View::Axial;
  int slice_index = 0;
};

namespace detail {

/// Copy bounds along one axis: source window start, destination offset, run
/// length. Windows are centered on `center`, clamped to the slice, and padded
/// symmetrically when the slice is narrower than the patch.
inline void window_1d(int extent, int patch, int center, int& src0, int& dst0, int& len) {
  if (extent >= patch) {
    src0 = std::clamp(center - patch / 2, 0, extent - patch);
    dst0 = 0;
    len = patch;
  } else {
    src0 = 0;
    dst0 = (patch - extent) / 2;
    len = extent;
  }
}

}  // namespace detail

/// One patch per tumor-containing slice along the view: the crop window is
/// centered on the in-slice tumor centroid, clamped to the slice bounds, and
/// zero-padded when the slice is smaller than the patch. If the clamped
/// window somehow contains no tumor (possible for concave shapes whose
/// centroid falls far outside them), the window is recentered on the tumor
/// pixel nearest the centroid.
inline std::vector<PatchSample> extract_patches(const MultiModalCase& cse, View view,
                                                int patch_size) {
  require(cse.labels.has_value(), ErrorKind::MissingLabels,
          "patch extraction needs ground truth for case '" + cse.case_id + "'");
  require(patch_size >= 1, ErrorKind::ConfigError, "patch size must be positive");
  const auto dims = cse.dims();
  const auto [rows, cols] = slice_shape(dims, view);
  const int n_slices = slice_count(dims, view);

  std::vector<PatchSample> out;
  std::vector<std::array<int, 2>> tumor;
  for (int k = 0; k < n_slices; ++k) {
    tumor.clear();
    double cr = 0.0, cc = 0.0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const auto [z, y, x] = detail::voxel_of(view, k, r, c);
        if (cse.labels->at(z, y, x) != kLabelBackground) {
          tumor.push_back({r, c});
          cr += r;
          cc += c;
        }
      }
    if (tumor.empty()) continue;
    int center_r = static_cast<int>(std::llround(cr / static_cast<double>(tumor.size())));
    int center_c = static_cast<int>(std::llround(cc / static_cast<double>(tumor.size())));

    int sr, dr, lr, sc, dc, lc;
    detail::window_1d(rows, patch_size, center_r, sr, dr, lr);
    detail::window_1d(cols, patch_size, center_c, sc, dc, lc);
    bool hit = false;
    for (const auto& t : tumor)
      if (t[0] >= sr && t[0] < sr + lr && t[1] >= sc && t[1] < sc + lc) {
        hit = true;
        break;
      }
    if (!hit) {
      long best = -1;
      for (const auto& t : tumor) {
        const long dr2 = t[0] - center_r, dc2 = t[1] - center_c;
        const long d2 = dr2 * dr2 + dc2 * dc2;
        if (best < 0 || d2 < best) {
          best = d2;
          center_r = t[0];
          center_c = t[1];
        }
      }
      detail::window_1d(rows, patch_size, center_r, sr, dr, lr);
      detail::window_1d(cols, patch_size, center_c, sc, dc, lc);
    }

    PatchSample sample;
    sample.case_id = cse.case_id;
    sample.view = view;
    sample.slice_index = k;
    sample.image = Tensor<float>({kNumModalities, patch_size, patch_size});
    sample.mask = Tensor<std::uint8_t>({patch_size, patch_size});
    for (int m = 0; m < kNumModalities; ++m) {
      const ScalarVolume& vol = cse.modalities[static_cast<std::size_t>(m)];
      for (int r = 0; r < lr; ++r)
        for (int c = 0; c < lc; ++c) {
          const auto [z, y, x] = detail::voxel_of(view, k, sr + r, sc + c);
          sample.image[(static_cast<std::size_t>(m) * patch_size + (dr + r)) * patch_size +
                       (dc + c)] = vol.at(z, y, x);
        }
    }
    for (int r = 0; r < lr; ++r)
      for (int c = 0; c < lc; ++c) {
        const auto [z, y, x] = detail::voxel_of(view, k, sr + r, sc + c);
        sample.mask[static_cast<std::size_t>(dr + r) * patch_size + (dc + c)] =
            cse.labels->at(z, y, x);
      }
    out.push_back(std::move(sample));
  }
  return out;
}

/// Seeded 80/20-style split: a Fisher-Yates permutation of n items, the first
/// llround(train_frac*n) of which become the training set, clamped so neither
/// side is empty. Returns true for training items.
inline std::vector<bool> split_train_val(std::size_t n, double train_frac, Rng& rng) {
  require(n >= 2, ErrorKind::TooFewSamples,
          "need at least 2 samples to split, got " + std::to_string(n));
  require(train_frac > 0.0 && train_frac < 1.0, ErrorKind::ConfigError,
          "train fraction must be in (0, 1)");
  auto perm = rng.permutation(n);
  auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<bool> is_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) is_train[perm[i]] = true;
  return is_train;
}

/// Fraction of mask pixels carrying each label, ordered {0, 1, 2, 4}.
inline std::array<double, 4> class_distribution(PatchStore& store) {
  std::array<std::size_t, 4> counts{};
  Tensor<float> image;
  Tensor<std::uint8_t> mask;
  for (std::size_t i = 0; i < store.size(); ++i) {
    store.read(i, image, mask);
    for (std::size_t j = 0; j < mask.size(); ++j)
      ++counts[static_cast<std::size_t>(ClassIndexMap::index_of(mask[j]))];
  }
  std::size_t total = counts[0] + counts[1] + counts[2] + counts[3];
  require(total > 0, ErrorKind::EmptyCohort, "no mask pixels in patch store");
  std::array<double, 4> frac;
  for (int c = 0; c < 4; ++c)
    frac[static_cast<std::size_t>(c)] =
        static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(total);
  return frac;
}

}  // namespace resunet
