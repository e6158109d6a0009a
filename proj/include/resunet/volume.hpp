#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "resunet/errors.hpp"

namespace resunet {

/// 3D grid stored row-major as (D,H,W); W varies fastest.
/// Axis 0 holds axial slices (H x W planes), axis 1 sagittal, axis 2 coronal.
template <class T>
struct Grid3 {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<T> data;

  Grid3() = default;
  explicit Grid3(std::array<int, 3> d, T fill = T{})
      : dims(d),
        data(static_cast<std::size_t>(d[0]) * d[1] * d[2], fill) {}

  std::size_t size() const { return data.size(); }

  std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * dims[1] + y) * dims[2] + x;
  }
  T& at(int z, int y, int x) { return data[index(z, y, x)]; }
  const T& at(int z, int y, int x) const { return data[index(z, y, x)]; }

  bool same_dims(const Grid3& other) const { return dims == other.dims; }
  bool operator==(const Grid3& other) const {
    return dims == other.dims && data == other.data;
  }
};

using ScalarVolume = Grid3<float>;
using LabelVolume = Grid3<std::uint8_t>;
using BinaryMask = Grid3<std::uint8_t>;

enum class View : int { Axial = 0, Sagittal = 1, Coronal = 2 };

inline int view_axis(View v) { return static_cast<int>(v); }

inline const char* to_string(View v) {
  switch (v) {
    case View::Axial: return "axial";
    case View::Sagittal: return "sagittal";
    case View::Coronal: return "coronal";
  }
  return "?";
}

inline View view_from_string(const std::string& s) {
  if (s == "axial") return View::Axial;
  if (s == "sagittal") return View::Sagittal;
  if (s == "coronal") return View::Coronal;
  fail(ErrorKind::ConfigError, "unknown view '" + s + "'");
}

inline constexpr std::array<View, 3> kAllViews = {View::Axial, View::Sagittal,
                                                  View::Coronal};

enum class Modality : int { T1 = 0, T1ce = 1, T2 = 2, Flair = 3 };

inline constexpr int kNumModalities = 4;

inline const char* modality_suffix(Modality m) {
  switch (m) {
    case Modality::T1: return "_t1";
    case Modality::T1ce: return "_t1ce";
    case Modality::T2: return "_t2";
    case Modality::Flair: return "_flair";
  }
  return "?";
}

/// One patient: four co-registered modality volumes plus optional ground
/// truth. Spacing is mm per voxel along (D,H,W); BraTS volumes are 1 mm
/// isotropic.
struct MultiModalCase {
  std::string case_id;
  std::array<ScalarVolume, kNumModalities> modalities;
  std::optional<LabelVolume> labels;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  std::array<int, 3> dims() const { return modalities[0].dims; }

  void check_invariants() const {
    const auto d = modalities[0].dims;
    for (const auto& vol : modalities) {
      require(vol.dims == d, ErrorKind::DimMismatch,
              "modalities of case '" + case_id + "' disagree on dimensions");
    }
    if (labels) {
      require(labels->dims == d, ErrorKind::DimMismatch,
              "label volume of case '" + case_id + "' does not match modality dimensions");
    }
  }
};

// BraTS label values. 3 is unused by convention.
inline constexpr std::uint8_t kLabelBackground = 0;
inline constexpr std::uint8_t kLabelNcrNet = 1;
inline constexpr std::uint8_t kLabelEdema = 2;
inline constexpr std::uint8_t kLabelEnhancing = 4;
inline constexpr int kNumClasses = 4;

/// Bijection between the contiguous class indices used by the network head
/// and the BraTS label values {0,1,2,4}.
struct ClassIndexMap {
  static constexpr std::array<std::uint8_t, 4> kLabels = {0, 1, 2, 4};

  static int index_of(std::uint8_t label) {
    switch (label) {
      case 0: return 0;
      case 1: return 1;
      case 2: return 2;
      case 4: return 3;
      default:
        fail(ErrorKind::InvalidLabel,
             "label " + std::to_string(int(label)) + " has no class index");
    }
  }

  static std::uint8_t label_of(int index) {
    require(index >= 0 && index < 4, ErrorKind::InvalidIndex,
            "class index " + std::to_string(index) + " out of range");
    return kLabels[static_cast<std::size_t>(index)];
  }
};

inline bool is_valid_label(std::uint8_t v) {
  return v == 0 || v == 1 || v == 2 || v == 4;
}

/// Rejects any voxel outside {0,1,2,4}; reports the first offender with its
/// position.
inline void validate_labels(const LabelVolume& vol) {
  const auto [D, H, W] = vol.dims;
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const std::uint8_t v = vol.at(z, y, x);
        if (!is_valid_label(v)) {
          fail(ErrorKind::InvalidLabel,
               "label " + std::to_string(int(v)) + " at (" + std::to_string(z) + "," +
                   std::to_string(y) + "," + std::to_string(x) + ")");
        }
      }
}

/// Nested evaluation regions: ET = {4}, TC = {1,4}, WT = {1,2,4}.
struct RegionMasks {
  BinaryMask et, tc, wt;
};

inline RegionMasks derive_region_masks(const LabelVolume& vol) {
  validate_labels(vol);
  RegionMasks m{BinaryMask(vol.dims), BinaryMask(vol.dims), BinaryMask(vol.dims)};
  for (std::size_t i = 0; i < vol.size(); ++i) {
    const std::uint8_t v = vol.data[i];
    m.et.data[i] = (v == kLabelEnhancing) ? 1 : 0;
    m.tc.data[i] = (v == kLabelNcrNet || v == kLabelEnhancing) ? 1 : 0;
    m.wt.data[i] = (v != kLabelBackground) ? 1 : 0;
  }
  return m;
}

using ClassIndexVolume = Grid3<std::uint8_t>;

/// Labels {0,1,2,4} -> contiguous indices {0,1,2,3}.
inline ClassIndexVolume map_labels_forward(const LabelVolume& vol) {
  ClassIndexVolume out(vol.dims);
  for (std::size_t i = 0; i < vol.size(); ++i)
    out.data[i] = static_cast<std::uint8_t>(ClassIndexMap::index_of(vol.data[i]));
  return out;
}

/// Indices {0,1,2,3} -> labels {0,1,2,4}.
inline LabelVolume map_labels_backward(const ClassIndexVolume& idx) {
  LabelVolume out(idx.dims);
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.data[i] = ClassIndexMap::label_of(idx.data[i]);
  return out;
}

}  // namespace resunet
