#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "resunet/rng.hpp"
#include "resunet/volume.hpp"

namespace resunet {

/// Synthetic multi-modal cases: a brain ellipsoid containing a nested tumor
/// (enhancing core inside tumor core inside whole tumor, all sharing one
/// center with strictly shrinking semi-axes, so the voxelwise nesting of the
/// evaluation regions holds by construction). Each tissue gets a modality-
/// dependent mean intensity, modulated by a smooth multiplicative ramp and
/// voxel noise. Background is exactly zero; brain voxels are clamped strictly
/// positive so the nonzero-voxel convention survives the noise.
struct PhantomSpec {
  std::array<int, 3> dims{64, 64, 64};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::uint64_t seed = 1234;

  double p_tumor = 1.0;  // any tumor at all
  double p_tc = 1.0;     // tumor core inside the whole tumor
  double p_et = 0.9;     // enhancing core inside the tumor core

  double noise_sigma = 0.05;
  double bias_strength = 0.10;
  double min_intensity = 0.02;

  // semi-axis fractions: brain relative to the half-extent of the grid,
  // whole tumor relative to the brain, core and enhancing relative to their
  // parent region
  double brain_lo = 0.80, brain_hi = 0.92;
  double wt_lo = 0.28, wt_hi = 0.45;
  double tc_lo = 0.55, tc_hi = 0.75;
  double et_lo = 0.50, et_hi = 0.75;
};

namespace detail {

// Mean intensity per (modality, tissue); tissue columns are healthy brain,
// edema, necrotic core, enhancing core. Contrast follows the clinical
// pattern: enhancing lights up under T1ce, edema under T2/FLAIR, necrosis is
// dark on T1.
inline constexpr double kPhantomMeans[kNumModalities][4] = {
    /* T1    */ {1.00, 0.80, 0.55, 1.15},
    /* T1ce  */ {1.00, 0.85, 0.50, 1.80},
    /* T2    */ {1.00, 1.70, 1.25, 1.05},
    /* FLAIR */ {1.00, 1.80, 1.30, 1.10},
};

struct Ellipsoid {
  std::array<double, 3> center{};
  std::array<double, 3> semi{};

  bool contains(double z, double y, double x) const {
    const double a = (z - center[0]) / semi[0];
    const double b = (y - center[1]) / semi[1];
    const double c = (x - center[2]) / semi[2];
    return a * a + b * b + c * c <= 1.0;
  }
};

}  // namespace detail

inline std::string phantom_case_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "phantom_%03d", index);
  return buf;
}

inline MultiModalCase generate_phantom(const PhantomSpec& spec, int case_index) {
  require(spec.dims[0] >= 8 && spec.dims[1] >= 8 && spec.dims[2] >= 8,
          ErrorKind::ConfigError, "phantom dims too small");
  Rng rng = Rng::derive(spec.seed, {streams::kPhantom, static_cast<std::uint64_t>(case_index)});

  const std::array<double, 3> half = {spec.dims[0] / 2.0, spec.dims[1] / 2.0,
                                      spec.dims[2] / 2.0};

  detail::Ellipsoid brain;
  for (int a = 0; a < 3; ++a) brain.semi[a] = rng.uniform(spec.brain_lo, spec.brain_hi) * half[a];
  for (int a = 0; a < 3; ++a)
    brain.center[a] = half[a] - 0.5 + rng.uniform(-0.02, 0.02) * spec.dims[a];

  std::array<double, 3> bias_dir{rng.normal(), rng.normal(), rng.normal()};
  {
    const double n = std::sqrt(bias_dir[0] * bias_dir[0] + bias_dir[1] * bias_dir[1] +
                               bias_dir[2] * bias_dir[2]);
    for (auto& v : bias_dir) v /= (n > 1e-12 ? n : 1.0);
  }

  const bool has_tumor = rng.bernoulli(spec.p_tumor);
  detail::Ellipsoid wt, tc, et;
  bool has_tc = false, has_et = false;
  if (has_tumor) {
    double max_frac = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double u = rng.uniform(spec.wt_lo, spec.wt_hi);
      wt.semi[a] = u * brain.semi[a];
      max_frac = std::max(max_frac, u);
    }
    const double tc_scale = rng.uniform(spec.tc_lo, spec.tc_hi);
    const double et_scale = rng.uniform(spec.et_lo, spec.et_hi);
    has_tc = rng.bernoulli(spec.p_tc);
    has_et = has_tc && rng.bernoulli(spec.p_et);

    // Tumor center: uniform in the half-scaled brain ellipsoid, then shrunk
    // if needed so center_offset_norm + largest semi-axis fraction <= 1,
    // which keeps the whole tumor inside the brain.
    std::array<double, 3> p{};
    double norm;
    do {
      for (auto& v : p) v = rng.uniform(-1.0, 1.0);
      norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    } while (norm > 1.0);
    std::array<double, 3> offset{};
    for (int a = 0; a < 3; ++a) offset[a] = 0.5 * p[a] * brain.semi[a];
    double off_norm = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double r = offset[a] / brain.semi[a];
      off_norm += r * r;
    }
    off_norm = std::sqrt(off_norm);
    if (off_norm + max_frac > 1.0 && off_norm > 1e-12) {
      const double shrink = 0.95 * (1.0 - max_frac) / off_norm;
      for (auto& v : offset) v *= shrink;
    }
    for (int a = 0; a < 3; ++a) {
      wt.center[a] = brain.center[a] + offset[a];
      tc.center[a] = wt.center[a];
      et.center[a] = wt.center[a];
      tc.semi[a] = tc_scale * wt.semi[a];
      et.semi[a] = et_scale * tc.semi[a];
    }
  }

  MultiModalCase cse;
  cse.case_id = phantom_case_id(case_index);
  cse.spacing = spec.spacing;
  for (auto& vol : cse.modalities) vol = ScalarVolume(spec.dims);
  cse.labels = LabelVolume(spec.dims);

  const auto [D, H, W] = spec.dims;
  for (int z = 0; z < D; ++z) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (!brain.contains(z, y, x)) continue;
        int tissue = 0;
        std::uint8_t label = kLabelBackground;
        if (has_tumor && wt.contains(z, y, x)) {
          if (has_et && et.contains(z, y, x)) {
            tissue = 3;
            label = kLabelEnhancing;
          } else if (has_tc && tc.contains(z, y, x)) {
            tissue = 2;
            label = kLabelNcrNet;
          } else {
            tissue = 1;
            label = kLabelEdema;
          }
        }
        cse.labels->at(z, y, x) = label;
        double ramp = 0.0;
        ramp += bias_dir[0] * (z - brain.center[0]) / half[0];
        ramp += bias_dir[1] * (y - brain.center[1]) / half[1];
        ramp += bias_dir[2] * (x - brain.center[2]) / half[2];
        const double bias = std::max(0.5, 1.0 + spec.bias_strength * ramp);
        for (int m = 0; m < kNumModalities; ++m) {
          const double v =
              detail::kPhantomMeans[m][tissue] * bias + rng.normal(0.0, spec.noise_sigma);
          cse.modalities[static_cast<std::size_t>(m)].at(z, y, x) =
              static_cast<float>(std::max(spec.min_intensity, v));
        }
      }
    }
  }
  return cse;
}

}  // namespace resunet
