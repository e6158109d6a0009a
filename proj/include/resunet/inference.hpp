#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "resunet/checkpoint.hpp"
#include "resunet/network.hpp"
#include "resunet/reslice.hpp"
#include "resunet/volume.hpp"

namespace resunet {

struct PadInfo {
  int top = 0, left = 0;  // offsets of the original grid inside the padded one
  int rows = 0, cols = 0; // original extent
};

/// Zero-pads (C,H,W) symmetrically so both spatial dims become multiples of
/// `multiple`; the smaller remainder half goes on the top/left.
inline Tensor<float> pad_to_multiple(const Tensor<float>& slice, int multiple, PadInfo& info) {
  const int C = slice.dim(0), H = slice.dim(1), W = slice.dim(2);
  const int Hp = (H + multiple - 1) / multiple * multiple;
  const int Wp = (W + multiple - 1) / multiple * multiple;
  info = {(Hp - H) / 2, (Wp - W) / 2, H, W};
  if (Hp == H && Wp == W) return slice;
  Tensor<float> out({C, Hp, Wp});
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < H; ++r)
      std::copy_n(slice.data() + (static_cast<std::size_t>(c) * H + r) * W, W,
                  out.data() + (static_cast<std::size_t>(c) * Hp + info.top + r) * Wp +
                      info.left);
  return out;
}

/// Inverse of pad_to_multiple for (C,Hp,Wp) outputs; exact.
inline Tensor<float> crop_from_pad(const Tensor<float>& padded, const PadInfo& info) {
  const int C = padded.dim(0), Hp = padded.dim(1), Wp = padded.dim(2);
  if (Hp == info.rows && Wp == info.cols) return padded;
  Tensor<float> out({C, info.rows, info.cols});
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < info.rows; ++r)
      std::copy_n(padded.data() + (static_cast<std::size_t>(c) * Hp + info.top + r) * Wp +
                      info.left,
                  info.cols,
                  out.data() + (static_cast<std::size_t>(c) * info.rows + r) * info.cols);
  return out;
}

/// Runs the network over every slice of the case along one view and
/// reassembles a class probability volume. Slices are padded to the network's
/// grid multiple and batched; inference uses running BN statistics.
template <class T>
ProbabilityVolume predict_volume(ResUNet<T>& net, const MultiModalCase& cse, View view,
                                 int batch_size = 8) {
  require(batch_size >= 1, ErrorKind::ConfigError, "batch size must be positive");
  const auto dims = cse.dims();
  const int n = slice_count(dims, view);
  const int multiple = 1 << net.config().depth;
  std::vector<Tensor<float>> slices = reslice_multimodal(cse, view);
  std::vector<Tensor<float>> probs(static_cast<std::size_t>(n));

  PadInfo info;
  for (int start = 0; start < n; start += batch_size) {
    const int nb = std::min(batch_size, n - start);
    std::vector<Tensor<float>> padded(static_cast<std::size_t>(nb));
    for (int j = 0; j < nb; ++j)
      padded[static_cast<std::size_t>(j)] =
          pad_to_multiple(slices[static_cast<std::size_t>(start + j)], multiple, info);
    const int C = padded[0].dim(0), Hp = padded[0].dim(1), Wp = padded[0].dim(2);
    Tensor<T> batch({nb, C, Hp, Wp});
    for (int j = 0; j < nb; ++j) {
      const Tensor<float>& s = padded[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < s.size(); ++k)
        batch[static_cast<std::size_t>(j) * s.size() + k] = static_cast<T>(s[k]);
    }
    Tensor<T> out = net.forward(batch, false);
    const int K = out.dim(1);
    const std::size_t per = static_cast<std::size_t>(K) * Hp * Wp;
    for (int j = 0; j < nb; ++j) {
      Tensor<float> chunk({K, Hp, Wp});
      for (std::size_t k = 0; k < per; ++k)
        chunk[k] = static_cast<float>(out[static_cast<std::size_t>(j) * per + k]);
      probs[static_cast<std::size_t>(start + j)] = crop_from_pad(chunk, info);
    }
  }
  return reassemble_probabilities(probs, view, dims);
}

/// Equal-weight mean of probability volumes, accumulated in double in input
/// order. Averaging identical inputs preserves the per-voxel ordering of the
/// class probabilities exactly.
inline ProbabilityVolume average_probabilities(const std::vector<ProbabilityVolume>& vols) {
  require(!vols.empty(), ErrorKind::EmptyCohort, "nothing to average");
  const auto& first = vols[0];
  for (const auto& v : vols)
    require(v.dims == first.dims && v.n_classes == first.n_classes,
            ErrorKind::ShapeMismatch, "probability volumes disagree on shape");
  ProbabilityVolume out(first.dims, first.n_classes);
  const double inv = 1.0 / static_cast<double>(vols.size());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    double s = 0.0;
    for (const auto& v : vols) s += v.data[i];
    out.data[i] = static_cast<float>(s * inv);
  }
  return out;
}

/// Per-voxel argmax; ties resolve to the lowest class index.
inline ClassIndexVolume argmax_classes(const ProbabilityVolume& vol) {
  ClassIndexVolume out(vol.dims);
  const int C = vol.n_classes;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float* p = vol.data.data() + i * static_cast<std::size_t>(C);
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (p[c] > p[best]) best = c;
    out.data[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

/// A set of trained models for ensembling. Per-view tags must be unique and
/// cannot be mixed with a "mixed" model in one set.
struct ModelSet {
  struct Entry {
    ResUNet<float> net;
    std::string view_tag;
  };
  std::vector<Entry> models;

  static ModelSet load_files(const std::vector<std::string>& paths) {
    require(!paths.empty(), ErrorKind::EmptyCohort, "no checkpoints given");
    ModelSet set;
    bool any_mixed = false, any_view = false;
    for (const auto& p : paths) {
      Entry e;
      const CheckpointMeta meta = load_checkpoint(p, e.net);
      e.view_tag = meta.view_tag;
      if (meta.view_tag == "mixed") {
        any_mixed = true;
      } else {
        view_from_string(meta.view_tag);  // rejects unknown tags
        any_view = true;
      }
      set.models.push_back(std::move(e));
    }
    // several models per view are fine (seed ensembles); a mixed-view model
    // subsumes the per-view regime and must come alone
    require(!(any_mixed && any_view), ErrorKind::ViewMismatch,
            "cannot ensemble a mixed-view model with per-view models");
    require(!any_mixed || paths.size() == 1, ErrorKind::ViewMismatch,
            "expected a single mixed-view checkpoint");
    return set;
  }

  /// All *.ckpt directly under dir, ordered by filename.
  static ModelSet load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    require(fs::is_directory(dir), ErrorKind::IoError, "not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".ckpt")
        paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    require(!paths.empty(), ErrorKind::EmptyCohort, "no checkpoints under " + dir);
    return load_files(paths);
  }
};

/// Multi-view ensemble prediction on a normalized case. Per-view models each
/// predict along their own view; a mixed model predicts along all three. The
/// averaged probabilities are reduced to BraTS labels by argmax.
inline LabelVolume predict_ensemble(ModelSet& set, const MultiModalCase& cse,
                                    int batch_size = 8,
                                    ProbabilityVolume* probs_out = nullptr) {
  require(!set.models.empty(), ErrorKind::EmptyCohort, "empty model set");
  std::vector<ProbabilityVolume> vols;
  for (auto& entry : set.models) {
    if (entry.view_tag == "mixed") {
      for (View v : kAllViews)
        vols.push_back(predict_volume(entry.net, cse, v, batch_size));
    } else {
      vols.push_back(
          predict_volume(entry.net, cse, view_from_string(entry.view_tag), batch_size));
    }
  }
  ProbabilityVolume mean = average_probabilities(vols);
  const ClassIndexVolume idx = argmax_classes(mean);
  if (probs_out) *probs_out = std::move(mean);
  return map_labels_backward(idx);
}

}  // namespace resunet
