#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "resunet/nifti.hpp"
#include "resunet/volume.hpp"

namespace resunet {

/// Case directories follow the BraTS convention: a directory named after the
/// case containing <case>_t1, _t1ce, _t2, _flair and optionally _seg, each as
/// .nii.gz or .nii.

struct CasePaths {
  std::string dir;
  std::string case_id;
  std::array<std::string, kNumModalities> modalities;
  std::string seg;  // empty when the case has no ground truth
};

namespace detail {

inline std::string find_image(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* ext : {".nii.gz", ".nii"}) {
    const auto p = dir / (stem + ext);
    if (std::filesystem::exists(p)) return p.string();
  }
  return {};
}

}  // namespace detail

inline CasePaths locate_case(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path d(dir);
  require(fs::is_directory(d), ErrorKind::IoError, "not a directory: " + dir);
  CasePaths out;
  out.dir = dir;
  out.case_id = d.filename().string();
  if (out.case_id.empty()) out.case_id = d.parent_path().filename().string();
  for (int m = 0; m < kNumModalities; ++m) {
    const std::string stem = out.case_id + modality_suffix(static_cast<Modality>(m));
    out.modalities[static_cast<std::size_t>(m)] = detail::find_image(d, stem);
    require(!out.modalities[static_cast<std::size_t>(m)].empty(), ErrorKind::MissingModality,
            "case '" + out.case_id + "' is missing " + stem + ".nii[.gz]");
  }
  out.seg = detail::find_image(d, out.case_id + "_seg");
  return out;
}

/// Subdirectories of root that contain a full modality set, ordered by case
/// id. Directories missing modalities are reported rather than skipped.
inline std::vector<CasePaths> discover_cases(const std::string& root) {
  namespace fs = std::filesystem;
  require(fs::is_directory(root), ErrorKind::IoError, "not a directory: " + root);
  std::vector<std::string> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path().string());
  std::sort(dirs.begin(), dirs.end());
  std::vector<CasePaths> out;
  for (const auto& d : dirs) out.push_back(locate_case(d));
  require(!out.empty(), ErrorKind::EmptyCohort, "no cases under " + root);
  return out;
}

/// Loads the four modalities (and segmentation when present). reference, if
/// given, receives the T1 header so outputs can reuse its geometry.
inline MultiModalCase read_case(const CasePaths& paths, NiftiInfo* reference = nullptr) {
  MultiModalCase cse;
  cse.case_id = paths.case_id;
  NiftiInfo info;
  for (int m = 0; m < kNumModalities; ++m) {
    cse.modalities[static_cast<std::size_t>(m)] =
        read_nifti_volume(paths.modalities[static_cast<std::size_t>(m)], &info);
    if (m == 0) {
      cse.spacing = {info.spacing[0], info.spacing[1], info.spacing[2]};
      if (reference) *reference = info;
    }
  }
  if (!paths.seg.empty()) {
    cse.labels = read_nifti_labels(paths.seg);
    validate_labels(*cse.labels);
  }
  cse.check_invariants();
  return cse;
}

/// Writes a case directory under root, gzipped.
inline void write_case(const std::string& root, const MultiModalCase& cse) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(root) / cse.case_id;
  fs::create_directories(dir);
  const std::array<float, 3> spacing = {static_cast<float>(cse.spacing[0]),
                                        static_cast<float>(cse.spacing[1]),
                                        static_cast<float>(cse.spacing[2])};
  for (int m = 0; m < kNumModalities; ++m) {
    const std::string path =
        (dir / (cse.case_id + modality_suffix(static_cast<Modality>(m)) + ".nii.gz")).string();
    write_nifti_volume(path, cse.modalities[static_cast<std::size_t>(m)], spacing);
  }
  if (cse.labels) {
    write_nifti_labels((dir / (cse.case_id + "_seg.nii.gz")).string(), *cse.labels,
                       nullptr, spacing);
  }
}

}  // namespace resunet
