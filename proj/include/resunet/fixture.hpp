#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "resunet/errors.hpp"
#include "resunet/tensor.hpp"
#include "resunet/volume.hpp"

namespace resunet {

/// Raw little-endian volume fixtures: <stem>.bin holds the (D,H,W) row-major
/// payload, <stem>.json describes it ({"dims", "spacing", "dtype"}). Meant for
/// test data and debugging dumps where NIfTI headers would only get in the
/// way.

namespace detail {

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), ErrorKind::IoError, "cannot open: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::CorruptHeader, "bad JSON in " + path + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  require(os.good(), ErrorKind::IoError, "cannot open for writing: " + path);
  os << j.dump(2) << "\n";
  require(os.good(), ErrorKind::IoError, "write failed: " + path);
}

template <class T>
const char* fixture_dtype();
template <>
inline const char* fixture_dtype<float>() {
  return "float32";
}
template <>
inline const char* fixture_dtype<std::uint8_t>() {
  return "uint8";
}

}  // namespace detail

template <class T>
void write_fixture(const std::string& stem, const Grid3<T>& vol,
                   std::array<double, 3> spacing = {1.0, 1.0, 1.0}) {
  nlohmann::json j;
  j["dims"] = vol.dims;
  j["spacing"] = spacing;
  j["dtype"] = detail::fixture_dtype<T>();
  detail::write_json_file(stem + ".json", j);
  std::ofstream os(stem + ".bin", std::ios::binary);
  require(os.good(), ErrorKind::IoError, "cannot open for writing: " + stem + ".bin");
  os.write(reinterpret_cast<const char*>(vol.data.data()),
           static_cast<std::streamsize>(vol.size() * sizeof(T)));
  require(os.good(), ErrorKind::IoError, "write failed: " + stem + ".bin");
}

template <class T>
Grid3<T> read_fixture(const std::string& stem,
                      std::array<double, 3>* spacing = nullptr) {
  const nlohmann::json j = detail::read_json_file(stem + ".json");
  require(j.contains("dims") && j.contains("dtype"), ErrorKind::CorruptHeader,
          "fixture sidecar missing fields: " + stem + ".json");
  require(j["dtype"].get<std::string>() == detail::fixture_dtype<T>(),
          ErrorKind::CorruptHeader, "fixture dtype mismatch: " + stem + ".json");
  std::array<int, 3> dims = j["dims"].get<std::array<int, 3>>();
  if (spacing) {
    *spacing = j.contains("spacing") ? j["spacing"].get<std::array<double, 3>>()
                                     : std::array<double, 3>{1.0, 1.0, 1.0};
  }
  Grid3<T> vol(dims);
  std::ifstream is(stem + ".bin", std::ios::binary);
  require(is.good(), ErrorKind::IoError, "cannot open: " + stem + ".bin");
  is.read(reinterpret_cast<char*>(vol.data.data()),
          static_cast<std::streamsize>(vol.size() * sizeof(T)));
  require(is.gcount() == static_cast<std::streamsize>(vol.size() * sizeof(T)),
          ErrorKind::IoError, "short read: " + stem + ".bin");
  return vol;
}

/// Patch stores hold the network-ready training samples for one view:
/// manifest.json (shape, per-record metadata, split assignment) plus data.bin
/// with fixed-size records of C*P*P float32 image followed by P*P uint8 mask.
/// Masks keep the original label values.

struct PatchMeta {
  std::string case_id;
  View view = View::Axial;
  int slice_index = 0;
  std::string split;  // "train" or "val"
};

class PatchStoreWriter {
 public:
  PatchStoreWriter(const std::string& dir, int patch_size, int channels)
      : dir_(dir), patch_size_(patch_size), channels_(channels),
        data_(dir + "/data.bin", std::ios::binary) {
    require(data_.good(), ErrorKind::IoError,
            "cannot open for writing: " + dir + "/data.bin");
  }

  void add(const Tensor<float>& image, const Tensor<std::uint8_t>& mask,
           const PatchMeta& meta) {
    require(image.rank() == 3 && image.dim(0) == channels_ &&
                image.dim(1) == patch_size_ && image.dim(2) == patch_size_,
            ErrorKind::ShapeMismatch, "patch image has wrong shape");
    require(mask.rank() == 2 && mask.dim(0) == patch_size_ && mask.dim(1) == patch_size_,
            ErrorKind::ShapeMismatch, "patch mask has wrong shape");
    data_.write(reinterpret_cast<const char*>(image.data()),
                static_cast<std::streamsize>(image.size() * sizeof(float)));
    data_.write(reinterpret_cast<const char*>(mask.data()),
                static_cast<std::streamsize>(mask.size()));
    require(data_.good(), ErrorKind::IoError, "write failed: " + dir_ + "/data.bin");
    meta_.push_back(meta);
  }

  std::size_t count() const { return meta_.size(); }
  std::vector<PatchMeta>& meta() { return meta_; }

  /// Writes the manifest; call once after all patches are added.
  void finalize() {
    data_.flush();
    require(data_.good(), ErrorKind::IoError, "write failed: " + dir_ + "/data.bin");
    nlohmann::json j;
    j["patch_size"] = patch_size_;
    j["channels"] = channels_;
    j["count"] = meta_.size();
    nlohmann::json records = nlohmann::json::array();
    for (const auto& m : meta_) {
      records.push_back({{"case_id", m.case_id},
                         {"view", to_string(m.view)},
                         {"slice", m.slice_index},
                         {"split", m.split}});
    }
    j["records"] = std::move(records);
    detail::write_json_file(dir_ + "/manifest.json", j);
  }

 private:
  std::string dir_;
  int patch_size_, channels_;
  std::ofstream data_;
  std::vector<PatchMeta> meta_;
};

class PatchStore {
 public:
  explicit PatchStore(const std::string& dir) : dir_(dir) {
    const nlohmann::json j = detail::read_json_file(dir + "/manifest.json");
    patch_size_ = j.at("patch_size").get<int>();
    channels_ = j.at("channels").get<int>();
    const auto& records = j.at("records");
    require(records.size() == j.at("count").get<std::size_t>(), ErrorKind::CorruptHeader,
            "patch manifest count disagrees with records: " + dir);
    for (const auto& r : records) {
      PatchMeta m;
      m.case_id = r.at("case_id").get<std::string>();
      m.view = view_from_string(r.at("view").get<std::string>());
      m.slice_index = r.at("slice").get<int>();
      m.split = r.at("split").get<std::string>();
      meta_.push_back(std::move(m));
    }
    data_.open(dir + "/data.bin", std::ios::binary);
    require(data_.good(), ErrorKind::IoError, "cannot open: " + dir + "/data.bin");
    data_.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(data_.tellg());
    require(bytes == meta_.size() * record_bytes(), ErrorKind::CorruptHeader,
            "patch data size disagrees with manifest: " + dir);
  }

  std::size_t size() const { return meta_.size(); }
  int patch_size() const { return patch_size_; }
  int channels() const { return channels_; }
  const PatchMeta& meta(std::size_t i) const { return meta_[i]; }

  void read(std::size_t i, Tensor<float>& image, Tensor<std::uint8_t>& mask) {
    require(i < meta_.size(), ErrorKind::IndexOutOfRange, "patch index out of range");
    image = Tensor<float>({channels_, patch_size_, patch_size_});
    mask = Tensor<std::uint8_t>({patch_size_, patch_size_});
    data_.seekg(static_cast<std::streamoff>(i * record_bytes()));
    data_.read(reinterpret_cast<char*>(image.data()),
               static_cast<std::streamsize>(image.size() * sizeof(float)));
    data_.read(reinterpret_cast<char*>(mask.data()),
               static_cast<std::streamsize>(mask.size()));
    require(data_.good(), ErrorKind::IoError, "short read: " + dir_ + "/data.bin");
  }

 private:
  std::size_t record_bytes() const {
    const std::size_t pp = static_cast<std::size_t>(patch_size_) * patch_size_;
    return pp * static_cast<std::size_t>(channels_) * sizeof(float) + pp;
  }

  std::string dir_;
  int patch_size_ = 0, channels_ = 0;
  std::ifstream data_;
  std::vector<PatchMeta> meta_;
};

}  // namespace resunet
