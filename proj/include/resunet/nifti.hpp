#pragma once

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "resunet/errors.hpp"
#include "resunet/volume.hpp"

namespace resunet {

/// NIfTI-1 single-file volumes (.nii / .nii.gz). Payload order is x fastest,
/// matching Grid3's (D,H,W) row-major layout, so dim[1]=W, dim[2]=H, dim[3]=D
/// and the voxel block copies straight through. Big-endian files are detected
/// via dim[0] and byte-swapped on read.

#pragma pack(push, 1)
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348);

namespace nifti_codes {
inline constexpr std::int16_t kUint8 = 2;
inline constexpr std::int16_t kInt16 = 4;
inline constexpr std::int16_t kInt32 = 8;
inline constexpr std::int16_t kFloat32 = 16;
inline constexpr std::int16_t kFloat64 = 64;
inline constexpr std::int16_t kInt8 = 256;
inline constexpr std::int16_t kUint16 = 512;
inline constexpr std::int16_t kUint32 = 768;
}  // namespace nifti_codes

struct NiftiInfo {
  std::array<int, 3> dims{};               // (D,H,W)
  std::array<float, 3> spacing{1, 1, 1};   // (D,H,W) order
  std::int16_t datatype = 0;
  Nifti1Header raw{};                      // header as stored (post-swap)
};

namespace detail {

inline void swap_bytes(void* p, int width) {
  auto* b = static_cast<unsigned char*>(p);
  for (int i = 0, j = width - 1; i < j; ++i, --j) std::swap(b[i], b[j]);
}

inline void swap_header(Nifti1Header& h) {
  swap_bytes(&h.sizeof_hdr, 4);
  swap_bytes(&h.extents, 4);
  swap_bytes(&h.session_error, 2);
  for (auto& d : h.dim) swap_bytes(&d, 2);
  swap_bytes(&h.intent_p1, 4);
  swap_bytes(&h.intent_p2, 4);
  swap_bytes(&h.intent_p3, 4);
  swap_bytes(&h.intent_code, 2);
  swap_bytes(&h.datatype, 2);
  swap_bytes(&h.bitpix, 2);
  swap_bytes(&h.slice_start, 2);
  for (auto& d : h.pixdim) swap_bytes(&d, 4);
  swap_bytes(&h.vox_offset, 4);
  swap_bytes(&h.scl_slope, 4);
  swap_bytes(&h.scl_inter, 4);
  swap_bytes(&h.slice_end, 2);
  swap_bytes(&h.cal_max, 4);
  swap_bytes(&h.cal_min, 4);
  swap_bytes(&h.slice_duration, 4);
  swap_bytes(&h.toffset, 4);
  swap_bytes(&h.glmax, 4);
  swap_bytes(&h.glmin, 4);
  swap_bytes(&h.qform_code, 2);
  swap_bytes(&h.sform_code, 2);
  swap_bytes(&h.quatern_b, 4);
  swap_bytes(&h.quatern_c, 4);
  swap_bytes(&h.quatern_d, 4);
  swap_bytes(&h.qoffset_x, 4);
  swap_bytes(&h.qoffset_y, 4);
  swap_bytes(&h.qoffset_z, 4);
  for (auto& v : h.srow_x) swap_bytes(&v, 4);
  for (auto& v : h.srow_y) swap_bytes(&v, 4);
  for (auto& v : h.srow_z) swap_bytes(&v, 4);
}

class GzFile {
 public:
  GzFile(const std::string& path, const char* mode) : f_(gzopen(path.c_str(), mode)) {
    require(f_ != nullptr, ErrorKind::IoError, "cannot open file: " + path);
  }
  ~GzFile() {
    if (f_) gzclose(f_);
  }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;

  void read(void* dst, std::size_t n, const std::string& path) {
    auto* p = static_cast<unsigned char*>(dst);
    while (n > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 28));
      const int got = gzread(f_, p, chunk);
      require(got > 0, ErrorKind::IoError, "short read: " + path);
      p += got;
      n -= static_cast<std::size_t>(got);
    }
  }

  void skip(std::size_t n, const std::string& path) {
    std::array<unsigned char, 4096> junk;
    while (n > 0) {
      const std::size_t chunk = std::min(n, junk.size());
      read(junk.data(), chunk, path);
      n -= chunk;
    }
  }

  void write(const void* src, std::size_t n, const std::string& path) {
    auto* p = static_cast<const unsigned char*>(src);
    while (n > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 28));
      const int put = gzwrite(f_, p, chunk);
      require(put > 0, ErrorKind::IoError, "write failed: " + path);
      p += put;
      n -= static_cast<std::size_t>(put);
    }
  }

 private:
  gzFile f_;
};

inline int element_width(std::int16_t dtype) {
  switch (dtype) {
    case nifti_codes::kUint8:
    case nifti_codes::kInt8:
      return 1;
    case nifti_codes::kInt16:
    case nifti_codes::kUint16:
      return 2;
    case nifti_codes::kInt32:
    case nifti_codes::kUint32:
    case nifti_codes::kFloat32:
      return 4;
    case nifti_codes::kFloat64:
      return 8;
    default:
      return 0;
  }
}

inline double decode_element(const unsigned char* p, std::int16_t dtype, bool swapped) {
  unsigned char tmp[8];
  const int w = element_width(dtype);
  std::memcpy(tmp, p, static_cast<std::size_t>(w));
  if (swapped) swap_bytes(tmp, w);
  switch (dtype) {
    case nifti_codes::kUint8:
      return static_cast<double>(*tmp);
    case nifti_codes::kInt8:
      return static_cast<double>(*reinterpret_cast<std::int8_t*>(tmp));
    case nifti_codes::kInt16: {
      std::int16_t v;
      std::memcpy(&v, tmp, 2);
      return v;
    }
    case nifti_codes::kUint16: {
      std::uint16_t v;
      std::memcpy(&v, tmp, 2);
      return v;
    }
    case nifti_codes::kInt32: {
      std::int32_t v;
      std::memcpy(&v, tmp, 4);
      return v;
    }
    case nifti_codes::kUint32: {
      std::uint32_t v;
      std::memcpy(&v, tmp, 4);
      return v;
    }
    case nifti_codes::kFloat32: {
      float v;
      std::memcpy(&v, tmp, 4);
      return v;
    }
    case nifti_codes::kFloat64: {
      double v;
      std::memcpy(&v, tmp, 8);
      return v;
    }
    default:
      return 0.0;
  }
}

struct LoadedPayload {
  NiftiInfo info;
  std::vector<double> values;  // scaled, (D,H,W) row-major
};

inline LoadedPayload load_payload(const std::string& path) {
  GzFile f(path, "rb");
  Nifti1Header h;
  f.read(&h, sizeof h, path);
  bool swapped = false;
  if (h.dim[0] < 1 || h.dim[0] > 7) {
    swap_header(h);
    swapped = true;
  }
  require(h.sizeof_hdr == 348, ErrorKind::CorruptHeader,
          "bad sizeof_hdr in " + path);
  require(h.dim[0] >= 1 && h.dim[0] <= 7, ErrorKind::CorruptHeader,
          "bad dim[0] in " + path);
  require(std::memcmp(h.magic, "n+1", 3) == 0, ErrorKind::CorruptHeader,
          "not a single-file NIfTI-1 image: " + path);
  require(h.dim[0] >= 3, ErrorKind::CorruptHeader, "expected a 3D volume: " + path);
  for (int d = 4; d <= h.dim[0]; ++d)
    require(h.dim[d] <= 1, ErrorKind::CorruptHeader,
            "expected a 3D volume, got extra dimensions: " + path);
  const int W = h.dim[1], H = h.dim[2], D = h.dim[3];
  require(W > 0 && H > 0 && D > 0, ErrorKind::CorruptHeader, "bad dims in " + path);
  const int width = element_width(h.datatype);
  require(width > 0, ErrorKind::CorruptHeader,
          "unsupported datatype " + std::to_string(h.datatype) + " in " + path);

  const std::size_t vox_offset = static_cast<std::size_t>(h.vox_offset);
  require(h.vox_offset >= 348.0f, ErrorKind::CorruptHeader, "bad vox_offset in " + path);
  f.skip(vox_offset - sizeof h, path);

  const std::size_t n = static_cast<std::size_t>(D) * H * W;
  std::vector<unsigned char> raw(n * static_cast<std::size_t>(width));
  f.read(raw.data(), raw.size(), path);

  const bool has_scale = h.scl_slope != 0.0f;
  const double slope = has_scale ? static_cast<double>(h.scl_slope) : 1.0;
  const double inter = has_scale ? static_cast<double>(h.scl_inter) : 0.0;

  LoadedPayload out;
  out.info.dims = {D, H, W};
  out.info.spacing = {h.pixdim[3], h.pixdim[2], h.pixdim[1]};
  for (auto& s : out.info.spacing)
    if (!(s > 0.0f)) s = 1.0f;
  out.info.datatype = h.datatype;
  out.info.raw = h;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] =
        decode_element(raw.data() + i * static_cast<std::size_t>(width), h.datatype, swapped) *
            slope +
        inter;
  return out;
}

inline Nifti1Header fresh_header(const std::array<int, 3>& dims,
                                 const std::array<float, 3>& spacing,
                                 std::int16_t datatype, std::int16_t bitpix) {
  Nifti1Header h;
  std::memset(&h, 0, sizeof h);
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  h.dim[1] = static_cast<std::int16_t>(dims[2]);
  h.dim[2] = static_cast<std::int16_t>(dims[1]);
  h.dim[3] = static_cast<std::int16_t>(dims[0]);
  for (int d = 4; d < 8; ++d) h.dim[d] = 1;
  h.datatype = datatype;
  h.bitpix = bitpix;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = spacing[2];
  h.pixdim[2] = spacing[1];
  h.pixdim[3] = spacing[0];
  for (int d = 4; d < 8; ++d) h.pixdim[d] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // millimetres
  h.sform_code = 1;
  h.srow_x[0] = spacing[2];
  h.srow_y[1] = spacing[1];
  h.srow_z[2] = spacing[0];
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

inline void write_raw(const std::string& path, const Nifti1Header& h, const void* payload,
                      std::size_t bytes) {
  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  GzFile f(path, gz ? "wb" : "wbT");
  f.write(&h, sizeof h, path);
  const char extender[4] = {0, 0, 0, 0};
  f.write(extender, 4, path);
  f.write(payload, bytes, path);
}

}  // namespace detail

inline ScalarVolume read_nifti_volume(const std::string& path, NiftiInfo* info = nullptr) {
  auto loaded = detail::load_payload(path);
  ScalarVolume vol(loaded.info.dims);
  for (std::size_t i = 0; i < loaded.values.size(); ++i)
    vol.data[i] = static_cast<float>(loaded.values[i]);
  if (info) *info = loaded.info;
  return vol;
}

/// Reads a label volume. Values must be integral to within 1e-3 after scaling
/// and fit in uint8; anything else is rejected rather than rounded silently.
inline LabelVolume read_nifti_labels(const std::string& path, NiftiInfo* info = nullptr) {
  auto loaded = detail::load_payload(path);
  LabelVolume vol(loaded.info.dims);
  for (std::size_t i = 0; i < loaded.values.size(); ++i) {
    const double v = loaded.values[i];
    const double r = std::round(v);
    require(std::abs(v - r) <= 1e-3 && r >= 0.0 && r <= 255.0, ErrorKind::InvalidLabel,
            "non-integral label value " + std::to_string(v) + " in " + path);
    vol.data[i] = static_cast<std::uint8_t>(r);
  }
  if (info) *info = loaded.info;
  return vol;
}

inline void write_nifti_volume(const std::string& path, const ScalarVolume& vol,
                               const std::array<float, 3>& spacing = {1, 1, 1}) {
  const Nifti1Header h =
      detail::fresh_header(vol.dims, spacing, nifti_codes::kFloat32, 32);
  detail::write_raw(path, h, vol.data.data(), vol.size() * sizeof(float));
}

/// Writes labels as uint8. When a reference header is given its geometry
/// fields (orientation, spacing, offsets) are carried over verbatim and only
/// the payload description is rewritten.
inline void write_nifti_labels(const std::string& path, const LabelVolume& vol,
                               const NiftiInfo* reference = nullptr,
                               const std::array<float, 3>& spacing = {1, 1, 1}) {
  Nifti1Header h;
  if (reference) {
    h = reference->raw;
    require(h.dim[1] == vol.dims[2] && h.dim[2] == vol.dims[1] && h.dim[3] == vol.dims[0],
            ErrorKind::ShapeMismatch, "reference header dims disagree with label volume");
    h.dim[0] = 3;
    for (int d = 4; d < 8; ++d) h.dim[d] = 1;
    h.datatype = nifti_codes::kUint8;
    h.bitpix = 8;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.vox_offset = 352.0f;
    h.cal_max = 0.0f;
    h.cal_min = 0.0f;
    h.glmax = 0;
    h.glmin = 0;
    std::memcpy(h.magic, "n+1", 4);
  } else {
    h = detail::fresh_header(vol.dims, spacing, nifti_codes::kUint8, 8);
  }
  detail::write_raw(path, h, vol.data.data(), vol.size());
}

}  // namespace resunet
