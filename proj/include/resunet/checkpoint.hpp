#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "resunet/errors.hpp"
#include "resunet/network.hpp"
#include "resunet/version.hpp"

namespace resunet {

/// Checkpoint file layout (little-endian):
///   magic "RSUC", u32 format version,
///   i32 x4 network config (in_channels, n_classes, base_filters, depth),
///   view tag string (u32 length + bytes),
///   u32 tensor count, then per tensor: name string, u32 rank, i32 dims,
///   float32 payload. Tensors appear in the network's canonical parameter
///   order and include BN running statistics, so save/load round-trips are
///   bit-identical for float networks.

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  require(is.good(), ErrorKind::CorruptHeader, "checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_i32(std::ostream& os, std::int32_t v) {
  put_u32(os, static_cast<std::uint32_t>(v));
}

inline std::int32_t get_i32(std::istream& is) {
  return static_cast<std::int32_t>(get_u32(is));
}

inline void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
  const std::uint32_t n = get_u32(is);
  require(n <= 4096, ErrorKind::CorruptHeader, "checkpoint string field too long");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  require(is.good(), ErrorKind::CorruptHeader, "checkpoint truncated");
  return s;
}

inline void put_f32_array(std::ostream& os, const float* p, std::size_t n) {
  static_assert(sizeof(float) == 4);
  std::uint32_t u;
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(&u, p + i, 4);
    put_u32(os, u);
  }
}

inline void get_f32_array(std::istream& is, float* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = get_u32(is);
    std::memcpy(p + i, &u, 4);
  }
}

}  // namespace detail

struct CheckpointMeta {
  NetworkConfig config;
  std::string view_tag;
};

template <class T>
void save_checkpoint(const std::string& path, ResUNet<T>& net,
                     const std::string& view_tag) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorKind::IoError, "cannot open checkpoint for writing: " + path);
  os.write("RSUC", 4);
  detail::put_u32(os, RESUNET_CHECKPOINT_VERSION);
  const NetworkConfig& c = net.config();
  detail::put_i32(os, c.in_channels);
  detail::put_i32(os, c.n_classes);
  detail::put_i32(os, c.base_filters);
  detail::put_i32(os, c.depth);
  detail::put_string(os, view_tag);
  auto params = net.parameters();
  detail::put_u32(os, static_cast<std::uint32_t>(params.size()));
  std::vector<float> buf;
  for (auto& p : params) {
    detail::put_string(os, p.name);
    detail::put_u32(os, static_cast<std::uint32_t>(p.value->rank()));
    for (int d = 0; d < p.value->rank(); ++d) detail::put_i32(os, p.value->dim(d));
    buf.resize(p.value->size());
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] = static_cast<float>((*p.value)[i]);
    detail::put_f32_array(os, buf.data(), buf.size());
  }
  require(os.good(), ErrorKind::IoError, "write failed: " + path);
}

/// Rebuilds the network from the stored config and fills every tensor.
template <class T>
CheckpointMeta load_checkpoint(const std::string& path, ResUNet<T>& net) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), ErrorKind::IoError, "cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  require(is.good() && std::memcmp(magic, "RSUC", 4) == 0, ErrorKind::CorruptHeader,
          "not a checkpoint file: " + path);
  const std::uint32_t version = detail::get_u32(is);
  require(version == RESUNET_CHECKPOINT_VERSION, ErrorKind::CorruptHeader,
          "unsupported checkpoint version");
  CheckpointMeta meta;
  meta.config.in_channels = detail::get_i32(is);
  meta.config.n_classes = detail::get_i32(is);
  meta.config.base_filters = detail::get_i32(is);
  meta.config.depth = detail::get_i32(is);
  meta.view_tag = detail::get_string(is);
  net.build(meta.config);
  auto params = net.parameters();
  const std::uint32_t count = detail::get_u32(is);
  require(count == params.size(), ErrorKind::CorruptHeader,
          "checkpoint tensor count disagrees with architecture");
  std::vector<float> buf;
  for (auto& p : params) {
    const std::string name = detail::get_string(is);
    require(name == p.name, ErrorKind::CorruptHeader,
            "unexpected checkpoint tensor: " + name);
    const std::uint32_t rank = detail::get_u32(is);
    require(static_cast<int>(rank) == p.value->rank(), ErrorKind::CorruptHeader,
            "checkpoint tensor rank mismatch: " + name);
    for (int d = 0; d < p.value->rank(); ++d)
      require(detail::get_i32(is) == p.value->dim(d), ErrorKind::CorruptHeader,
              "checkpoint tensor shape mismatch: " + name);
    buf.resize(p.value->size());
    detail::get_f32_array(is, buf.data(), buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i)
      (*p.value)[i] = static_cast<T>(buf[i]);
  }
  require(is.good(), ErrorKind::CorruptHeader, "checkpoint truncated");
  return meta;
}

/// Header fields only; the tensor payload is not read.
inline CheckpointMeta peek_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), ErrorKind::IoError, "cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  require(is.good() && std::memcmp(magic, "RSUC", 4) == 0, ErrorKind::CorruptHeader,
          "not a checkpoint file: " + path);
  const std::uint32_t version = detail::get_u32(is);
  require(version == RESUNET_CHECKPOINT_VERSION, ErrorKind::CorruptHeader,
          "unsupported checkpoint version");
  CheckpointMeta meta;
  meta.config.in_channels = detail::get_i32(is);
  meta.config.n_classes = detail::get_i32(is);
  meta.config.base_filters = detail::get_i32(is);
  meta.config.depth = detail::get_i32(is);
  meta.view_tag = detail::get_string(is);
  return meta;
}

}  // namespace resunet
