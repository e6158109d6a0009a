#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "resunet/errors.hpp"

namespace resunet {

/// Dense row-major tensor. Rank is dynamic but in practice 1 (parameters),
/// 3 (C,H,W) or 4 (B,C,H,W).
template <class T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (int d : shape_) {
      require(d >= 0, ErrorKind::ShapeError, "negative tensor dimension");
      n *= static_cast<std::size_t>(d);
    }
    data_.assign(n, T{});
  }

  Tensor(std::vector<int> shape, T fill) : Tensor(std::move(shape)) {
    for (auto& v : data_) v = fill;
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // (B,C,H,W) accessors for the common rank-4 case.
  T& at(int b, int c, int h, int w) {
    return data_[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(int b, int c, int h, int w) const {
    return data_[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(T v) {
    for (auto& x : data_) x = v;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

}  // namespace resunet
