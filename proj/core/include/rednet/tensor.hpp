#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rednet/error.hpp"

namespace rednet {

/// Extents of a rank-4 tensor in batch/channel/height/width order.
struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  /// Element count. Throws ShapeError when a dimension is < 1 or the
  /// product overflows int64_t.
  int64_t numel() const;
  int64_t plane() const { return h * w; }
  std::pair<int64_t, int64_t> spatial() const { return {h, w}; }
  bool valid() const noexcept;
  std::string str() const;

  bool operator==(const Shape&) const = default;
};

/// Dense NCHW tensor owning a contiguous row-major buffer.
///
/// Element (n, c, h, w) lives at ((n*C + c)*H + h)*W + w. A default
/// constructed tensor is empty (no storage, shape all zero) and is only
/// meaningful as an "unset" marker, e.g. for layer caches.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != shape_.numel()) {
      throw ShapeError("tensor buffer of " + std::to_string(data_.size()) +
                       " elements does not match shape " + shape_.str());
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(shape, T(0)); }
  static Tensor ones(Shape shape) { return Tensor(shape, T(1)); }
  static Tensor full(Shape shape, T value) { return Tensor(shape, value); }

  const Shape& shape() const noexcept { return shape_; }
  int64_t numel() const noexcept { return static_cast<int64_t>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }

  int64_t index(int64_t n, int64_t c, int64_t h, int64_t w) const noexcept {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& at(int64_t n, int64_t c, int64_t h, int64_t w) noexcept { return data_[index(n, c, h, w)]; }
  const T& at(int64_t n, int64_t c, int64_t h, int64_t w) const noexcept {
    return data_[index(n, c, h, w)];
  }
  T& operator[](int64_t i) noexcept { return data_[i]; }
  const T& operator[](int64_t i) const noexcept { return data_[i]; }

  /// Pointer to the H*W plane of (n, c).
  T* plane(int64_t n, int64_t c) noexcept { return data_.data() + index(n, c, 0, 0); }
  const T* plane(int64_t n, int64_t c) const noexcept { return data_.data() + index(n, c, 0, 0); }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  /// Same buffer reinterpreted under a shape with equal element count.
  Tensor reshaped(Shape shape) const& { return Tensor(shape, data_); }
  Tensor reshaped(Shape shape) && { return Tensor(shape, std::move(data_)); }

 private:
  Shape shape_{};
  std::vector<T> data_;
};

/// Throws ShapeError naming both shapes when they differ. `what` names
/// the operation or junction.
void require_same_shape(const Shape& a, const Shape& b, const std::string& what);

template <typename T>
Tensor<T> elementwise_add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> elementwise_sub(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s);

/// In place: dst[i] += src[i].
template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src);

/// In place: dst[i] += s * src[i].
template <typename T>
void axpy_inplace(Tensor<T>& dst, T s, const Tensor<T>& src);

/// Left-to-right sum accumulated in double precision.
template <typename T>
double reduce_sum(const Tensor<T>& a);

template <typename T>
double reduce_mean(const Tensor<T>& a);

/// Largest |a[i] - b[i]|; shapes must match.
template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace rednet
