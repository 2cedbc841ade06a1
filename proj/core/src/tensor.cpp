#include "rednet/tensor.hpp"

#include <cmath>
#include <limits>

#include "rednet/label_map.hpp"

namespace rednet {

bool Shape::valid() const noexcept {
  if (n < 1 || c < 1 || h < 1 || w < 1) return false;
  int64_t total = 1;
  for (int64_t d : {n, c, h, w}) {
    if (__builtin_mul_overflow(total, d, &total)) return false;
  }
  return true;
}

int64_t Shape::numel() const {
  if (n < 1 || c < 1 || h < 1 || w < 1) {
    throw ShapeError("shape " + str() + " has a dimension < 1");
  }
  int64_t total = 1;
  for (int64_t d : {n, c, h, w}) {
    if (__builtin_mul_overflow(total, d, &total)) {
      throw ShapeError("shape " + str() + " overflows the index type");
    }
  }
  return total;
}

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

void require_same_shape(const Shape& a, const Shape& b, const std::string& what) {
  if (!(a == b)) {
    throw ShapeError(what + ": shape mismatch " + a.str() + " vs " + b.str());
  }
}

template <typename T>
Tensor<T> elementwise_add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "elementwise_add");
  Tensor<T> out(a.shape());
  const T* pa = a.ptr();
  const T* pb = b.ptr();
  T* po = out.ptr();
  const int64_t count = a.numel();
  for (int64_t i = 0; i < count; ++i) po[i] = pa[i] + pb[i];
  return out;
}

template <typename T>
Tensor<T> elementwise_sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "elementwise_sub");
  Tensor<T> out(a.shape());
  const int64_t count = a.numel();
  for (int64_t i = 0; i < count; ++i) out[i] = a[i] - b[i];
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  const int64_t count = a.numel();
  for (int64_t i = 0; i < count; ++i) out[i] = s * a[i];
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  require_same_shape(dst.shape(), src.shape(), "add_inplace");
  T* pd = dst.ptr();
  const T* ps = src.ptr();
  const int64_t count = dst.numel();
  for (int64_t i = 0; i < count; ++i) pd[i] += ps[i];
}

template <typename T>
void axpy_inplace(Tensor<T>& dst, T s, const Tensor<T>& src) {
  require_same_shape(dst.shape(), src.shape(), "axpy_inplace");
  T* pd = dst.ptr();
  const T* ps = src.ptr();
  const int64_t count = dst.numel();
  for (int64_t i = 0; i < count; ++i) pd[i] += s * ps[i];
}

template <typename T>
double reduce_sum(const Tensor<T>& a) {
  double sum = 0.0;
  for (T v : a.data()) sum += static_cast<double>(v);
  return sum;
}

template <typename T>
double reduce_mean(const Tensor<T>& a) {
  if (a.empty()) return 0.0;
  return reduce_sum(a) / static_cast<double>(a.numel());
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double worst = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return worst;
}

#define REDNET_INSTANTIATE(T)                                                     \
  template Tensor<T> elementwise_add(const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> elementwise_sub(const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> scale(const Tensor<T>&, T);                                 \
  template void add_inplace(Tensor<T>&, const Tensor<T>&);                       \
  template void axpy_inplace(Tensor<T>&, T, const Tensor<T>&);                   \
  template double reduce_sum(const Tensor<T>&);                                  \
  template double reduce_mean(const Tensor<T>&);                                 \
  template double max_abs_diff(const Tensor<T>&, const Tensor<T>&);

REDNET_INSTANTIATE(float)
REDNET_INSTANTIATE(double)
#undef REDNET_INSTANTIATE

LabelMap stack_labels(std::span<const LabelMap> maps) {
  if (maps.empty()) throw ShapeError("stack_labels: no label maps");
  LabelMap out;
  out.h = maps.front().h;
  out.w = maps.front().w;
  for (const auto& m : maps) {
    if (m.h != out.h || m.w != out.w) {
      throw ShapeError("stack_labels: spatial mismatch " + maps.front().shape().str() + " vs " +
                       m.shape().str());
    }
    out.n += m.n;
    out.data.insert(out.data.end(), m.data.begin(), m.data.end());
  }
  return out;
}

int32_t max_label(const LabelMap& labels) {
  int32_t best = 0;
  for (int32_t v : labels.data) best = std::max(best, v);
  return best;
}

}  // namespace rednet
