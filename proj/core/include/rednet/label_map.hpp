#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rednet/tensor.hpp"

namespace rednet {

/// Label value excluded from losses, class weights and metrics.
inline constexpr int32_t kIgnoreLabel = 0;

/// Integer class map [N_b, H, W]. 0 marks unlabeled pixels, 1..N_c are classes.
struct LabelMap {
  int64_t n = 0;
  int64_t h = 0;
  int64_t w = 0;
  std::vector<int32_t> data;

  LabelMap() = default;
  LabelMap(int64_t batch, int64_t height, int64_t width, int32_t fill = kIgnoreLabel)
      : n(batch), h(height), w(width), data(Shape{batch, 1, height, width}.numel(), fill) {}

  int64_t numel() const noexcept { return static_cast<int64_t>(data.size()); }
  int64_t plane() const noexcept { return h * w; }
  Shape shape() const noexcept { return {n, 1, h, w}; }
  bool empty() const noexcept { return data.empty(); }

  int32_t& at(int64_t b, int64_t y, int64_t x) noexcept { return data[(b * h + y) * w + x]; }
  int32_t at(int64_t b, int64_t y, int64_t x) const noexcept { return data[(b * h + y) * w + x]; }

  std::span<int32_t> image(int64_t b) noexcept { return {data.data() + b * plane(), static_cast<size_t>(plane())}; }
  std::span<const int32_t> image(int64_t b) const noexcept {
    return {data.data() + b * plane(), static_cast<size_t>(plane())};
  }

  bool operator==(const LabelMap&) const = default;
};

/// Concatenates single-image maps along the batch axis.
LabelMap stack_labels(std::span<const LabelMap> maps);

/// Largest label value present, or 0 for an empty map.
int32_t max_label(const LabelMap& labels);

}  // namespace rednet
