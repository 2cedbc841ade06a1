#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rednet/layers.hpp"

namespace rednet {

enum class UnitKind { bottleneck, basic, upsample };
enum class SpatialMode { keep, down2, up2 };
enum class ShortcutKind { identity, projection };

/// Shape contract of one residual unit: m input channels, n output channels.
struct UnitSpec {
  UnitKind kind = UnitKind::basic;
  int in_channels = 0;
  int out_channels = 0;
  SpatialMode spatial = SpatialMode::keep;
  ShortcutKind shortcut = ShortcutKind::identity;

  /// Uses a projection shortcut whenever channels or resolution change.
  static UnitSpec make(UnitKind kind, int in_channels, int out_channels, SpatialMode spatial);

  /// Throws ConfigError on an inconsistent combination.
  void validate() const;
  Shape output_shape(const Shape& in) const;
  std::string str() const;

  bool operator==(const UnitSpec&) const = default;
};

const char* to_string(UnitKind kind);
const char* to_string(SpatialMode mode);

/// Post-activation residual unit: ReLU(residual(x) + shortcut(x)).
///
/// bottleneck: 1x1 (n/4) -> 3x3 (n/4, stride 2 when down2) -> 1x1 (n)
/// basic:      3x3 (n, stride 2 when down2) -> 3x3 (n)
/// upsample:   3x3 (m) -> 2x2 transpose stride 2 (n)
/// Every convolution is followed by batch norm; all but the last one of the
/// residual path by ReLU. Projection shortcuts are 1x1 stride-matched
/// convolutions (2x2 stride-2 transposed for upsample units) plus batch norm.
template <typename T>
class ResidualUnit {
 public:
  ResidualUnit() = default;
  explicit ResidualUnit(const UnitSpec& spec);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect(ParamSet<T>& set, const std::string& prefix);

  const UnitSpec& spec() const { return spec_; }
  std::vector<ConvBnAct<T>>& residual_path() { return path_; }
  ConvBnAct<T>* projection() { return projection_ ? &*projection_ : nullptr; }

 private:
  UnitSpec spec_;
  std::vector<ConvBnAct<T>> path_;
  std::optional<ConvBnAct<T>> projection_;
  Tensor<T> y_;
};

}  // namespace rednet
