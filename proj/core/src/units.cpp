#include "rednet/units.hpp"

#include <stdexcept>

namespace rednet {

UnitSpec UnitSpec::make(UnitKind kind, int in_channels, int out_channels, SpatialMode spatial) {
  UnitSpec s;
  s.kind = kind;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.spatial = spatial;
  const bool resizes = spatial != SpatialMode::keep || in_channels != out_channels;
  s.shortcut = resizes || kind == UnitKind::upsample ? ShortcutKind::projection : ShortcutKind::identity;
  return s;
}

void UnitSpec::validate() const {
  if (in_channels < 1 || out_channels < 1) throw ConfigError("unit " + str() + ": channel counts must be >= 1");
  if (shortcut == ShortcutKind::identity && (in_channels != out_channels || spatial != SpatialMode::keep)) {
    throw ConfigError("unit " + str() + ": identity shortcut needs m == n and keep");
  }
  if (spatial == SpatialMode::up2 && kind != UnitKind::upsample) {
    throw ConfigError("unit " + str() + ": up2 requires an upsample unit");
  }
  if (kind == UnitKind::upsample && spatial != SpatialMode::up2) {
    throw ConfigError("unit " + str() + ": upsample units always double resolution");
  }
  if (kind == UnitKind::upsample && shortcut != ShortcutKind::projection) {
    throw ConfigError("unit " + str() + ": upsample units need a projection shortcut");
  }
  if (kind == UnitKind::bottleneck && (out_channels % 4 != 0)) {
    throw ConfigError("unit " + str() + ": bottleneck output channels must be divisible by 4");
  }
}

Shape UnitSpec::output_shape(const Shape& in) const {
  if (in.c != in_channels) {
    throw ShapeError("unit " + str() + ": input " + in.str() + " has wrong channel count");
  }
  switch (spatial) {
    case SpatialMode::keep:
      return {in.n, out_channels, in.h, in.w};
    case SpatialMode::down2:
      return {in.n, out_channels, (in.h - 1) / 2 + 1, (in.w - 1) / 2 + 1};
    case SpatialMode::up2:
      return {in.n, out_channels, in.h * 2, in.w * 2};
  }
  return in;
}

const char* to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::bottleneck: return "bottleneck";
    case UnitKind::basic: return "basic";
    case UnitKind::upsample: return "upsample";
  }
  return "?";
}

const char* to_string(SpatialMode mode) {
  switch (mode) {
    case SpatialMode::keep: return "keep";
    case SpatialMode::down2: return "down2";
    case SpatialMode::up2: return "up2";
  }
  return "?";
}

std::string UnitSpec::str() const {
  return std::string(to_string(kind)) + "(" + std::to_string(in_channels) + "->" + std::to_string(out_channels) +
         "," + to_string(spatial) + (shortcut == ShortcutKind::projection ? ",proj)" : ",id)");
}

template <typename T>
ResidualUnit<T>::ResidualUnit(const UnitSpec& spec) : spec_(spec) {
  spec.validate();
  const int m = spec.in_channels;
  const int n = spec.out_channels;
  const int stride = spec.spatial == SpatialMode::down2 ? 2 : 1;
  switch (spec.kind) {
    case UnitKind::bottleneck: {
      const int mid = n / 4;
      path_.emplace_back(ConvKind::conv, ConvParams::square(m, mid, 1), true);
      path_.emplace_back(ConvKind::conv, ConvParams::square(mid, mid, 3, stride, 1), true);
      path_.emplace_back(ConvKind::conv, ConvParams::square(mid, n, 1), false);
      break;
    }
    case UnitKind::basic:
      path_.emplace_back(ConvKind::conv, ConvParams::square(m, n, 3, stride, 1), true);
      path_.emplace_back(ConvKind::conv, ConvParams::square(n, n, 3, 1, 1), false);
      break;
    case UnitKind::upsample:
      path_.emplace_back(ConvKind::conv, ConvParams::square(m, m, 3, 1, 1), true);
      path_.emplace_back(ConvKind::transpose, ConvParams::square(m, n, 2, 2, 0), false);
      break;
  }
  if (spec.shortcut == ShortcutKind::projection) {
    if (spec.kind == UnitKind::upsample) {
      projection_.emplace(ConvKind::transpose, ConvParams::square(m, n, 2, 2, 0), false);
    } else {
      projection_.emplace(ConvKind::conv, ConvParams::square(m, n, 1, stride, 0), false);
    }
  }
}

template <typename T>
Tensor<T> ResidualUnit<T>::forward(const Tensor<T>& x, Mode mode) {
  Tensor<T> r = x;
  for (auto& layer : path_) r = layer.forward(r, mode);
  if (projection_) {
    add_inplace(r, projection_->forward(x, mode));
  } else {
    add_inplace(r, x);
  }
  auto y = relu_forward(r);
  if (mode == Mode::train) y_ = y;
  return y;
}

template <typename T>
Tensor<T> ResidualUnit<T>::backward(const Tensor<T>& grad_out) {
  if (y_.empty()) throw std::logic_error("unit " + spec_.str() + ": backward without cached forward");
  const Tensor<T> g = relu_backward(y_, grad_out);
  y_ = Tensor<T>();
  Tensor<T> gr = g;
  for (auto it = path_.rbegin(); it != path_.rend(); ++it) gr = it->backward(gr);
  if (projection_) {
    add_inplace(gr, projection_->backward(g));
  } else {
    add_inplace(gr, g);
  }
  return gr;
}

template <typename T>
void ResidualUnit<T>::collect(ParamSet<T>& set, const std::string& prefix) {
  for (size_t i = 0; i < path_.size(); ++i) path_[i].collect(set, prefix + ".path" + std::to_string(i));
  if (projection_) projection_->collect(set, prefix + ".shortcut");
}

template class ResidualUnit<float>;
template class ResidualUnit<double>;

}  // namespace rednet
