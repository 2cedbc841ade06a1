#include "rednet/init.hpp"

#include <cmath>

namespace rednet {

double xavier_bound(const Shape& shape) {
  const double area = static_cast<double>(shape.h) * static_cast<double>(shape.w);
  const double fan_in = static_cast<double>(shape.c) * area;
  const double fan_out = static_cast<double>(shape.n) * area;
  if (fan_in + fan_out <= 0) throw ShapeError("xavier_init: empty weight shape " + shape.str());
  return std::sqrt(6.0 / (fan_in + fan_out));
}

template <typename T>
Tensor<T> xavier_init(const Shape& shape, std::mt19937_64& rng) {
  const double b = xavier_bound(shape);
  // Drawn in double so float and double networks share one initialization.
  std::uniform_real_distribution<double> dist(-b, b);
  Tensor<T> w(shape);
  for (auto& v : w.data()) v = static_cast<T>(dist(rng));
  return w;
}

template Tensor<float> xavier_init(const Shape&, std::mt19937_64&);
template Tensor<double> xavier_init(const Shape&, std::mt19937_64&);

}  // namespace rednet
