#pragma once

#include <random>

#include "rednet/tensor.hpp"

namespace rednet {

/// Uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)), where the fans are
/// shape.c * kh * kw and shape.n * kh * kw. Symmetric in the two leading
/// axes, so it serves both [out,in,kh,kw] and [in,out,kh,kw] layouts.
template <typename T>
Tensor<T> xavier_init(const Shape& shape, std::mt19937_64& rng);

double xavier_bound(const Shape& shape);

}  // namespace rednet
