#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rednet/layers.hpp"

namespace rednet {

struct SgdConfig {
  double base_lr = 0.002;
  double momentum = 0.9;
  double weight_decay = 0.0004;
  double lr_decay = 0.8;
  int64_t lr_decay_every = 100;
  /// Apply weight decay to batch-norm gamma/beta as well as conv weights.
  bool decay_bn = true;
};

/// base * decay^floor(epoch / every), epochs counted from 0.
double lr_at_epoch(double base, int64_t epoch, double decay = 0.8, int64_t every = 100);

template <typename T>
struct OptimizerState {
  std::vector<std::string> names;
  std::vector<Tensor<T>> velocity;
  int64_t steps = 0;
};

/// One parameter: g' = g + decay * theta; v = momentum * v + g'; theta -= lr * v.
template <typename T>
void sgd_update(Tensor<T>& theta, const Tensor<T>& grad, Tensor<T>& velocity, double lr, double momentum,
                double decay);

/// Updates every parameter of `params` from its accumulated gradient.
/// Velocities are created (zero) on the first step and must keep matching
/// names and shapes afterwards. Biases are never decayed; BN running
/// statistics are buffers and are never touched.
template <typename T>
void sgd_momentum_step(ParamSet<T>& params, OptimizerState<T>& state, const SgdConfig& cfg, double lr);

}  // namespace rednet
