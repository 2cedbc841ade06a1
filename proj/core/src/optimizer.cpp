#include "rednet/optimizer.hpp"

#include <cmath>

#include "rednet/error.hpp"

namespace rednet {

double lr_at_epoch(double base, int64_t epoch, double decay, int64_t every) {
  if (epoch < 0) throw std::invalid_argument("lr_at_epoch: negative epoch");
  if (every < 1) throw std::invalid_argument("lr_at_epoch: decay period must be >= 1");
  return base * std::pow(decay, static_cast<double>(epoch / every));
}

template <typename T>
void sgd_update(Tensor<T>& theta, const Tensor<T>& grad, Tensor<T>& velocity, double lr, double momentum,
                double decay) {
  require_same_shape(theta.shape(), grad.shape(), "sgd_update (gradient)");
  require_same_shape(theta.shape(), velocity.shape(), "sgd_update (velocity)");
  T* th = theta.ptr();
  const T* g = grad.ptr();
  T* v = velocity.ptr();
  const T mu = static_cast<T>(momentum);
  const T lam = static_cast<T>(decay);
  const T rate = static_cast<T>(lr);
  for (int64_t i = 0; i < theta.numel(); ++i) {
    const T gd = g[i] + lam * th[i];
    v[i] = mu * v[i] + gd;
    th[i] -= rate * v[i];
  }
}

template <typename T>
void sgd_momentum_step(ParamSet<T>& params, OptimizerState<T>& state, const SgdConfig& cfg, double lr) {
  if (state.velocity.empty()) {
    for (const auto& p : params.params) {
      state.names.push_back(p.name);
      state.velocity.emplace_back(p.value->shape());
    }
  }
  if (state.velocity.size() != params.params.size()) {
    throw ShapeError("optimizer holds " + std::to_string(state.velocity.size()) + " velocities for " +
                     std::to_string(params.params.size()) + " parameters");
  }
  for (size_t i = 0; i < params.params.size(); ++i) {
    auto& p = params.params[i];
    if (state.names[i] != p.name) throw ShapeError("optimizer velocity " + state.names[i] + " does not match " + p.name);
    double decay = 0.0;
    if (p.kind == ParamKind::weight) decay = cfg.weight_decay;
    if ((p.kind == ParamKind::bn_gamma || p.kind == ParamKind::bn_beta) && cfg.decay_bn) decay = cfg.weight_decay;
    sgd_update(*p.value, *p.grad, state.velocity[i], lr, cfg.momentum, decay);
  }
  ++state.steps;
}

template void sgd_update(Tensor<float>&, const Tensor<float>&, Tensor<float>&, double, double, double);
template void sgd_update(Tensor<double>&, const Tensor<double>&, Tensor<double>&, double, double, double);
template void sgd_momentum_step(ParamSet<float>&, OptimizerState<float>&, const SgdConfig&, double);
template void sgd_momentum_step(ParamSet<double>&, OptimizerState<double>&, const SgdConfig&, double);

}  // namespace rednet
