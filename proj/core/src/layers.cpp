#include "rednet/layers.hpp"

#include <stdexcept>

namespace rednet {
namespace {

[[noreturn]] void stale(const std::string& layer) {
  throw std::logic_error(layer + ": backward called without a cached train-mode forward");
}

template <typename T>
void accumulate(Tensor<T>& into, const Tensor<T>& delta) {
  if (into.empty()) {
    into = delta;
  } else {
    add_inplace(into, delta);
  }
}

}  // namespace

template <typename T>
ParamRef<T>* ParamSet<T>::find(const std::string& name) {
  for (auto& p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
void ParamSet<T>::zero_grad() {
  for (auto& p : params) p.grad->fill(T(0));
}

template <typename T>
Conv2d<T>::Conv2d(const ConvParams& p)
    : p_(p), w_(p.conv_weight_shape()), grad_w_(p.conv_weight_shape()) {
  if (p.has_bias) {
    b_ = Tensor<T>(p.bias_shape());
    grad_b_ = Tensor<T>(p.bias_shape());
  }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Mode mode) {
  auto out = conv2d_forward<T>(x, w_, b_.data(), p_);
  if (mode == Mode::train) x_ = x;
  return out;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out, bool want_grad_x) {
  if (x_.empty()) stale("Conv2d " + p_.str());
  auto g = conv2d_backward<T>(x_, w_, p_, grad_out, want_grad_x);
  accumulate(grad_w_, g.grad_w);
  if (p_.has_bias) accumulate(grad_b_, g.grad_b);
  x_ = Tensor<T>();
  return std::move(g.grad_x);
}

template <typename T>
void Conv2d<T>::collect(ParamSet<T>& set, const std::string& prefix) {
  set.params.push_back({prefix + ".weight", &w_, &grad_w_, ParamKind::weight});
  if (p_.has_bias) set.params.push_back({prefix + ".bias", &b_, &grad_b_, ParamKind::bias});
}

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(const ConvParams& p)
    : p_(p), w_(p.transpose_weight_shape()), grad_w_(p.transpose_weight_shape()) {
  if (p.has_bias) {
    b_ = Tensor<T>(p.bias_shape());
    grad_b_ = Tensor<T>(p.bias_shape());
  }
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x, Mode mode) {
  auto out = transpose_conv2d_forward<T>(x, w_, b_.data(), p_);
  if (mode == Mode::train) x_ = x;
  return out;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::backward(const Tensor<T>& grad_out, bool want_grad_x) {
  if (x_.empty()) stale("ConvTranspose2d " + p_.str());
  auto g = transpose_conv2d_backward<T>(x_, w_, p_, grad_out, want_grad_x);
  accumulate(grad_w_, g.grad_w);
  if (p_.has_bias) accumulate(grad_b_, g.grad_b);
  x_ = Tensor<T>();
  return std::move(g.grad_x);
}

template <typename T>
void ConvTranspose2d<T>::collect(ParamSet<T>& set, const std::string& prefix) {
  set.params.push_back({prefix + ".weight", &w_, &grad_w_, ParamKind::weight});
  if (p_.has_bias) set.params.push_back({prefix + ".bias", &b_, &grad_b_, ParamKind::bias});
}

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int64_t channels)
    : state_(channels), grad_gamma_(Shape{1, channels, 1, 1}), grad_beta_(Shape{1, channels, 1, 1}) {}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode) {
  return batchnorm_forward<T>(x, state_, mode, mode == Mode::train ? &cache_ : nullptr);
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
  if (cache_.x_hat.empty()) stale("BatchNorm2d");
  auto g = batchnorm_backward<T>(state_, cache_, grad_out);
  add_inplace(grad_gamma_, g.grad_gamma);
  add_inplace(grad_beta_, g.grad_beta);
  cache_ = BatchNormCache<T>();
  return std::move(g.grad_x);
}

template <typename T>
void BatchNorm2d<T>::collect(ParamSet<T>& set, const std::string& prefix) {
  set.params.push_back({prefix + ".gamma", &state_.gamma, &grad_gamma_, ParamKind::bn_gamma});
  set.params.push_back({prefix + ".beta", &state_.beta, &grad_beta_, ParamKind::bn_beta});
  set.buffers.push_back({prefix + ".running_mean", &state_.running_mean});
  set.buffers.push_back({prefix + ".running_var", &state_.running_var});
}

template <typename T>
ConvBnAct<T>::ConvBnAct(ConvKind kind, const ConvParams& p, bool relu)
    : kind_(kind), bn_(p.out_channels), relu_(relu) {
  if (kind == ConvKind::conv) {
    conv_ = Conv2d<T>(p);
  } else {
    conv_ = ConvTranspose2d<T>(p);
  }
}

template <typename T>
const ConvParams& ConvBnAct<T>::conv_params() const {
  return std::visit([](const auto& c) -> const ConvParams& { return c.params(); }, conv_);
}

template <typename T>
Shape ConvBnAct<T>::output_shape(const Shape& in) const {
  return std::visit([&](const auto& c) { return c.output_shape(in); }, conv_);
}

template <typename T>
Tensor<T> ConvBnAct<T>::forward(const Tensor<T>& x, Mode mode) {
  auto h = std::visit([&](auto& c) { return c.forward(x, mode); }, conv_);
  h = bn_.forward(h, mode);
  if (!relu_) return h;
  auto y = relu_forward(h);
  if (mode == Mode::train) y_ = y;
  return y;
}

template <typename T>
Tensor<T> ConvBnAct<T>::backward(const Tensor<T>& grad_out, bool want_grad_x) {
  Tensor<T> g;
  if (relu_) {
    if (y_.empty()) stale("ConvBnAct relu");
    g = relu_backward(y_, grad_out);
    y_ = Tensor<T>();
    g = bn_.backward(g);
  } else {
    g = bn_.backward(grad_out);
  }
  return std::visit([&](auto& c) { return c.backward(g, want_grad_x); }, conv_);
}

template <typename T>
void ConvBnAct<T>::collect(ParamSet<T>& set, const std::string& prefix) {
  std::visit([&](auto& c) { c.collect(set, prefix + ".conv"); }, conv_);
  bn_.collect(set, prefix + ".bn");
}

#define REDNET_INSTANTIATE(T)         \
  template struct ParamSet<T>;        \
  template class Conv2d<T>;           \
  template class ConvTranspose2d<T>;  \
  template class BatchNorm2d<T>;      \
  template class ConvBnAct<T>;

REDNET_INSTANTIATE(float)
REDNET_INSTANTIATE(double)
#undef REDNET_INSTANTIATE

}  // namespace rednet
