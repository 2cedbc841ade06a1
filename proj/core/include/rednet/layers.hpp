#pragma once

#include <string>
#include <variant>
#include <vector>

#include "rednet/ops.hpp"

namespace rednet {

enum class ParamKind { weight, bias, bn_gamma, bn_beta };

/// Non-owning view of one learnable tensor and its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
  ParamKind kind = ParamKind::weight;
};

/// Non-learned state (batch-norm running statistics).
template <typename T>
struct BufferRef {
  std::string name;
  Tensor<T>* value = nullptr;
};

/// Flat registry of a module tree. Pointers are valid until the owning
/// module is moved or destroyed, so build it right before use.
template <typename T>
struct ParamSet {
  std::vector<ParamRef<T>> params;
  std::vector<BufferRef<T>> buffers;

  ParamRef<T>* find(const std::string& name);
  void zero_grad();
};

// Layers below cache what their backward pass needs only in train mode.
// backward() consumes the cache; a second call without a new forward throws.

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  explicit Conv2d(const ConvParams& p);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  /// Accumulates weight/bias gradients and returns the input gradient
  /// (empty when want_grad_x is false).
  Tensor<T> backward(const Tensor<T>& grad_out, bool want_grad_x = true);
  void collect(ParamSet<T>& set, const std::string& prefix);

  const ConvParams& params() const { return p_; }
  Tensor<T>& weight() { return w_; }
  Tensor<T>& bias() { return b_; }
  Shape output_shape(const Shape& in) const { return p_.conv_output(in); }

 private:
  ConvParams p_;
  Tensor<T> w_, b_, grad_w_, grad_b_;
  Tensor<T> x_;
};

template <typename T>
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  explicit ConvTranspose2d(const ConvParams& p);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> backward(const Tensor<T>& grad_out, bool want_grad_x = true);
  void collect(ParamSet<T>& set, const std::string& prefix);

  const ConvParams& params() const { return p_; }
  Tensor<T>& weight() { return w_; }
  Tensor<T>& bias() { return b_; }
  Shape output_shape(const Shape& in) const { return p_.transpose_output(in); }

 private:
  ConvParams p_;
  Tensor<T> w_, b_, grad_w_, grad_b_;
  Tensor<T> x_;
};

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int64_t channels);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect(ParamSet<T>& set, const std::string& prefix);

  BatchNormState<T>& state() { return state_; }
  const BatchNormState<T>& state() const { return state_; }

 private:
  BatchNormState<T> state_;
  Tensor<T> grad_gamma_, grad_beta_;
  BatchNormCache<T> cache_;
};

enum class ConvKind { conv, transpose };

/// Convolution (or transposed convolution) followed by batch norm and an
/// optional ReLU.
template <typename T>
class ConvBnAct {
 public:
  ConvBnAct() = default;
  ConvBnAct(ConvKind kind, const ConvParams& p, bool relu);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> backward(const Tensor<T>& grad_out, bool want_grad_x = true);
  void collect(ParamSet<T>& set, const std::string& prefix);

  ConvKind kind() const { return kind_; }
  const ConvParams& conv_params() const;
  BatchNorm2d<T>& bn() { return bn_; }
  Shape output_shape(const Shape& in) const;

 private:
  ConvKind kind_ = ConvKind::conv;
  std::variant<Conv2d<T>, ConvTranspose2d<T>> conv_;
  BatchNorm2d<T> bn_;
  bool relu_ = false;
  Tensor<T> y_;
};

}  // namespace rednet
