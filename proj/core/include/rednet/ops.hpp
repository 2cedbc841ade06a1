#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rednet/label_map.hpp"
#include "rednet/tensor.hpp"

// Forward and backward passes of the primitive layers. All functions are
// pure apart from batchnorm_forward in train mode, which updates the
// running statistics of the state it is given.
namespace rednet {

enum class Mode { train, eval };

/// Geometry of a (transposed) convolution. Convolution is cross-correlation.
struct ConvParams {
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int pad = 0;
  int in_channels = 1;
  int out_channels = 1;
  bool has_bias = false;

  static ConvParams square(int in_channels, int out_channels, int kernel, int stride = 1, int pad = 0,
                           bool has_bias = false);

  /// floor((H + 2p - k) / s) + 1 per axis. Throws ShapeError if < 1 or the
  /// channel count differs from in_channels.
  Shape conv_output(const Shape& in) const;
  /// (H - 1) * s - 2p + k per axis.
  Shape transpose_output(const Shape& in) const;

  Shape conv_weight_shape() const { return {out_channels, in_channels, kernel_h, kernel_w}; }
  /// Transposed convolution weights are stored [in, out, k_h, k_w].
  Shape transpose_weight_shape() const { return {in_channels, out_channels, kernel_h, kernel_w}; }
  Shape bias_shape() const { return {1, out_channels, 1, 1}; }

  std::string str() const;
};

template <typename T>
struct ConvGrads {
  Tensor<T> grad_x;
  Tensor<T> grad_w;
  Tensor<T> grad_b;  // empty when the layer has no bias
};

/// `bias` is empty or holds out_channels values.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> bias, const ConvParams& p);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const ConvParams& p,
                             const Tensor<T>& grad_out, bool want_grad_x = true);

/// Adjoint of conv2d_forward with respect to its input, plus bias.
template <typename T>
Tensor<T> transpose_conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> bias,
                                   const ConvParams& p);

template <typename T>
ConvGrads<T> transpose_conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const ConvParams& p,
                                       const Tensor<T>& grad_out, bool want_grad_x = true);

template <typename T>
struct BatchNormState {
  Tensor<T> gamma;  // (1, C, 1, 1)
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  BatchNormState() = default;
  explicit BatchNormState(int64_t channels);
  int64_t channels() const { return gamma.shape().c; }
};

template <typename T>
struct BatchNormCache {
  Tensor<T> x_hat;
  std::vector<double> inv_std;
  Mode mode = Mode::eval;
};

template <typename T>
struct BatchNormGrads {
  Tensor<T> grad_x;
  Tensor<T> grad_gamma;
  Tensor<T> grad_beta;
};

/// Train mode normalizes with batch statistics over (N, H, W) and folds
/// them into the running averages (variance stored unbiased); eval mode
/// uses the running statistics.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormState<T>& state, Mode mode,
                            BatchNormCache<T>* cache = nullptr);

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormState<T>& state, const BatchNormCache<T>& cache,
                                     const Tensor<T>& grad_out);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);

/// Fingerprint of the ReLU masks and max-pool selections computed on this
/// thread between begin() and end(). Finite-difference checks compare it
/// across perturbations to discard coordinates that cross a kink.
struct ActivationPattern {
  static void begin();
  static uint64_t end();
};

/// `x` may be the ReLU input or its output; both give the same mask.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

struct PoolParams {
  int kernel = 3;
  int stride = 2;
  int pad = 1;

  Shape output(const Shape& in) const;
};

template <typename T>
struct MaxPoolResult {
  Tensor<T> output;
  std::vector<int64_t> argmax;  // flat input index for every output element
};

/// Padding behaves as -inf. Ties go to the first element in row-major scan order.
template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& x, const PoolParams& p = {});

template <typename T>
Tensor<T> maxpool_backward(const Shape& input_shape, std::span<const int64_t> argmax,
                           const Tensor<T>& grad_out);

/// floor((dst + 0.5) * in / out), clamped to in - 1. Exact integer arithmetic.
int64_t nearest_source_index(int64_t dst, int64_t in_size, int64_t out_size);

template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& x, int64_t out_h, int64_t out_w);

/// Half-pixel centers (align_corners = false) with edge clamping.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int64_t out_h, int64_t out_w);

LabelMap resize_nearest(const LabelMap& labels, int64_t out_h, int64_t out_w);

template <typename T>
struct CrossEntropyResult {
  double loss = 0.0;    // weighted sum / counted
  Tensor<T> grad;       // d loss / d scores
  int64_t counted = 0;  // non-ignored pixels
};

/// Class-weighted softmax cross-entropy averaged over non-ignored pixels.
///
/// Label c in 1..N_c selects score channel c - 1. `class_weights` is
/// either empty (unit weights) or holds N_c multipliers indexed by c - 1.
/// When every pixel is ignored the loss and gradient are zero.
template <typename T>
CrossEntropyResult<T> weighted_softmax_cross_entropy(const Tensor<T>& scores, const LabelMap& labels,
                                                     std::span<const double> class_weights,
                                                     int32_t ignore_index = kIgnoreLabel);

}  // namespace rednet
