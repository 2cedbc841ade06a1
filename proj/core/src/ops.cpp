#include "rednet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rednet/gemm.hpp"

namespace rednet {
namespace {

struct Geometry {
  int64_t channels, height, width;  // the large (image) side
  int kernel_h, kernel_w, stride, pad;
  int64_t out_h, out_w;  // the patch grid

  int64_t rows() const { return channels * kernel_h * kernel_w; }
  int64_t cols() const { return out_h * out_w; }
  bool pointwise() const { return kernel_h == 1 && kernel_w == 1 && stride == 1 && pad == 0; }
};

template <typename T>
void im2col(const T* img, const Geometry& g, T* col) {
  const int64_t plane = g.cols();
  for (int64_t c = 0; c < g.channels; ++c) {
    const T* src = img + c * g.height * g.width;
    for (int ki = 0; ki < g.kernel_h; ++ki) {
      for (int kj = 0; kj < g.kernel_w; ++kj) {
        T* dst = col + ((c * g.kernel_h + ki) * g.kernel_w + kj) * plane;
        for (int64_t oh = 0; oh < g.out_h; ++oh) {
          const int64_t ih = oh * g.stride - g.pad + ki;
          T* drow = dst + oh * g.out_w;
          if (ih < 0 || ih >= g.height) {
            std::fill(drow, drow + g.out_w, T(0));
            continue;
          }
          const T* srow = src + ih * g.width;
          for (int64_t ow = 0; ow < g.out_w; ++ow) {
            const int64_t iw = ow * g.stride - g.pad + kj;
            drow[ow] = (iw >= 0 && iw < g.width) ? srow[iw] : T(0);
          }
        }
      }
    }
  }
}

// Accumulates patch columns back into the (pre-zeroed) image.
template <typename T>
void col2im(const T* col, const Geometry& g, T* img) {
  const int64_t plane = g.cols();
  for (int64_t c = 0; c < g.channels; ++c) {
    T* dst = img + c * g.height * g.width;
    for (int ki = 0; ki < g.kernel_h; ++ki) {
      for (int kj = 0; kj < g.kernel_w; ++kj) {
        const T* src = col + ((c * g.kernel_h + ki) * g.kernel_w + kj) * plane;
        for (int64_t oh = 0; oh < g.out_h; ++oh) {
          const int64_t ih = oh * g.stride - g.pad + ki;
          if (ih < 0 || ih >= g.height) continue;
          const T* srow = src + oh * g.out_w;
          T* drow = dst + ih * g.width;
          for (int64_t ow = 0; ow < g.out_w; ++ow) {
            const int64_t iw = ow * g.stride - g.pad + kj;
            if (iw >= 0 && iw < g.width) drow[iw] += srow[ow];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T>& scratch(int slot) {
  thread_local std::vector<T> buffers[2];
  return buffers[slot];
}

template <typename T>
void check_weights(const Tensor<T>& w, const Shape& expected, const ConvParams& p, const char* op) {
  if (!(w.shape() == expected)) {
    throw ShapeError(std::string(op) + ": weight shape " + w.shape().str() + " does not match " +
                     expected.str() + " for " + p.str());
  }
}

template <typename T>
void check_bias(std::span<const T> bias, const ConvParams& p, const char* op) {
  if (!bias.empty() && static_cast<int64_t>(bias.size()) != p.out_channels) {
    throw ShapeError(std::string(op) + ": bias has " + std::to_string(bias.size()) + " values, expected " +
                     std::to_string(p.out_channels));
  }
}

template <typename T>
void add_bias(Tensor<T>& out, std::span<const T> bias) {
  if (bias.empty()) return;
  const Shape& s = out.shape();
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      T* p = out.plane(n, c);
      const T b = bias[c];
      for (int64_t i = 0; i < s.plane(); ++i) p[i] += b;
    }
  }
}

template <typename T>
Tensor<T> bias_grad(const Tensor<T>& grad_out) {
  const Shape& s = grad_out.shape();
  Tensor<T> gb(Shape{1, s.c, 1, 1});
  for (int64_t c = 0; c < s.c; ++c) {
    double acc = 0.0;
    for (int64_t n = 0; n < s.n; ++n) {
      const T* p = grad_out.plane(n, c);
      for (int64_t i = 0; i < s.plane(); ++i) acc += p[i];
    }
    gb[c] = static_cast<T>(acc);
  }
  return gb;
}

}  // namespace

ConvParams ConvParams::square(int in_channels, int out_channels, int kernel, int stride, int pad,
                              bool has_bias) {
  ConvParams p;
  p.kernel_h = p.kernel_w = kernel;
  p.stride = stride;
  p.pad = pad;
  p.in_channels = in_channels;
  p.out_channels = out_channels;
  p.has_bias = has_bias;
  return p;
}

Shape ConvParams::conv_output(const Shape& in) const {
  if (in.c != in_channels) {
    throw ShapeError("conv2d: input " + in.str() + " has " + std::to_string(in.c) + " channels, expected " +
                     std::to_string(in_channels));
  }
  if (stride < 1 || pad < 0 || kernel_h < 1 || kernel_w < 1) throw ShapeError("conv2d: invalid " + str());
  const int64_t oh = (in.h + 2 * pad - kernel_h) / stride + 1;
  const int64_t ow = (in.w + 2 * pad - kernel_w) / stride + 1;
  if (in.h + 2 * pad < kernel_h || in.w + 2 * pad < kernel_w || oh < 1 || ow < 1) {
    throw ShapeError("conv2d: non-positive output size for input " + in.str() + " and " + str());
  }
  return {in.n, out_channels, oh, ow};
}

Shape ConvParams::transpose_output(const Shape& in) const {
  if (in.c != in_channels) {
    throw ShapeError("transpose_conv2d: input " + in.str() + " has " + std::to_string(in.c) +
                     " channels, expected " + std::to_string(in_channels));
  }
  if (stride < 1 || pad < 0 || kernel_h < 1 || kernel_w < 1) {
    throw ShapeError("transpose_conv2d: invalid " + str());
  }
  const int64_t oh = (in.h - 1) * stride - 2 * pad + kernel_h;
  const int64_t ow = (in.w - 1) * stride - 2 * pad + kernel_w;
  if (oh < 1 || ow < 1) {
    throw ShapeError("transpose_conv2d: non-positive output size for input " + in.str() + " and " + str());
  }
  return {in.n, out_channels, oh, ow};
}

std::string ConvParams::str() const {
  return "Conv[(" + std::to_string(kernel_h) + "," + std::to_string(kernel_w) + "),s=" + std::to_string(stride) +
         ",p=" + std::to_string(pad) + "," + std::to_string(in_channels) + "->" + std::to_string(out_channels) +
         (has_bias ? ",bias]" : "]");
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> bias, const ConvParams& p) {
  const Shape out_shape = p.conv_output(x.shape());
  check_weights(w, p.conv_weight_shape(), p, "conv2d_forward");
  check_bias(bias, p, "conv2d_forward");
  const Shape& in = x.shape();
  const Geometry g{in.c, in.h, in.w, p.kernel_h, p.kernel_w, p.stride, p.pad, out_shape.h, out_shape.w};
  Tensor<T> out(out_shape);
  auto& col = scratch<T>(0);
  if (!g.pointwise()) col.resize(static_cast<size_t>(g.rows() * g.cols()));
  for (int64_t n = 0; n < in.n; ++n) {
    const T* b = x.plane(n, 0);
    if (!g.pointwise()) {
      im2col(b, g, col.data());
      b = col.data();
    }
    blas::gemm_nn<T>(p.out_channels, g.cols(), g.rows(), w.ptr(), g.rows(), b, g.cols(), out.plane(n, 0),
                     g.cols(), false);
  }
  add_bias(out, bias);
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const ConvParams& p,
                             const Tensor<T>& grad_out, bool want_grad_x) {
  const Shape out_shape = p.conv_output(x.shape());
  check_weights(w, p.conv_weight_shape(), p, "conv2d_backward");
  require_same_shape(grad_out.shape(), out_shape, "conv2d_backward grad_out");
  const Shape& in = x.shape();
  const Geometry g{in.c, in.h, in.w, p.kernel_h, p.kernel_w, p.stride, p.pad, out_shape.h, out_shape.w};

  ConvGrads<T> grads;
  grads.grad_w = Tensor<T>(w.shape());
  if (want_grad_x) grads.grad_x = Tensor<T>(in);
  auto& col = scratch<T>(0);
  auto& dcol = scratch<T>(1);
  if (!g.pointwise()) {
    col.resize(static_cast<size_t>(g.rows() * g.cols()));
    if (want_grad_x) dcol.resize(col.size());
  }
  for (int64_t n = 0; n < in.n; ++n) {
    const T* patches = x.plane(n, 0);
    if (!g.pointwise()) {
      im2col(patches, g, col.data());
      patches = col.data();
    }
    const T* go = grad_out.plane(n, 0);
    blas::gemm_nt<T>(p.out_channels, g.rows(), g.cols(), go, g.cols(), patches, g.cols(), grads.grad_w.ptr(),
                     g.rows(), true);
    if (!want_grad_x) continue;
    if (g.pointwise()) {
      blas::gemm_tn<T>(g.rows(), g.cols(), p.out_channels, w.ptr(), g.rows(), go, g.cols(),
                       grads.grad_x.plane(n, 0), g.cols(), false);
    } else {
      blas::gemm_tn<T>(g.rows(), g.cols(), p.out_channels, w.ptr(), g.rows(), go, g.cols(), dcol.data(),
                       g.cols(), false);
      col2im(dcol.data(), g, grads.grad_x.plane(n, 0));
    }
  }
  if (p.has_bias) grads.grad_b = bias_grad(grad_out);
  return grads;
}

template <typename T>
Tensor<T> transpose_conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> bias,
                                   const ConvParams& p) {
  const Shape out_shape = p.transpose_output(x.shape());
  check_weights(w, p.transpose_weight_shape(), p, "transpose_conv2d_forward");
  check_bias(bias, p, "transpose_conv2d_forward");
  const Shape& in = x.shape();
  // Patch grid is the input; the image side is the (larger) output.
  const Geometry g{out_shape.c, out_shape.h, out_shape.w, p.kernel_h, p.kernel_w, p.stride, p.pad, in.h, in.w};
  Tensor<T> out(out_shape);
  auto& col = scratch<T>(0);
  if (!g.pointwise()) col.resize(static_cast<size_t>(g.rows() * g.cols()));
  for (int64_t n = 0; n < in.n; ++n) {
    if (g.pointwise()) {
      blas::gemm_tn<T>(p.out_channels, g.cols(), p.in_channels, w.ptr(), p.out_channels, x.plane(n, 0), g.cols(),
                       out.plane(n, 0), g.cols(), false);
    } else {
      blas::gemm_tn<T>(g.rows(), g.cols(), p.in_channels, w.ptr(), g.rows(), x.plane(n, 0), g.cols(), col.data(),
                       g.cols(), false);
      col2im(col.data(), g, out.plane(n, 0));
    }
  }
  add_bias(out, bias);
  return out;
}

template <typename T>
ConvGrads<T> transpose_conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const ConvParams& p,
                                       const Tensor<T>& grad_out, bool want_grad_x) {
  const Shape out_shape = p.transpose_output(x.shape());
  check_weights(w, p.transpose_weight_shape(), p, "transpose_conv2d_backward");
  require_same_shape(grad_out.shape(), out_shape, "transpose_conv2d_backward grad_out");
  const Shape& in = x.shape();
  const Geometry g{out_shape.c, out_shape.h, out_shape.w, p.kernel_h, p.kernel_w, p.stride, p.pad, in.h, in.w};

  ConvGrads<T> grads;
  grads.grad_w = Tensor<T>(w.shape());
  if (want_grad_x) grads.grad_x = Tensor<T>(in);
  auto& col = scratch<T>(0);
  if (!g.pointwise()) col.resize(static_cast<size_t>(g.rows() * g.cols()));
  for (int64_t n = 0; n < in.n; ++n) {
    const T* patches = grad_out.plane(n, 0);
    if (!g.pointwise()) {
      im2col(patches, g, col.data());
      patches = col.data();
    }
    if (want_grad_x) {
      blas::gemm_nn<T>(p.in_channels, g.cols(), g.rows(), w.ptr(), g.rows(), patches, g.cols(),
                       grads.grad_x.plane(n, 0), g.cols(), false);
    }
    blas::gemm_nt<T>(p.in_channels, g.rows(), g.cols(), x.plane(n, 0), g.cols(), patches, g.cols(),
                     grads.grad_w.ptr(), g.rows(), true);
  }
  if (p.has_bias) grads.grad_b = bias_grad(grad_out);
  return grads;
}

template <typename T>
BatchNormState<T>::BatchNormState(int64_t channels)
    : gamma(Shape{1, channels, 1, 1}, T(1)),
      beta(Shape{1, channels, 1, 1}, T(0)),
      running_mean(Shape{1, channels, 1, 1}, T(0)),
      running_var(Shape{1, channels, 1, 1}, T(1)) {}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormState<T>& state, Mode mode, BatchNormCache<T>* cache) {
  const Shape& s = x.shape();
  if (s.c != state.channels()) {
    throw ShapeError("batchnorm_forward: input " + s.str() + " has " + std::to_string(s.c) +
                     " channels, state has " + std::to_string(state.channels()));
  }
  const int64_t count = s.n * s.plane();
  std::vector<double> mean(s.c), inv_std(s.c);
  if (mode == Mode::train) {
    for (int64_t c = 0; c < s.c; ++c) {
      double sum = 0.0;
      for (int64_t n = 0; n < s.n; ++n) {
        const T* p = x.plane(n, c);
        for (int64_t i = 0; i < s.plane(); ++i) sum += p[i];
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int64_t n = 0; n < s.n; ++n) {
        const T* p = x.plane(n, c);
        for (int64_t i = 0; i < s.plane(); ++i) {
          const double d = p[i] - mu;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + state.eps);
      const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
      state.running_mean[c] =
          static_cast<T>((1.0 - state.momentum) * state.running_mean[c] + state.momentum * mu);
      state.running_var[c] =
          static_cast<T>((1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased);
    }
  } else {
    for (int64_t c = 0; c < s.c; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(static_cast<double>(state.running_var[c]) + state.eps);
    }
  }

  Tensor<T> out(s);
  Tensor<T> x_hat;
  if (cache) x_hat = Tensor<T>(s);
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      const T* p = x.plane(n, c);
      T* o = out.plane(n, c);
      const T mu = static_cast<T>(mean[c]);
      const T is = static_cast<T>(inv_std[c]);
      const T g = state.gamma[c];
      const T b = state.beta[c];
      if (cache) {
        T* xh = x_hat.plane(n, c);
        for (int64_t i = 0; i < s.plane(); ++i) {
          xh[i] = (p[i] - mu) * is;
          o[i] = g * xh[i] + b;
        }
      } else {
        for (int64_t i = 0; i < s.plane(); ++i) o[i] = g * ((p[i] - mu) * is) + b;
      }
    }
  }
  if (cache) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormState<T>& state, const BatchNormCache<T>& cache,
                                     const Tensor<T>& grad_out) {
  if (cache.x_hat.empty()) throw std::logic_error("batchnorm_backward: no cached forward pass");
  const Shape& s = cache.x_hat.shape();
  require_same_shape(grad_out.shape(), s, "batchnorm_backward grad_out");
  const int64_t count = s.n * s.plane();

  BatchNormGrads<T> grads;
  grads.grad_x = Tensor<T>(s);
  grads.grad_gamma = Tensor<T>(Shape{1, s.c, 1, 1});
  grads.grad_beta = Tensor<T>(Shape{1, s.c, 1, 1});
  for (int64_t c = 0; c < s.c; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int64_t n = 0; n < s.n; ++n) {
      const T* dy = grad_out.plane(n, c);
      const T* xh = cache.x_hat.plane(n, c);
      for (int64_t i = 0; i < s.plane(); ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
      }
    }
    grads.grad_beta[c] = static_cast<T>(sum_dy);
    grads.grad_gamma[c] = static_cast<T>(sum_dy_xhat);
    const double g = state.gamma[c];
    const double is = cache.inv_std[c];
    for (int64_t n = 0; n < s.n; ++n) {
      const T* dy = grad_out.plane(n, c);
      const T* xh = cache.x_hat.plane(n, c);
      T* dx = grads.grad_x.plane(n, c);
      if (cache.mode == Mode::train) {
        const double mean_dy = sum_dy / static_cast<double>(count);
        const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(count);
        for (int64_t i = 0; i < s.plane(); ++i) {
          dx[i] = static_cast<T>(g * is * (dy[i] - mean_dy - xh[i] * mean_dy_xhat));
        }
      } else {
        const T scale_c = static_cast<T>(g * is);
        for (int64_t i = 0; i < s.plane(); ++i) dx[i] = dy[i] * scale_c;
      }
    }
  }
  return grads;
}

namespace {

struct PatternState {
  bool enabled = false;
  uint64_t hash = 0xcbf29ce484222325ull;

  void mix(uint64_t v) {
    hash ^= v + 0x9e3779b97f4a7c15ull + (hash << 6) + (hash >> 2);
  }
};

thread_local PatternState pattern_state;

}  // namespace

void ActivationPattern::begin() { pattern_state = PatternState{true}; }

uint64_t ActivationPattern::end() {
  pattern_state.enabled = false;
  return pattern_state.hash;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const T* p = x.ptr();
  T* o = out.ptr();
  for (int64_t i = 0; i < x.numel(); ++i) o[i] = p[i] > T(0) ? p[i] : T(0);
  if (pattern_state.enabled) {
    uint64_t word = 0;
    for (int64_t i = 0; i < x.numel(); ++i) {
      word = (word << 1) | (p[i] > T(0) ? 1u : 0u);
      if ((i & 63) == 63) pattern_state.mix(word), word = 0;
    }
    pattern_state.mix(word);
  }
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_same_shape(x.shape(), grad_out.shape(), "relu_backward");
  Tensor<T> out(x.shape());
  const T* p = x.ptr();
  const T* g = grad_out.ptr();
  T* o = out.ptr();
  for (int64_t i = 0; i < x.numel(); ++i) o[i] = p[i] > T(0) ? g[i] : T(0);
  return out;
}

Shape PoolParams::output(const Shape& in) const {
  if (kernel < 1 || stride < 1 || pad < 0 || pad >= kernel) {
    throw ShapeError("maxpool: invalid geometry k=" + std::to_string(kernel) + " s=" + std::to_string(stride) +
                     " p=" + std::to_string(pad));
  }
  const int64_t oh = (in.h + 2 * pad - kernel) / stride + 1;
  const int64_t ow = (in.w + 2 * pad - kernel) / stride + 1;
  if (in.h + 2 * pad < kernel || in.w + 2 * pad < kernel || oh < 1 || ow < 1) {
    throw ShapeError("maxpool: non-positive output size for input " + in.str());
  }
  return {in.n, in.c, oh, ow};
}

template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& x, const PoolParams& p) {
  const Shape& in = x.shape();
  const Shape os = p.output(in);
  MaxPoolResult<T> r;
  r.output = Tensor<T>(os);
  r.argmax.resize(static_cast<size_t>(os.numel()));
  int64_t o = 0;
  for (int64_t n = 0; n < in.n; ++n) {
    for (int64_t c = 0; c < in.c; ++c) {
      const int64_t base = x.index(n, c, 0, 0);
      const T* src = x.ptr() + base;
      for (int64_t oh = 0; oh < os.h; ++oh) {
        for (int64_t ow = 0; ow < os.w; ++ow, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          int64_t best_idx = -1;
          for (int ki = 0; ki < p.kernel; ++ki) {
            const int64_t ih = oh * p.stride - p.pad + ki;
            if (ih < 0 || ih >= in.h) continue;
            for (int kj = 0; kj < p.kernel; ++kj) {
              const int64_t iw = ow * p.stride - p.pad + kj;
              if (iw < 0 || iw >= in.w) continue;
              const T v = src[ih * in.w + iw];
              if (best_idx < 0 || v > best) {
                best = v;
                best_idx = ih * in.w + iw;
              }
            }
          }
          r.output[o] = best;
          r.argmax[o] = base + best_idx;
          if (pattern_state.enabled) pattern_state.mix(static_cast<uint64_t>(best_idx));
        }
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool_backward(const Shape& input_shape, std::span<const int64_t> argmax, const Tensor<T>& grad_out) {
  if (static_cast<int64_t>(argmax.size()) != grad_out.numel()) {
    throw ShapeError("maxpool_backward: " + std::to_string(argmax.size()) + " argmax entries for grad " +
                     grad_out.shape().str());
  }
  Tensor<T> gx(input_shape);
  for (int64_t i = 0; i < grad_out.numel(); ++i) gx[argmax[i]] += grad_out[i];
  return gx;
}

int64_t nearest_source_index(int64_t dst, int64_t in_size, int64_t out_size) {
  const int64_t src = ((2 * dst + 1) * in_size) / (2 * out_size);
  return std::min(src, in_size - 1);
}

template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& x, int64_t out_h, int64_t out_w) {
  const Shape& in = x.shape();
  Tensor<T> out(Shape{in.n, in.c, out_h, out_w});
  std::vector<int64_t> sx(out_w);
  for (int64_t j = 0; j < out_w; ++j) sx[j] = nearest_source_index(j, in.w, out_w);
  for (int64_t n = 0; n < in.n; ++n) {
    for (int64_t c = 0; c < in.c; ++c) {
      const T* src = x.plane(n, c);
      T* dst = out.plane(n, c);
      for (int64_t i = 0; i < out_h; ++i) {
        const T* srow = src + nearest_source_index(i, in.h, out_h) * in.w;
        for (int64_t j = 0; j < out_w; ++j) dst[i * out_w + j] = srow[sx[j]];
      }
    }
  }
  return out;
}

namespace {

struct LerpTap {
  int64_t lo, hi;
  double frac;
};

std::vector<LerpTap> bilinear_taps(int64_t in_size, int64_t out_size) {
  std::vector<LerpTap> taps(out_size);
  const double ratio = static_cast<double>(in_size) / static_cast<double>(out_size);
  for (int64_t d = 0; d < out_size; ++d) {
    double src = (static_cast<double>(d) + 0.5) * ratio - 0.5;
    if (src < 0.0) src = 0.0;
    int64_t lo = static_cast<int64_t>(std::floor(src));
    if (lo > in_size - 1) lo = in_size - 1;
    const int64_t hi = std::min(lo + 1, in_size - 1);
    taps[d] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int64_t out_h, int64_t out_w) {
  const Shape& in = x.shape();
  if (in.h == out_h && in.w == out_w) return x;
  Tensor<T> out(Shape{in.n, in.c, out_h, out_w});
  const auto ty = bilinear_taps(in.h, out_h);
  const auto tx = bilinear_taps(in.w, out_w);
  for (int64_t n = 0; n < in.n; ++n) {
    for (int64_t c = 0; c < in.c; ++c) {
      const T* src = x.plane(n, c);
      T* dst = out.plane(n, c);
      for (int64_t i = 0; i < out_h; ++i) {
        const T* r0 = src + ty[i].lo * in.w;
        const T* r1 = src + ty[i].hi * in.w;
        const double fy = ty[i].frac;
        for (int64_t j = 0; j < out_w; ++j) {
          const double fx = tx[j].frac;
          const double top = r0[tx[j].lo] + fx * (r0[tx[j].hi] - r0[tx[j].lo]);
          const double bottom = r1[tx[j].lo] + fx * (r1[tx[j].hi] - r1[tx[j].lo]);
          dst[i * out_w + j] = static_cast<T>(top + fy * (bottom - top));
        }
      }
    }
  }
  return out;
}

LabelMap resize_nearest(const LabelMap& labels, int64_t out_h, int64_t out_w) {
  LabelMap out(labels.n, out_h, out_w);
  std::vector<int64_t> sx(out_w);
  for (int64_t j = 0; j < out_w; ++j) sx[j] = nearest_source_index(j, labels.w, out_w);
  for (int64_t b = 0; b < labels.n; ++b) {
    for (int64_t i = 0; i < out_h; ++i) {
      const int64_t si = nearest_source_index(i, labels.h, out_h);
      for (int64_t j = 0; j < out_w; ++j) out.at(b, i, j) = labels.at(b, si, sx[j]);
    }
  }
  return out;
}

template <typename T>
CrossEntropyResult<T> weighted_softmax_cross_entropy(const Tensor<T>& scores, const LabelMap& labels,
                                                     std::span<const double> class_weights, int32_t ignore_index) {
  const Shape& s = scores.shape();
  if (labels.n != s.n || labels.h != s.h || labels.w != s.w) {
    throw ShapeError("weighted_softmax_cross_entropy: labels " + labels.shape().str() + " vs scores " + s.str());
  }
  const int64_t classes = s.c;
  if (!class_weights.empty() && static_cast<int64_t>(class_weights.size()) != classes) {
    throw ShapeError("weighted_softmax_cross_entropy: " + std::to_string(class_weights.size()) +
                     " class weights for " + std::to_string(classes) + " classes");
  }

  CrossEntropyResult<T> r;
  r.grad = Tensor<T>(s);
  for (int32_t v : labels.data) {
    if (v == ignore_index) continue;
    if (v < 1 || v > classes) {
      throw DataError("weighted_softmax_cross_entropy: label " + std::to_string(v) + " outside 1.." +
                      std::to_string(classes));
    }
    ++r.counted;
  }
  if (r.counted == 0) return r;

  const double inv_count = 1.0 / static_cast<double>(r.counted);
  const int64_t plane = s.plane();
  std::vector<double> prob(classes);
  double total = 0.0;
  for (int64_t n = 0; n < s.n; ++n) {
    const T* sc = scores.plane(n, 0);
    T* g = r.grad.plane(n, 0);
    const auto img = labels.image(n);
    for (int64_t i = 0; i < plane; ++i) {
      const int32_t label = img[i];
      if (label == ignore_index) continue;
      double peak = sc[i];
      for (int64_t k = 1; k < classes; ++k) peak = std::max(peak, static_cast<double>(sc[k * plane + i]));
      double z = 0.0;
      for (int64_t k = 0; k < classes; ++k) {
        prob[k] = std::exp(static_cast<double>(sc[k * plane + i]) - peak);
        z += prob[k];
      }
      const int64_t target = label - 1;
      const double alpha = class_weights.empty() ? 1.0 : class_weights[target];
      const double log_p = static_cast<double>(sc[target * plane + i]) - peak - std::log(z);
      total += -alpha * log_p;
      const double scale_px = alpha * inv_count / z;
      for (int64_t k = 0; k < classes; ++k) {
        double gk = prob[k] * scale_px;
        if (k == target) gk -= alpha * inv_count;
        g[k * plane + i] = static_cast<T>(gk);
      }
    }
  }
  r.loss = total * inv_count;
  return r;
}

#define REDNET_INSTANTIATE(T)                                                                                  \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, std::span<const T>, const ConvParams&); \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const ConvParams&, const Tensor<T>&, \
                                        bool);                                                                  \
  template Tensor<T> transpose_conv2d_forward(const Tensor<T>&, const Tensor<T>&, std::span<const T>,          \
                                              const ConvParams&);                                               \
  template ConvGrads<T> transpose_conv2d_backward(const Tensor<T>&, const Tensor<T>&, const ConvParams&,       \
                                                  const Tensor<T>&, bool);                                      \
  template struct BatchNormState<T>;                                                                            \
  template Tensor<T> batchnorm_forward(const Tensor<T>&, BatchNormState<T>&, Mode, BatchNormCache<T>*);        \
  template BatchNormGrads<T> batchnorm_backward(const BatchNormState<T>&, const BatchNormCache<T>&,            \
                                                const Tensor<T>&);                                              \
  template Tensor<T> relu_forward(const Tensor<T>&);                                                           \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                        \
  template MaxPoolResult<T> maxpool_forward(const Tensor<T>&, const PoolParams&);                              \
  template Tensor<T> maxpool_backward(const Shape&, std::span<const int64_t>, const Tensor<T>&);               \
  template Tensor<T> resize_nearest(const Tensor<T>&, int64_t, int64_t);                                       \
  template Tensor<T> resize_bilinear(const Tensor<T>&, int64_t, int64_t);                                      \
  template CrossEntropyResult<T> weighted_softmax_cross_entropy(const Tensor<T>&, const LabelMap&,             \
                                                                std::span<const double>, int32_t);

REDNET_INSTANTIATE(float)
REDNET_INSTANTIATE(double)
#undef REDNET_INSTANTIATE

}  // namespace rednet
