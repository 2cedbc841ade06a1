#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rednet/ops.hpp"

namespace rednet {
namespace {

std::vector<double> random_bias(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> b(n);
  for (auto& v : b) v = u(rng);
  return b;
}

TEST(Conv2d, IdentityKernel) {
  std::mt19937_64 rng(1);
  auto x = oracle::random_tensor<float>({2, 1, 5, 6}, rng);
  Tensor<float> w({1, 1, 1, 1}, 1.0f);
  auto y = conv2d_forward<float>(x, w, {}, ConvParams::square(1, 1, 1));
  EXPECT_EQ(max_abs_diff(x, y), 0.0);
}

TEST(Conv2d, StemOutputShape) {
  auto p = ConvParams::square(3, 64, 7, 2, 3);
  EXPECT_EQ(p.conv_output({1, 3, 480, 640}), (Shape{1, 64, 240, 320}));
  PoolParams pool;
  EXPECT_EQ(pool.output(p.conv_output({1, 3, 480, 640})), (Shape{1, 64, 120, 160}));
}

TEST(Conv2d, GeometryErrors) {
  auto p = ConvParams::square(3, 4, 7, 1, 0);
  EXPECT_THROW(p.conv_output({1, 3, 5, 5}), ShapeError);
  EXPECT_THROW(p.conv_output({1, 2, 9, 9}), ShapeError);
}

struct ConvGeom {
  int n, c, h, w, o, k, s, p;
  bool bias;
};

void PrintTo(const ConvGeom& g, std::ostream* os) {
  *os << "x[" << g.n << "," << g.c << "," << g.h << "," << g.w << "] out " << g.o << " k" << g.k << " s" << g.s << " p"
      << g.p << (g.bias ? " bias" : "");
}

class ConvOracle : public ::testing::TestWithParam<ConvGeom> {};

TEST_P(ConvOracle, Im2colMatchesDirectLoop) {
  const auto g = GetParam();
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    auto x = oracle::random_tensor<double>({g.n, g.c, g.h, g.w}, rng);
    auto w = oracle::random_tensor<double>({g.o, g.c, g.k, g.k}, rng);
    std::vector<double> b;
    if (g.bias) {
      auto bd = random_bias(g.o, rng);
      b.assign(bd.begin(), bd.end());
    }
    auto p = ConvParams::square(g.c, g.o, g.k, g.s, g.p, g.bias);
    auto got = conv2d_forward<double>(x, w, b, p);
    auto want = oracle::direct_conv(x, w, b, g.s, g.p);
    ASSERT_EQ(got.shape(), want.shape());
    EXPECT_LE(max_abs_diff(got, want), 1e-6);
  }
}

INSTANTIATE_TEST_SUITE_P(Geometries, ConvOracle,
                         ::testing::Values(ConvGeom{1, 2, 5, 5, 3, 3, 1, 1, false}, ConvGeom{2, 3, 6, 7, 4, 3, 2, 1, true},
                                           ConvGeom{1, 3, 17, 13, 5, 7, 2, 3, false},
                                           ConvGeom{2, 4, 8, 8, 6, 1, 1, 0, true}, ConvGeom{1, 5, 9, 7, 3, 1, 2, 0, false},
                                           ConvGeom{3, 2, 4, 4, 2, 2, 2, 0, true}));

class TransposeOracle : public ::testing::TestWithParam<ConvGeom> {};

TEST_P(TransposeOracle, MatchesZeroStuffing) {
  const auto g = GetParam();
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed + 100);
    auto x = oracle::random_tensor<double>({g.n, g.c, g.h, g.w}, rng);
    auto w = oracle::random_tensor<double>({g.c, g.o, g.k, g.k}, rng);
    std::vector<double> b;
    if (g.bias) {
      auto bd = random_bias(g.o, rng);
      b.assign(bd.begin(), bd.end());
    }
    auto p = ConvParams::square(g.c, g.o, g.k, g.s, g.p, g.bias);
    auto got = transpose_conv2d_forward<double>(x, w, b, p);
    auto want = oracle::zero_stuffed_transpose_conv(x, w, b, g.s, g.p);
    ASSERT_EQ(got.shape(), want.shape());
    EXPECT_LE(max_abs_diff(got, want), 1e-6);
  }
}

INSTANTIATE_TEST_SUITE_P(Geometries, TransposeOracle,
                         ::testing::Values(ConvGeom{1, 4, 3, 3, 2, 2, 2, 0, true}, ConvGeom{2, 3, 5, 4, 4, 2, 2, 0, false},
                                           ConvGeom{1, 2, 4, 6, 3, 3, 2, 1, true},
                                           ConvGeom{2, 3, 3, 3, 2, 3, 1, 1, false}));

TEST(TransposeConv2d, DoublesSpatialSize) {
  auto p = ConvParams::square(64, 64, 2, 2, 0);
  EXPECT_EQ(p.transpose_output({1, 64, 30, 40}), (Shape{1, 64, 60, 80}));
}

TEST(TransposeConv2d, SinglePixelScalesKernel) {
  Tensor<double> x({1, 1, 1, 1}, 3.0);
  Tensor<double> w({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  auto y = transpose_conv2d_forward<double>(x, w, {}, ConvParams::square(1, 1, 2, 2, 0));
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(y[i], 3.0 * w[i]);
}

TEST(TransposeConv2d, DualityWithConvInputGradient) {
  std::mt19937_64 rng(21);
  auto p = ConvParams::square(3, 5, 3, 2, 1);
  auto x = oracle::random_tensor<double>({2, 3, 7, 6}, rng);
  auto w = oracle::random_tensor<double>({5, 3, 3, 3}, rng);
  auto g = oracle::random_tensor<double>(p.conv_output(x.shape()), rng);
  auto grads = conv2d_backward(x, w, p, g);
  // The mirror transposed convolution maps 5 -> 3 channels with the same [5,3,k,k] storage.
  auto tp = ConvParams::square(5, 3, 3, 2, 1);
  auto t = transpose_conv2d_forward<double>(g, w, {}, tp);
  // (H-1)s - 2p + k may be one short of x when (H + 2p - k) is odd.
  ASSERT_LE(t.shape().h, x.shape().h);
  for (int64_t n = 0; n < 2; ++n)
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t i = 0; i < t.shape().h; ++i)
        for (int64_t j = 0; j < t.shape().w; ++j) EXPECT_NEAR(t.at(n, c, i, j), grads.grad_x.at(n, c, i, j), 1e-6);
}

TEST(TransposeConv2d, InputGradientIsConvolution) {
  std::mt19937_64 rng(22);
  auto p = ConvParams::square(4, 3, 2, 2, 0);
  auto x = oracle::random_tensor<double>({1, 4, 3, 3}, rng);
  auto w = oracle::random_tensor<double>({4, 3, 2, 2}, rng);
  auto g = oracle::random_tensor<double>(p.transpose_output(x.shape()), rng);
  auto grads = transpose_conv2d_backward(x, w, p, g);
  auto want = oracle::direct_conv(g, w, {}, 2, 0);
  EXPECT_LE(max_abs_diff(grads.grad_x, want), 1e-10);
}

TEST(Conv2d, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(23);
  auto p = ConvParams::square(3, 4, 3, 2, 1, true);
  auto x = oracle::random_tensor<double>({2, 3, 6, 7}, rng);
  auto w = oracle::random_tensor<double>({4, 3, 3, 3}, rng);
  auto g = conv2d_backward(x, w, p, Tensor<double>::zeros(p.conv_output(x.shape())));
  auto zero = [](const Tensor<double>& t) { return max_abs_diff(t, Tensor<double>::zeros(t.shape())) == 0.0; };
  EXPECT_TRUE(zero(g.grad_x));
  EXPECT_TRUE(zero(g.grad_w));
  EXPECT_TRUE(zero(g.grad_b));

  auto tp = ConvParams::square(4, 3, 2, 2, 0, true);
  auto tx = oracle::random_tensor<double>({1, 4, 3, 3}, rng);
  auto tw = oracle::random_tensor<double>({4, 3, 2, 2}, rng);
  auto tg = transpose_conv2d_backward(tx, tw, tp, Tensor<double>::zeros(tp.transpose_output(tx.shape())));
  EXPECT_TRUE(zero(tg.grad_x));
  EXPECT_TRUE(zero(tg.grad_w));
  EXPECT_TRUE(zero(tg.grad_b));
}

TEST(Conv2d, PointwiseInputGradientIsTransposedMixing) {
  std::mt19937_64 rng(24);
  auto p = ConvParams::square(3, 4, 1);
  auto x = oracle::random_tensor<double>({2, 3, 4, 5}, rng);
  auto w = oracle::random_tensor<double>({4, 3, 1, 1}, rng);
  auto g = oracle::random_tensor<double>({2, 4, 4, 5}, rng);
  auto grads = conv2d_backward(x, w, p, g);
  for (int64_t n = 0; n < 2; ++n)
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t i = 0; i < 4; ++i)
        for (int64_t j = 0; j < 5; ++j) {
          double want = 0.0;
          for (int64_t o = 0; o < 4; ++o) want += w.at(o, c, 0, 0) * g.at(n, o, i, j);
          EXPECT_NEAR(grads.grad_x.at(n, c, i, j), want, 1e-12);
        }
}

TEST(Conv2d, BackwardMatchesFiniteDifferences) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    auto p = ConvParams::square(3, 2, 3, 2, 1, true);
    auto x = oracle::random_tensor<double>({2, 3, 6, 7}, rng);
    auto w = oracle::random_tensor<double>({2, 3, 3, 3}, rng);
    auto b = oracle::random_tensor<double>({1, 2, 1, 1}, rng);
    auto r = oracle::random_tensor<double>(p.conv_output(x.shape()), rng);
    auto f = [&] { return oracle::dot(conv2d_forward<double>(x, w, b.data(), p), r); };
    auto g = conv2d_backward(x, w, p, r);
    EXPECT_LT(oracle::max_rel_error(g.grad_x, oracle::numeric_gradient(x, f)), 1e-4);
    EXPECT_LT(oracle::max_rel_error(g.grad_w, oracle::numeric_gradient(w, f)), 1e-4);
    EXPECT_LT(oracle::max_rel_error(g.grad_b.reshaped(b.shape()), oracle::numeric_gradient(b, f)), 1e-4);
  }
}

TEST(TransposeConv2d, BackwardMatchesFiniteDifferences) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    auto p = ConvParams::square(4, 3, 2, 2, 0, true);
    auto x = oracle::random_tensor<double>({1, 4, 3, 3}, rng);
    auto w = oracle::random_tensor<double>({4, 3, 2, 2}, rng);
    auto b = oracle::random_tensor<double>({1, 3, 1, 1}, rng);
    auto r = oracle::random_tensor<double>(p.transpose_output(x.shape()), rng);
    auto f = [&] { return oracle::dot(transpose_conv2d_forward<double>(x, w, b.data(), p), r); };
    auto g = transpose_conv2d_backward(x, w, p, r);
    EXPECT_LT(oracle::max_rel_error(g.grad_x, oracle::numeric_gradient(x, f)), 1e-4);
    EXPECT_LT(oracle::max_rel_error(g.grad_w, oracle::numeric_gradient(w, f)), 1e-4);
    EXPECT_LT(oracle::max_rel_error(g.grad_b.reshaped(b.shape()), oracle::numeric_gradient(b, f)), 1e-4);
  }
}

TEST(BatchNorm, TrainModeNormalizesPerChannel) {
  std::mt19937_64 rng(31);
  auto x = oracle::random_tensor<double>({4, 3, 5, 5}, rng, -3, 7);
  BatchNormState<double> st(3);
  auto y = batchnorm_forward(x, st, Mode::train);
  for (int64_t c = 0; c < 3; ++c) {
    double s = 0, ss = 0;
    int64_t cnt = 0;
    for (int64_t n = 0; n < 4; ++n)
      for (int64_t i = 0; i < 25; ++i) {
        double v = y.plane(n, c)[i];
        s += v;
        ss += v * v;
        ++cnt;
      }
    double mean = s / cnt;
    EXPECT_LT(std::abs(mean), 1e-5);
    EXPECT_LT(std::abs(ss / cnt - mean * mean - 1.0), 1e-3);
  }
}

TEST(BatchNorm, EvalWithIdentityStatsPassesThrough) {
  std::mt19937_64 rng(32);
  auto x = oracle::random_tensor<double>({2, 3, 4, 4}, rng);
  BatchNormState<double> st(3);
  auto y = batchnorm_forward(x, st, Mode::eval);
  for (int64_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(y[i], x[i] / std::sqrt(1.0 + st.eps), 1e-15);
}

TEST(BatchNorm, RunningStatsFollowReferenceLoop) {
  std::mt19937_64 rng(33);
  BatchNormState<double> st(2);
  double rm[2] = {0, 0}, rv[2] = {1, 1};
  for (int step = 0; step < 2; ++step) {
    auto x = oracle::random_tensor<double>({3, 2, 4, 4}, rng, -2, 5);
    batchnorm_forward(x, st, Mode::train);
    for (int64_t c = 0; c < 2; ++c) {
      double s = 0;
      for (int64_t n = 0; n < 3; ++n)
        for (int64_t i = 0; i < 16; ++i) s += x.plane(n, c)[i];
      double mean = s / 48;
      double q = 0;
      for (int64_t n = 0; n < 3; ++n)
        for (int64_t i = 0; i < 16; ++i) q += (x.plane(n, c)[i] - mean) * (x.plane(n, c)[i] - mean);
      rm[c] = 0.9 * rm[c] + 0.1 * mean;
      rv[c] = 0.9 * rv[c] + 0.1 * q / 47;
    }
  }
  for (int64_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(st.running_mean[c], rm[c], 1e-12);
    EXPECT_NEAR(st.running_var[c], rv[c], 1e-12);
  }
}

TEST(BatchNorm, BackwardMatchesFiniteDifferences) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    auto x = oracle::random_tensor<double>({3, 2, 4, 4}, rng);
    BatchNormState<double> st(2);
    st.gamma = oracle::random_tensor<double>({1, 2, 1, 1}, rng, 0.5, 1.5);
    st.beta = oracle::random_tensor<double>({1, 2, 1, 1}, rng);
    auto r = oracle::random_tensor<double>(x.shape(), rng);
    auto f = [&] {
      BatchNormState<double> tmp = st;
      return oracle::dot(batchnorm_forward(x, tmp, Mode::train), r);
    };
    BatchNormCache<double> cache;
    BatchNormState<double> tmp = st;
    batchnorm_forward(x, tmp, Mode::train, &cache);
    auto g = batchnorm_backward(st, cache, r);
    EXPECT_LT(oracle::max_rel_error(g.grad_x, oracle::numeric_gradient(x, f)), 1e-4);
    EXPECT_LT(oracle::max_rel_error(g.grad_gamma, oracle::numeric_gradient(st.gamma, f)), 1e-4);
    EXPECT_LT(oracle::max_rel_error(g.grad_beta, oracle::numeric_gradient(st.beta, f)), 1e-4);
  }
}

TEST(BatchNorm, ChannelMismatchThrows) {
  BatchNormState<float> st(3);
  EXPECT_THROW(batchnorm_forward(Tensor<float>({1, 2, 2, 2}), st, Mode::eval), ShapeError);
}

TEST(Relu, Examples) {
  auto neg = Tensor<float>::full({1, 2, 3, 3}, -0.5f);
  EXPECT_EQ(max_abs_diff(relu_forward(neg), Tensor<float>::zeros(neg.shape())), 0.0);
  std::mt19937_64 rng(41);
  auto pos = oracle::random_tensor<float>({1, 2, 3, 3}, rng, 0, 2);
  EXPECT_EQ(max_abs_diff(relu_forward(pos), pos), 0.0);
  auto x = oracle::random_tensor<double>({1, 2, 3, 3}, rng);
  auto g = oracle::random_tensor<double>(x.shape(), rng);
  auto gx = relu_backward(x, g);
  for (int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(gx[i], x[i] > 0 ? g[i] : 0.0);
}

TEST(MaxPool, StemShape) {
  EXPECT_EQ(PoolParams{}.output({1, 64, 240, 320}), (Shape{1, 64, 120, 160}));
}

TEST(MaxPool, ConstantInputRoutesEachGradientOnce) {
  auto x = Tensor<double>::full({1, 2, 6, 7}, 2.0);
  auto r = maxpool_forward(x);
  for (double v : r.output.data()) EXPECT_EQ(v, 2.0);
  auto g = Tensor<double>::ones(r.output.shape());
  auto gx = maxpool_backward(x.shape(), r.argmax, g);
  EXPECT_EQ(reduce_sum(gx), static_cast<double>(r.output.numel()));
  for (size_t i = 0; i < r.argmax.size(); ++i) {
    // First element of the window in scan order.
    int64_t plane = static_cast<int64_t>(i) / r.output.shape().plane();
    int64_t oy = (static_cast<int64_t>(i) % r.output.shape().plane()) / r.output.shape().w;
    int64_t ox = static_cast<int64_t>(i) % r.output.shape().w;
    int64_t y0 = std::max<int64_t>(0, oy * 2 - 1), x0 = std::max<int64_t>(0, ox * 2 - 1);
    EXPECT_EQ(r.argmax[i], plane * 42 + y0 * 7 + x0);
  }
}

TEST(MaxPool, MatchesWindowScan) {
  std::mt19937_64 rng(43);
  auto x = oracle::random_tensor<double>({1, 2, 7, 9}, rng);
  auto r = maxpool_forward(x);
  const auto& os = r.output.shape();
  for (int64_t c = 0; c < 2; ++c)
    for (int64_t i = 0; i < os.h; ++i)
      for (int64_t j = 0; j < os.w; ++j) {
        double best = -INFINITY;
        int64_t arg = -1;
        for (int64_t a = 0; a < 3; ++a)
          for (int64_t b = 0; b < 3; ++b) {
            int64_t y = i * 2 - 1 + a, xx = j * 2 - 1 + b;
            if (y < 0 || y >= 7 || xx < 0 || xx >= 9) continue;
            if (x.at(0, c, y, xx) > best) {
              best = x.at(0, c, y, xx);
              arg = x.index(0, c, y, xx);
            }
          }
        EXPECT_EQ(r.output.at(0, c, i, j), best);
        EXPECT_EQ(r.argmax[r.output.index(0, c, i, j)], arg);
      }
}

TEST(Resize, IdentityBothModes) {
  std::mt19937_64 rng(51);
  auto x = oracle::random_tensor<float>({1, 3, 5, 7}, rng);
  EXPECT_EQ(max_abs_diff(resize_nearest(x, 5, 7), x), 0.0);
  EXPECT_LE(max_abs_diff(resize_bilinear(x, 5, 7), x), 1e-7);
}

TEST(Resize, NearestUpsampleRepeatsBlocks) {
  Tensor<float> x({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  auto y = resize_nearest(x, 4, 4);
  const float want[16] = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  for (int i = 0; i < 16; ++i) EXPECT_EQ(y[i], want[i]);
}

TEST(Resize, NearestDownsampleFollowsFloorFormula) {
  LabelMap grid(1, 480, 640);
  for (int64_t i = 0; i < 480; ++i)
    for (int64_t j = 0; j < 640; ++j) grid.at(0, i, j) = static_cast<int32_t>(i * 640 + j);
  auto small = resize_nearest(grid, 30, 40);
  for (int64_t i = 0; i < 30; ++i)
    for (int64_t j = 0; j < 40; ++j) {
      int64_t si = static_cast<int64_t>(std::floor((i + 0.5) * 16.0));
      int64_t sj = static_cast<int64_t>(std::floor((j + 0.5) * 16.0));
      EXPECT_EQ(small.at(0, i, j), si * 640 + sj);
    }
}

TEST(Resize, BilinearConstantAndMidpoint) {
  auto c = Tensor<float>::full({1, 1, 3, 5}, 0.25f);
  auto y = resize_bilinear(c, 7, 4);
  for (float v : y.data()) EXPECT_FLOAT_EQ(v, 0.25f);
  Tensor<double> x({1, 1, 1, 2}, std::vector<double>{0, 1});
  auto u = resize_bilinear(x, 1, 4);
  // Half-pixel centers: sources -0.25, 0.25, 0.75, 1.25 clamped to [0, 1].
  EXPECT_DOUBLE_EQ(u[0], 0.0);
  EXPECT_DOUBLE_EQ(u[1], 0.25);
  EXPECT_DOUBLE_EQ(u[2], 0.75);
  EXPECT_DOUBLE_EQ(u[3], 1.0);
}

TEST(CrossEntropy, UniformScoresGiveLogClasses) {
  Tensor<double> s({2, 4, 3, 3}, 0.7);
  std::mt19937_64 rng(61);
  auto l = oracle::random_labels(2, 3, 3, 1, 4, rng);
  auto r = weighted_softmax_cross_entropy<double>(s, l, {});
  EXPECT_NEAR(r.loss, std::log(4.0), 1e-12);
  EXPECT_EQ(r.counted, 18);
}

TEST(CrossEntropy, AllIgnoredIsZero) {
  std::mt19937_64 rng(62);
  auto s = oracle::random_tensor<double>({1, 3, 2, 2}, rng);
  auto r = weighted_softmax_cross_entropy<double>(s, LabelMap(1, 2, 2), {});
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.counted, 0);
  EXPECT_EQ(max_abs_diff(r.grad, Tensor<double>::zeros(s.shape())), 0.0);
}

TEST(CrossEntropy, MatchesExplicitLoops) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    auto s = oracle::random_tensor<double>({1, 5, 3, 3}, rng, -3, 3);
    auto l = oracle::random_labels(1, 3, 3, 0, 5, rng);
    std::vector<double> alpha = {0.5, 1.0, 2.0, 0.25, 3.0};
    Tensor<double> want_grad;
    double want = oracle::explicit_cross_entropy(s, l, alpha, want_grad);
    auto r = weighted_softmax_cross_entropy<double>(s, l, alpha);
    EXPECT_LT(std::abs(r.loss - want) / std::abs(want), 1e-6);
    EXPECT_LT(oracle::max_rel_error(r.grad, want_grad), 1e-4);
  }
}

TEST(CrossEntropy, LargeMarginLossVanishes) {
  Tensor<double> s({1, 3, 2, 2}, 0.0);
  LabelMap l(1, 2, 2);
  for (int64_t i = 0; i < 4; ++i) {
    l.data[i] = static_cast<int32_t>(i % 3) + 1;
    s.at(0, i % 3, i / 2, i % 2) = 20.0;
  }
  EXPECT_LT(weighted_softmax_cross_entropy<double>(s, l, {}).loss, 1e-6);
}

TEST(CrossEntropy, StableForHugeLogits) {
  Tensor<float> s({1, 2, 1, 1}, std::vector<float>{1000.f, -1000.f});
  LabelMap l(1, 1, 1, 2);
  auto r = weighted_softmax_cross_entropy<float>(s, l, {});
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_NEAR(r.loss, 2000.0, 1e-3);
}

TEST(CrossEntropy, RejectsOutOfRangeLabel) {
  Tensor<double> s({1, 3, 1, 2});
  LabelMap l(1, 1, 2, 1);
  l.data[1] = 4;
  EXPECT_THROW(weighted_softmax_cross_entropy<double>(s, l, {}), DataError);
}

}  // namespace
}  // namespace rednet
