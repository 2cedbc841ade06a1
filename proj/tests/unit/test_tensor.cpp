#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rednet/rten.hpp"
#include "rednet/tensor.hpp"

namespace rednet {
namespace {

TEST(Shape, NumelChecksDimensionsAndOverflow) {
  EXPECT_EQ((Shape{2, 3, 4, 5}.numel()), 120);
  EXPECT_THROW((Shape{0, 1, 1, 1}.numel()), ShapeError);
  EXPECT_THROW((Shape{1, -2, 1, 1}.numel()), ShapeError);
  const int64_t big = int64_t{1} << 22;
  EXPECT_THROW((Shape{big, big, big, 1}.numel()), ShapeError);
  EXPECT_THROW(Tensor<float>(Shape{1, 1, 0, 3}), ShapeError);
}

TEST(Tensor, BufferLengthMustMatchShape) {
  EXPECT_THROW(Tensor<float>(Shape{1, 1, 2, 2}, std::vector<float>(3)), ShapeError);
  Tensor<float> t(Shape{2, 3, 4, 5});
  EXPECT_EQ(t.numel(), 120);
}

TEST(Tensor, FlatIndexRoundTrip) {
  Tensor<double> t(Shape{2, 3, 4, 5});
  const auto& s = t.shape();
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t h = 0; h < s.h; ++h)
        for (int64_t w = 0; w < s.w; ++w) t.at(n, c, h, w) = static_cast<double>(((n * 3 + c) * 4 + h) * 5 + w);
  for (int64_t i = 0; i < t.numel(); ++i) EXPECT_EQ(t[i], static_cast<double>(i));
}

TEST(Elementwise, AddExamples) {
  std::mt19937_64 rng(3);
  auto x = oracle::random_tensor<double>({1, 2, 2, 2}, rng);
  auto z = Tensor<double>::zeros({1, 2, 2, 2});
  EXPECT_EQ(max_abs_diff(elementwise_add(z, x), x), 0.0);
  EXPECT_EQ(max_abs_diff(elementwise_add(x, scale(x, -1.0)), z), 0.0);

  Tensor<float> a({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  Tensor<float> b({1, 1, 2, 2}, std::vector<float>{10, 20, 30, 40});
  Tensor<float> want({1, 1, 2, 2}, std::vector<float>{11, 22, 33, 44});
  EXPECT_EQ(max_abs_diff(elementwise_add(a, b), want), 0.0);
}

TEST(Elementwise, AddIsCommutativeBitwise) {
  std::mt19937_64 rng(5);
  auto a = oracle::random_tensor<float>({2, 3, 4, 5}, rng);
  auto b = oracle::random_tensor<float>({2, 3, 4, 5}, rng);
  auto ab = elementwise_add(a, b);
  auto ba = elementwise_add(b, a);
  EXPECT_EQ(std::memcmp(ab.ptr(), ba.ptr(), sizeof(float) * ab.numel()), 0);
}

TEST(Elementwise, MismatchNamesBothShapes) {
  Tensor<float> a({1, 2, 3, 4});
  Tensor<float> b({1, 2, 4, 3});
  try {
    elementwise_add(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find(a.shape().str()), std::string::npos) << msg;
    EXPECT_NE(msg.find(b.shape().str()), std::string::npos) << msg;
  }
}

TEST(Elementwise, ScaleExamples) {
  std::mt19937_64 rng(7);
  auto a = oracle::random_tensor<double>({1, 2, 3, 3}, rng);
  EXPECT_EQ(max_abs_diff(scale(a, 1.0), a), 0.0);
  EXPECT_EQ(max_abs_diff(scale(a, 0.0), Tensor<double>::zeros(a.shape())), 0.0);
  Tensor<double> v({1, 1, 1, 2}, std::vector<double>{2, 4});
  auto h = scale(v, 0.5);
  EXPECT_EQ(h[0], 1.0);
  EXPECT_EQ(h[1], 2.0);
}

TEST(Reduce, Examples) {
  auto ones = Tensor<float>::ones({1, 1, 2, 2});
  EXPECT_EQ(reduce_mean(ones), 1.0);
  EXPECT_EQ(reduce_sum(ones), 4.0);
  Tensor<float> v({1, 1, 1, 4}, std::vector<float>{1, 2, 3, 4});
  EXPECT_EQ(reduce_mean(v), 2.5);
}

TEST(Reduce, SumMatchesNaiveLoopBitwise) {
  std::mt19937_64 rng(11);
  auto a = oracle::random_tensor<double>({3, 5, 7, 2}, rng, -100, 100);
  double naive = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) naive += a[i];
  EXPECT_EQ(reduce_sum(a), naive);
}

TEST(Rten, RoundTripAllDtypes) {
  std::mt19937_64 rng(13);
  auto f = oracle::random_tensor<float>({2, 3, 4, 5}, rng);
  auto d = oracle::random_tensor<double>({1, 2, 3, 1}, rng);
  auto l = oracle::random_labels(2, 3, 4, 0, 9, rng);

  std::stringstream sf, sd, sl;
  write_rten(sf, f);
  write_rten(sd, d);
  write_rten(sl, l);
  auto f2 = read_rten<float>(sf);
  auto d2 = read_rten<double>(sd);
  auto l2 = read_rten_labels(sl);
  EXPECT_EQ(f2.shape(), f.shape());
  EXPECT_EQ(std::memcmp(f2.ptr(), f.ptr(), sizeof(float) * f.numel()), 0);
  EXPECT_EQ(std::memcmp(d2.ptr(), d.ptr(), sizeof(double) * d.numel()), 0);
  EXPECT_EQ(l2, l);
}

TEST(Rten, HeaderLayout) {
  Tensor<float> t({1, 2, 3, 4}, 1.5f);
  std::stringstream ss;
  write_rten(ss, t);
  std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 1 + 1 + 32 + 4 * 24);
  EXPECT_EQ(bytes.substr(0, 4), "RTEN");
  EXPECT_EQ(static_cast<uint8_t>(bytes[4]), 1);
  EXPECT_EQ(static_cast<uint8_t>(bytes[5]), 1);
  const uint8_t dims[] = {1, 2, 3, 4};
  for (int d = 0; d < 4; ++d) {
    EXPECT_EQ(static_cast<uint8_t>(bytes[6 + 8 * d]), dims[d]);
    for (int k = 1; k < 8; ++k) EXPECT_EQ(bytes[6 + 8 * d + k], 0);
  }
}

TEST(Rten, RejectsCorruptInput) {
  std::stringstream bad_magic("RTEX\x01\x01");
  EXPECT_THROW(read_rten<float>(bad_magic), DataError);

  Tensor<float> t({1, 1, 2, 2}, 1.0f);
  std::stringstream ss;
  write_rten(ss, t);
  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_rten<float>(truncated), DataError);
  bytes[4] = 9;
  std::stringstream version(bytes);
  EXPECT_THROW(read_rten<float>(version), DataError);
}

}  // namespace
}  // namespace rednet
