#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "rednet/gemm.hpp"
#include "rednet/model.hpp"
#include "rednet/ops.hpp"
#include "rednet/supervision.hpp"
#include "rednet/units.hpp"

using namespace rednet;

namespace {

void BM_Gemm(benchmark::State& state) {
  const int64_t n = state.range(0);
  std::vector<float> a(n * n, 0.5f), b(n * n, 0.25f), c(n * n);
  for (auto _ : state) {
    blas::gemm_nn<float>(n, n, n, a.data(), n, b.data(), n, c.data(), n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(256)->Arg(512);

struct ConvCase {
  Tensor<float> x, w;
  std::vector<float> bias;
  ConvParams p;
};

ConvCase conv_case(int channels, int size) {
  std::mt19937_64 rng(1);
  ConvCase c{oracle::random_tensor<float>({1, channels, size, size}, rng),
             oracle::random_tensor<float>({channels, channels, 3, 3}, rng), std::vector<float>(channels, 0.1f),
             ConvParams::square(channels, channels, 3, 1, 1, true)};
  return c;
}

void BM_ConvIm2col(benchmark::State& state) {
  auto c = conv_case(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward<float>(c.x, c.w, c.bias, c.p));
}
BENCHMARK(BM_ConvIm2col)->Args({16, 64})->Args({64, 32});

void BM_ConvDirect(benchmark::State& state) {
  auto c = conv_case(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(oracle::direct_conv(c.x, c.w, c.bias, 1, 1));
}
BENCHMARK(BM_ConvDirect)->Args({16, 64})->Args({64, 32});

void BM_Unit(benchmark::State& state) {
  const auto kind = static_cast<UnitKind>(state.range(0));
  const auto spatial = kind == UnitKind::upsample ? SpatialMode::up2 : SpatialMode::keep;
  const int channels = 64;
  ResidualUnit<float> unit(UnitSpec::make(kind, channels, channels, spatial));
  std::mt19937_64 rng(2);
  const auto x = oracle::random_tensor<float>({2, channels, 32, 32}, rng);
  for (auto _ : state) {
    auto y = unit.forward(x, Mode::train);
    benchmark::DoNotOptimize(unit.backward(y));
  }
}
BENCHMARK(BM_Unit)
    ->Arg(static_cast<int>(UnitKind::bottleneck))
    ->Arg(static_cast<int>(UnitKind::basic))
    ->Arg(static_cast<int>(UnitKind::upsample));

void BM_ToyModelStep(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  auto net = RedNet<float>::build(NetworkConfig::for_depth(depth, 4, 64, 64).scaled(8), 1);
  std::mt19937_64 rng(3);
  const auto rgb = oracle::random_tensor<float>({8, 3, 64, 64}, rng);
  const auto depth_map = oracle::random_tensor<float>({8, 1, 64, 64}, rng);
  const auto targets = build_pyramid_targets(oracle::random_labels(8, 64, 64, 1, 4, rng), 64, 64);
  const auto weights = ClassWeights::uniform(4);
  for (auto _ : state) {
    net.zero_grad();
    auto out = net.forward(rgb, depth_map, Mode::train);
    auto loss = pyramid_loss(out, targets, weights);
    net.backward(loss.grads);
    benchmark::DoNotOptimize(loss.total);
  }
}
BENCHMARK(BM_ToyModelStep)->Arg(50)->Arg(34)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
