#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rednet/units.hpp"

namespace rednet {

/// One residual layer: channels in (m), channels out (n), unit count.
struct LayerPlan {
  int in_channels = 0;
  int out_channels = 0;
  int units = 0;

  bool operator==(const LayerPlan&) const = default;
};

/// Full wiring of the dual-branch encoder / residual decoder network.
struct NetworkConfig {
  int encoder_depth = 50;  // 34 (basic units) or 50 (bottleneck units + agent layers)
  int num_classes = 37;
  int height = 480;
  int width = 640;
  int stem_channels = 64;
  std::array<LayerPlan, 4> encoder{};      // Layer1..Layer4
  std::array<LayerPlan, 5> decoder{};      // Trans1..Trans5
  std::array<int, 5> agent_channels{};     // projections of fuse0..fuse4 (depth 50 only)

  static NetworkConfig resnet50(int num_classes = 37, int height = 480, int width = 640);
  static NetworkConfig resnet34(int num_classes = 37, int height = 480, int width = 640);
  static NetworkConfig for_depth(int encoder_depth, int num_classes = 37, int height = 480, int width = 640);

  /// Divides every channel count by `divisor`; the class count is unchanged.
  NetworkConfig scaled(int divisor) const;

  bool has_agents() const { return encoder_depth == 50; }
  /// Whether the stride-2 stem output is skipped into Trans4.
  bool has_stem_skip() const { return encoder_depth == 50; }
  UnitKind encoder_unit() const { return encoder_depth == 50 ? UnitKind::bottleneck : UnitKind::basic; }

  /// Throws ConfigError describing the first inconsistency.
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

inline constexpr int kPyramidLevels = 5;
/// Downsampling factor of out1..out4 and the final output.
inline constexpr std::array<int, kPyramidLevels> kPyramidFactors = {16, 8, 4, 2, 1};
inline constexpr std::array<const char*, kPyramidLevels> kPyramidNames = {"out1", "out2", "out3", "out4", "final"};

/// Score maps of the four side heads and the final head (also used for their gradients).
template <typename T>
struct PyramidOutputs {
  std::array<Tensor<T>, kPyramidLevels> maps;

  Tensor<T>& operator[](int i) { return maps[i]; }
  const Tensor<T>& operator[](int i) const { return maps[i]; }
  Tensor<T>& final() { return maps[kPyramidLevels - 1]; }
  const Tensor<T>& final() const { return maps[kPyramidLevels - 1]; }
};

/// Introspected (m, n, l_unit) of a built layer; units = 0 for Conv1.
struct LayerSummary {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int units = 0;

  bool operator==(const LayerSummary&) const = default;
};

template <typename T>
class RedNet {
 public:
  /// Parameters start at zero (batch norm at identity); see build().
  explicit RedNet(const NetworkConfig& config);

  /// Xavier-uniform convolution weights, zero biases, deterministic per seed.
  static RedNet build(const NetworkConfig& config, uint64_t seed);
  void initialize(uint64_t seed);

  /// rgb: [N,3,H,W], depth: [N,1,H,W], with H and W multiples of 32.
  PyramidOutputs<T> forward(const Tensor<T>& rgb, const Tensor<T>& depth, Mode mode);

  /// Accumulates parameter gradients from the gradients of all five heads.
  /// Requires a preceding train-mode forward.
  void backward(const PyramidOutputs<T>& grads);

  ParamSet<T> parameters();
  void zero_grad() { parameters().zero_grad(); }

  const NetworkConfig& config() const { return config_; }
  std::vector<LayerSummary> layer_table() const;
  /// Unit specs of "layer1".."layer4" (RGB branch) or "trans1".."trans5".
  std::vector<UnitSpec> unit_specs(const std::string& layer) const;

 private:
  struct Branch {
    ConvBnAct<T> stem;
    std::array<std::vector<ResidualUnit<T>>, 4> layers;
    std::vector<int64_t> pool_argmax;
    Shape pool_input;
  };

  void build_branch(Branch& branch, int in_channels);

  NetworkConfig config_;
  Branch rgb_;
  Branch depth_;
  std::vector<ConvBnAct<T>> agents_;
  std::array<std::vector<ResidualUnit<T>>, 5> trans_;
  std::array<Conv2d<T>, 4> heads_;
  ConvTranspose2d<T> final_;
  bool cached_ = false;
};

/// Copies parameters and running statistics between networks of equal
/// configuration, converting precision.
template <typename To, typename From>
void copy_state(RedNet<From>& from, RedNet<To>& to);

}  // namespace rednet
