#include "rednet/model.hpp"

#include <random>
#include <stdexcept>

#include "rednet/init.hpp"

namespace rednet {
namespace {

template <typename T>
Tensor<T> run_layer(std::vector<ResidualUnit<T>>& layer, Tensor<T> x, Mode mode) {
  for (auto& unit : layer) x = unit.forward(x, mode);
  return x;
}

template <typename T>
Tensor<T> back_layer(std::vector<ResidualUnit<T>>& layer, Tensor<T> g) {
  for (auto it = layer.rbegin(); it != layer.rend(); ++it) g = it->backward(g);
  return g;
}

template <typename T>
Tensor<T> junction_sum(const Tensor<T>& a, const Tensor<T>& b, const std::string& junction) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("junction " + junction + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  return elementwise_add(a, b);
}

template <typename T>
void add_or_assign(Tensor<T>& into, const Tensor<T>& g) {
  if (g.empty()) return;
  if (into.empty()) {
    into = g;
  } else {
    add_inplace(into, g);
  }
}

int divide(int channels, int divisor, const char* what) {
  if (channels % divisor != 0) {
    throw ConfigError(std::string("channel count of ") + what + " (" + std::to_string(channels) +
                      ") is not divisible by " + std::to_string(divisor));
  }
  return channels / divisor;
}

}  // namespace

NetworkConfig NetworkConfig::resnet50(int num_classes, int height, int width) {
  NetworkConfig c;
  c.encoder_depth = 50;
  c.num_classes = num_classes;
  c.height = height;
  c.width = width;
  c.stem_channels = 64;
  c.encoder = {{{64, 256, 3}, {256, 512, 4}, {512, 1024, 6}, {1024, 2048, 3}}};
  c.decoder = {{{512, 256, 6}, {256, 128, 4}, {128, 64, 3}, {64, 64, 3}, {64, 64, 3}}};
  c.agent_channels = {64, 64, 128, 256, 512};
  return c;
}

NetworkConfig NetworkConfig::resnet34(int num_classes, int height, int width) {
  NetworkConfig c = resnet50(num_classes, height, width);
  c.encoder_depth = 34;
  c.encoder = {{{64, 64, 3}, {64, 128, 4}, {128, 256, 6}, {256, 512, 3}}};
  c.agent_channels = {0, 0, 0, 0, 0};
  return c;
}

NetworkConfig NetworkConfig::for_depth(int encoder_depth, int num_classes, int height, int width) {
  if (encoder_depth == 50) return resnet50(num_classes, height, width);
  if (encoder_depth == 34) return resnet34(num_classes, height, width);
  throw ConfigError("encoder depth must be 34 or 50, got " + std::to_string(encoder_depth));
}

NetworkConfig NetworkConfig::scaled(int divisor) const {
  if (divisor < 1) throw ConfigError("channel divisor must be >= 1");
  NetworkConfig c = *this;
  c.stem_channels = divide(stem_channels, divisor, "conv1");
  for (auto& l : c.encoder) {
    l.in_channels = divide(l.in_channels, divisor, "encoder layer");
    l.out_channels = divide(l.out_channels, divisor, "encoder layer");
  }
  for (auto& l : c.decoder) {
    l.in_channels = divide(l.in_channels, divisor, "decoder layer");
    l.out_channels = divide(l.out_channels, divisor, "decoder layer");
  }
  for (auto& a : c.agent_channels) a = divide(a, divisor, "agent layer");
  return c;
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("network config: " + msg); };
  if (encoder_depth != 34 && encoder_depth != 50) fail("encoder_depth must be 34 or 50");
  if (num_classes < 1) fail("num_classes must be >= 1");
  if (height < 32 || width < 32 || height % 32 != 0 || width % 32 != 0) {
    fail("height and width must be positive multiples of 32, got " + std::to_string(height) + "x" +
         std::to_string(width));
  }
  if (stem_channels < 1) fail("stem channels must be >= 1");
  int prev = stem_channels;
  for (size_t i = 0; i < encoder.size(); ++i) {
    const auto& l = encoder[i];
    const std::string name = "Layer" + std::to_string(i + 1);
    if (l.units < 1) fail(name + " needs at least one unit");
    if (l.in_channels != prev) fail(name + " m=" + std::to_string(l.in_channels) + " does not follow " + std::to_string(prev));
    if (encoder_depth == 50 && l.out_channels % 4 != 0) fail(name + " n must be divisible by 4");
    prev = l.out_channels;
  }
  std::array<int, 5> skip_channels{};
  if (has_agents()) {
    for (int a : agent_channels) {
      if (a < 1) fail("agent channels must be >= 1");
    }
    skip_channels = agent_channels;
  } else {
    skip_channels = {stem_channels, encoder[0].out_channels, encoder[1].out_channels, encoder[2].out_channels,
                     encoder[3].out_channels};
  }
  prev = skip_channels[4];
  for (size_t j = 0; j < decoder.size(); ++j) {
    const auto& l = decoder[j];
    const std::string name = "Trans" + std::to_string(j + 1);
    if (l.units < 1) fail(name + " needs at least one unit");
    if (l.in_channels != prev) fail(name + " m=" + std::to_string(l.in_channels) + " does not follow " + std::to_string(prev));
    if (j < 4) {
      const bool skipped = has_stem_skip() || j < 3;
      if (skipped && l.out_channels != skip_channels[3 - j]) {
        fail(name + " n=" + std::to_string(l.out_channels) + " cannot sum with a " +
             std::to_string(skip_channels[3 - j]) + "-channel skip");
      }
    } else if (l.in_channels != l.out_channels) {
      fail(name + " keeps resolution and needs m == n");
    }
    prev = l.out_channels;
  }
}

template <typename T>
void RedNet<T>::build_branch(Branch& branch, int in_channels) {
  branch.stem = ConvBnAct<T>(ConvKind::conv, ConvParams::square(in_channels, config_.stem_channels, 7, 2, 3), true);
  for (size_t i = 0; i < 4; ++i) {
    const auto& plan = config_.encoder[i];
    auto& layer = branch.layers[i];
    layer.reserve(plan.units);
    const SpatialMode first = i == 0 ? SpatialMode::keep : SpatialMode::down2;
    layer.emplace_back(UnitSpec::make(config_.encoder_unit(), plan.in_channels, plan.out_channels, first));
    for (int u = 1; u < plan.units; ++u) {
      layer.emplace_back(UnitSpec::make(config_.encoder_unit(), plan.out_channels, plan.out_channels, SpatialMode::keep));
    }
  }
}

template <typename T>
RedNet<T>::RedNet(const NetworkConfig& config) : config_(config) {
  config_.validate();
  build_branch(rgb_, 3);
  build_branch(depth_, 1);
  if (config_.has_agents()) {
    const std::array<int, 5> sources = {config_.stem_channels, config_.encoder[0].out_channels,
                                        config_.encoder[1].out_channels, config_.encoder[2].out_channels,
                                        config_.encoder[3].out_channels};
    for (size_t i = 0; i < 5; ++i) {
      agents_.emplace_back(ConvKind::conv, ConvParams::square(sources[i], config_.agent_channels[i], 1), true);
    }
  }
  for (size_t j = 0; j < 5; ++j) {
    const auto& plan = config_.decoder[j];
    auto& layer = trans_[j];
    const bool upsamples = j < 4;
    const int plain = upsamples ? plan.units - 1 : plan.units;
    for (int u = 0; u < plain; ++u) {
      layer.emplace_back(UnitSpec::make(UnitKind::basic, plan.in_channels, plan.in_channels, SpatialMode::keep));
    }
    if (upsamples) {
      layer.emplace_back(UnitSpec::make(UnitKind::upsample, plan.in_channels, plan.out_channels, SpatialMode::up2));
    }
    if (j < 4) heads_[j] = Conv2d<T>(ConvParams::square(plan.out_channels, config_.num_classes, 1, 1, 0, true));
  }
  final_ = ConvTranspose2d<T>(ConvParams::square(config_.decoder[4].out_channels, config_.num_classes, 2, 2, 0, true));
}

template <typename T>
RedNet<T> RedNet<T>::build(const NetworkConfig& config, uint64_t seed) {
  RedNet net(config);
  net.initialize(seed);
  return net;
}

template <typename T>
void RedNet<T>::initialize(uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto set = parameters();
  for (auto& p : set.params) {
    switch (p.kind) {
      case ParamKind::weight:
        *p.value = xavier_init<T>(p.value->shape(), rng);
        break;
      case ParamKind::bias:
      case ParamKind::bn_beta:
        p.value->fill(T(0));
        break;
      case ParamKind::bn_gamma:
        p.value->fill(T(1));
        break;
    }
  }
  for (auto& b : set.buffers) {
    const bool is_var = b.name.size() >= 3 && b.name.compare(b.name.size() - 3, 3, "var") == 0;
    b.value->fill(is_var ? T(1) : T(0));
  }
}

template <typename T>
PyramidOutputs<T> RedNet<T>::forward(const Tensor<T>& rgb, const Tensor<T>& depth, Mode mode) {
  const Shape& rs = rgb.shape();
  const Shape& ds = depth.shape();
  if (rs.c != 3) throw ShapeError("rgb input must have 3 channels, got " + rs.str());
  if (ds.c != 1) throw ShapeError("depth input must have 1 channel, got " + ds.str());
  if (rs.n != ds.n || rs.h != ds.h || rs.w != ds.w) {
    throw ShapeError("rgb " + rs.str() + " and depth " + ds.str() + " disagree");
  }
  if (rs.h % 32 != 0 || rs.w % 32 != 0) {
    throw ShapeError("input " + rs.str() + ": height and width must be multiples of 32");
  }

  std::array<Tensor<T>, 5> fuse;
  Tensor<T> f0 = rgb_.stem.forward(rgb, mode);
  Tensor<T> d = depth_.stem.forward(depth, mode);
  fuse[0] = junction_sum(f0, d, "fuse0 (Conv1 + Conv1_d)");
  auto pooled_rgb = maxpool_forward(fuse[0]);
  auto pooled_depth = maxpool_forward(d);
  if (mode == Mode::train) {
    rgb_.pool_input = fuse[0].shape();
    rgb_.pool_argmax = std::move(pooled_rgb.argmax);
    depth_.pool_input = d.shape();
    depth_.pool_argmax = std::move(pooled_depth.argmax);
  }
  Tensor<T> x = std::move(pooled_rgb.output);
  d = std::move(pooled_depth.output);
  for (size_t i = 0; i < 4; ++i) {
    x = run_layer(rgb_.layers[i], std::move(x), mode);
    d = run_layer(depth_.layers[i], std::move(d), mode);
    const std::string n = std::to_string(i + 1);
    fuse[i + 1] = junction_sum(x, d, "fuse" + n + " (Layer" + n + " + Layer" + n + "_d)");
    x = fuse[i + 1];
  }

  std::array<Tensor<T>, 5> skip;
  for (size_t i = 0; i < 5; ++i) {
    skip[i] = config_.has_agents() ? agents_[i].forward(fuse[i], mode) : std::move(fuse[i]);
  }

  PyramidOutputs<T> out;
  x = std::move(skip[4]);
  for (int j = 0; j < 4; ++j) {
    x = run_layer(trans_[j], std::move(x), mode);
    const int s = 3 - j;
    if (!skip[s].empty() && (config_.has_stem_skip() || s > 0)) {
      x = junction_sum(x, skip[s], "skip Trans" + std::to_string(j + 1) + " + " +
                                       (config_.has_agents() ? "Agent" : "fuse") + std::to_string(s));
    }
    out.maps[j] = heads_[j].forward(x, mode);
  }
  x = run_layer(trans_[4], std::move(x), mode);
  out.final() = final_.forward(x, mode);
  cached_ = mode == Mode::train;
  return out;
}

template <typename T>
void RedNet<T>::backward(const PyramidOutputs<T>& grads) {
  if (!cached_) throw std::logic_error("RedNet::backward: no cached train-mode forward (stale cache)");
  cached_ = false;

  Tensor<T> g = final_.backward(grads.final());
  g = back_layer(trans_[4], std::move(g));
  std::array<Tensor<T>, 5> g_skip;
  for (int j = 3; j >= 0; --j) {
    add_inplace(g, heads_[j].backward(grads[j]));
    const int s = 3 - j;
    if (config_.has_stem_skip() || s > 0) g_skip[s] = g;
    g = back_layer(trans_[j], std::move(g));
  }
  g_skip[4] = std::move(g);

  std::array<Tensor<T>, 5> g_fuse;
  for (int i = 4; i >= 0; --i) {
    if (g_skip[i].empty()) continue;
    g_fuse[i] = config_.has_agents() ? agents_[i].backward(g_skip[i]) : std::move(g_skip[i]);
  }

  Tensor<T> g_rgb_in;    // gradient w.r.t. the input of the RGB layer processed last
  Tensor<T> g_depth_in;  // same for the depth branch
  for (int i = 3; i >= 0; --i) {
    Tensor<T> gf = std::move(g_fuse[i + 1]);
    add_or_assign(gf, g_rgb_in);
    Tensor<T> gd = gf;
    add_or_assign(gd, g_depth_in);
    g_rgb_in = back_layer(rgb_.layers[i], std::move(gf));
    g_depth_in = back_layer(depth_.layers[i], std::move(gd));
  }

  Tensor<T> g_fuse0 = maxpool_backward(rgb_.pool_input, rgb_.pool_argmax, g_rgb_in);
  add_or_assign(g_fuse0, g_fuse[0]);
  Tensor<T> g_d0 = maxpool_backward(depth_.pool_input, depth_.pool_argmax, g_depth_in);
  add_inplace(g_d0, g_fuse0);
  rgb_.stem.backward(g_fuse0, false);
  depth_.stem.backward(g_d0, false);
  rgb_.pool_argmax.clear();
  depth_.pool_argmax.clear();
}

template <typename T>
ParamSet<T> RedNet<T>::parameters() {
  ParamSet<T> set;
  auto branch = [&](Branch& b, const std::string& prefix) {
    b.stem.collect(set, prefix + ".conv1");
    for (size_t i = 0; i < 4; ++i) {
      for (size_t u = 0; u < b.layers[i].size(); ++u) {
        b.layers[i][u].collect(set, prefix + ".layer" + std::to_string(i + 1) + "." + std::to_string(u));
      }
    }
  };
  branch(rgb_, "rgb");
  branch(depth_, "depth");
  for (size_t i = 0; i < agents_.size(); ++i) agents_[i].collect(set, "agent" + std::to_string(i));
  for (size_t j = 0; j < 5; ++j) {
    for (size_t u = 0; u < trans_[j].size(); ++u) {
      trans_[j][u].collect(set, "trans" + std::to_string(j + 1) + "." + std::to_string(u));
    }
    if (j < 4) heads_[j].collect(set, "head" + std::to_string(j + 1));
  }
  final_.collect(set, "final");
  return set;
}

template <typename T>
std::vector<LayerSummary> RedNet<T>::layer_table() const {
  std::vector<LayerSummary> rows;
  rows.push_back({"Conv1", rgb_.stem.conv_params().in_channels, rgb_.stem.conv_params().out_channels, 0});
  auto summarize = [&](const std::string& name, const std::vector<ResidualUnit<T>>& layer) {
    rows.push_back({name, layer.front().spec().in_channels, layer.back().spec().out_channels,
                    static_cast<int>(layer.size())});
  };
  for (size_t i = 0; i < 4; ++i) summarize("Layer" + std::to_string(i + 1), rgb_.layers[i]);
  for (size_t j = 0; j < 5; ++j) summarize("Trans" + std::to_string(j + 1), trans_[j]);
  return rows;
}

template <typename T>
std::vector<UnitSpec> RedNet<T>::unit_specs(const std::string& layer) const {
  const std::vector<ResidualUnit<T>>* units = nullptr;
  for (size_t i = 0; i < 4; ++i) {
    if (layer == "layer" + std::to_string(i + 1)) units = &rgb_.layers[i];
  }
  for (size_t j = 0; j < 5; ++j) {
    if (layer == "trans" + std::to_string(j + 1)) units = &trans_[j];
  }
  if (!units) throw std::invalid_argument("unknown layer " + layer);
  std::vector<UnitSpec> specs;
  for (const auto& u : *units) specs.push_back(u.spec());
  return specs;
}

template <typename To, typename From>
void copy_state(RedNet<From>& from, RedNet<To>& to) {
  if (!(from.config() == to.config())) throw ConfigError("copy_state: network configurations differ");
  auto src = from.parameters();
  auto dst = to.parameters();
  for (size_t i = 0; i < src.params.size(); ++i) *dst.params[i].value = src.params[i].value->template cast<To>();
  for (size_t i = 0; i < src.buffers.size(); ++i) *dst.buffers[i].value = src.buffers[i].value->template cast<To>();
}

template class RedNet<float>;
template class RedNet<double>;
template void copy_state(RedNet<float>&, RedNet<double>&);
template void copy_state(RedNet<double>&, RedNet<float>&);
template void copy_state(RedNet<float>&, RedNet<float>&);
template void copy_state(RedNet<double>&, RedNet<double>&);

}  // namespace rednet
