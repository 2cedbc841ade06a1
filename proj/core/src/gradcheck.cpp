#include "rednet/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "rednet/error.hpp"
#include "rednet/model.hpp"
#include "rednet/ops.hpp"
#include "rednet/supervision.hpp"
#include "rednet/units.hpp"

namespace rednet {
namespace {

using Clock = std::chrono::steady_clock;

Tensor<double> random_tensor(const Shape& s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<double> t(s);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  require_same_shape(a.shape(), b.shape(), "gradcheck objective");
  double s = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

double evaluate(const std::function<double()>& objective, uint64_t& pattern) {
  ActivationPattern::begin();
  const double v = objective();
  pattern = ActivationPattern::end();
  return v;
}

template <typename Body>
GradcheckResult run_case(const std::string& name, const GradcheckOptions& opts, Body&& body) {
  GradcheckResult r;
  r.name = name;
  r.tolerance = opts.tolerance;
  const auto t0 = Clock::now();
  for (int s = 0; s < opts.seeds; ++s) {
    std::mt19937_64 rng(opts.base_seed * 1000003ull + static_cast<uint64_t>(s));
    body(rng, r);
    ++r.seeds;
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

// Sum of r * conv(x), analytic gradients from the backward pass.
void conv_case(const ConvParams& p, const Shape& x_shape, bool transposed, const GradcheckOptions& opts,
               std::mt19937_64& rng, GradcheckResult& r) {
  Tensor<double> x = random_tensor(x_shape, rng);
  Tensor<double> w = random_tensor(transposed ? p.transpose_weight_shape() : p.conv_weight_shape(), rng);
  Tensor<double> b = p.has_bias ? random_tensor(p.bias_shape(), rng) : Tensor<double>();
  auto fwd = [&] {
    return transposed ? transpose_conv2d_forward<double>(x, w, b.data(), p) : conv2d_forward<double>(x, w, b.data(), p);
  };
  const Tensor<double> rr = random_tensor(fwd().shape(), rng);
  auto grads = transposed ? transpose_conv2d_backward(x, w, p, rr) : conv2d_backward(x, w, p, rr);
  std::vector<GradProbe> probes = {{"x", &x, grads.grad_x}, {"w", &w, grads.grad_w}};
  if (p.has_bias) probes.push_back({"b", &b, grads.grad_b});
  check_gradients(probes, [&] { return dot(fwd(), rr); }, opts, rng, r);
}

void batchnorm_case(Mode mode, const GradcheckOptions& opts, std::mt19937_64& rng, GradcheckResult& r) {
  const Shape s{3, 4, 3, 5};
  Tensor<double> x = random_tensor(s, rng, -2.0, 2.0);
  BatchNormState<double> st(s.c);
  st.gamma = random_tensor(st.gamma.shape(), rng, 0.5, 1.5);
  st.beta = random_tensor(st.beta.shape(), rng);
  st.running_mean = random_tensor(st.running_mean.shape(), rng);
  st.running_var = random_tensor(st.running_var.shape(), rng, 0.5, 2.0);
  const Tensor<double> rr = random_tensor(s, rng);
  BatchNormCache<double> cache;
  BatchNormState<double> scratch = st;
  batchnorm_forward(x, scratch, mode, &cache);
  auto g = batchnorm_backward(st, cache, rr);
  std::vector<GradProbe> probes = {{"x", &x, g.grad_x}, {"gamma", &st.gamma, g.grad_gamma}, {"beta", &st.beta, g.grad_beta}};
  check_gradients(
      probes,
      [&] {
        BatchNormState<double> copy = st;  // running statistics must not drift between evaluations
        return dot(batchnorm_forward(x, copy, mode), rr);
      },
      opts, rng, r);
}

void relu_case(const GradcheckOptions& opts, std::mt19937_64& rng, GradcheckResult& r) {
  Tensor<double> x = random_tensor({2, 3, 4, 4}, rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : x.data()) v = sign(rng) ? v : -v;  // |x| >= 0.1 keeps the kink out of reach
  const Tensor<double> rr = random_tensor(x.shape(), rng);
  std::vector<GradProbe> probes = {{"x", &x, relu_backward(x, rr)}};
  check_gradients(probes, [&] { return dot(relu_forward(x), rr); }, opts, rng, r);
}

void maxpool_case(const GradcheckOptions& opts, std::mt19937_64& rng, GradcheckResult& r) {
  Tensor<double> x = random_tensor({2, 3, 9, 8}, rng);
  auto res = maxpool_forward(x);
  const Tensor<double> rr = random_tensor(res.output.shape(), rng);
  std::vector<GradProbe> probes = {{"x", &x, maxpool_backward(x.shape(), res.argmax, rr)}};
  check_gradients(probes, [&] { return dot(maxpool_forward(x).output, rr); }, opts, rng, r);
}

void cross_entropy_case(const GradcheckOptions& opts, std::mt19937_64& rng, GradcheckResult& r) {
  const int classes = 5;
  Tensor<double> scores = random_tensor({2, classes, 4, 3}, rng, -3.0, 3.0);
  LabelMap labels(2, 4, 3);
  std::uniform_int_distribution<int> lab(0, classes);
  for (auto& v : labels.data) v = lab(rng);
  labels.data[0] = 1;  // at least one counted pixel
  std::vector<double> weights(classes);
  std::uniform_real_distribution<double> wd(0.2, 3.0);
  for (auto& w : weights) w = wd(rng);
  auto res = weighted_softmax_cross_entropy(scores, labels, weights);
  std::vector<GradProbe> probes = {{"scores", &scores, res.grad}};
  check_gradients(probes, [&] { return weighted_softmax_cross_entropy(scores, labels, weights).loss; }, opts, rng, r);
}

void randomize(ParamSet<double>& set, std::mt19937_64& rng) {
  for (auto& p : set.params) {
    switch (p.kind) {
      case ParamKind::bn_gamma: *p.value = random_tensor(p.value->shape(), rng, 0.5, 1.5); break;
      case ParamKind::weight: {
        const Shape& s = p.value->shape();
        const double b = std::sqrt(6.0 / static_cast<double>((s.n + s.c) * s.h * s.w));
        *p.value = random_tensor(s, rng, -b, b);
        break;
      }
      default: *p.value = random_tensor(p.value->shape(), rng, -0.5, 0.5); break;
    }
  }
}

void unit_case(const UnitSpec& spec, const GradcheckOptions& opts, std::mt19937_64& rng, GradcheckResult& r) {
  ResidualUnit<double> unit(spec);
  ParamSet<double> set;
  unit.collect(set, "unit");
  randomize(set, rng);
  Tensor<double> x = random_tensor({2, spec.in_channels, 6, 6}, rng);
  const Tensor<double> rr = random_tensor(spec.output_shape(x.shape()), rng);
  set.zero_grad();
  unit.forward(x, Mode::train);
  std::vector<GradProbe> probes = {{"x", &x, unit.backward(rr)}};
  for (auto& p : set.params) probes.push_back({p.name, p.value, *p.grad});
  check_gradients(probes, [&] { return dot(unit.forward(x, Mode::train), rr); }, opts, rng, r);
}

}  // namespace

void check_gradients(std::vector<GradProbe>& probes, const std::function<double()>& objective,
                     const GradcheckOptions& opts, std::mt19937_64& rng, GradcheckResult& result) {
  uint64_t base_pattern = 0;
  evaluate(objective, base_pattern);
  const double h = opts.step;
  for (auto& probe : probes) {
    require_same_shape(probe.value->shape(), probe.grad.shape(), "gradcheck probe " + probe.name);
    const int64_t n = probe.value->numel();
    const bool exhaustive = n <= opts.coords_per_tensor;
    std::uniform_int_distribution<int64_t> pick(0, n - 1);
    const int64_t wanted = exhaustive ? n : opts.coords_per_tensor;
    int64_t attempts = 0;
    const int64_t checked_before = result.checked;
    for (int64_t k = 0; k < wanted; ++k) {
      const int64_t i = exhaustive ? k : pick(rng);
      double& v = (*probe.value)[i];
      const double saved = v;
      uint64_t plus_pattern = 0, minus_pattern = 0;
      v = saved + h;
      const double jp = evaluate(objective, plus_pattern);
      v = saved - h;
      const double jm = evaluate(objective, minus_pattern);
      v = saved;
      if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
        ++result.skipped;
        // Sampled tensors draw a replacement coordinate, a bounded number of times.
        if (!exhaustive && ++attempts <= opts.kink_retries) --k;
        continue;
      }
      const double numeric = (jp - jm) / (2.0 * h);
      const double analytic = probe.grad[i];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), opts.floor});
      ++result.checked;
      if (!(rel <= result.max_rel)) {
        result.max_rel = std::isnan(rel) ? INFINITY : rel;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s[%lld] analytic %.6g numeric %.6g", probe.name.c_str(),
                      static_cast<long long>(i), analytic, numeric);
        result.worst = buf;
      }
    }
    ++result.tensors;
    if (result.checked > checked_before) ++result.tensors_covered;
  }
}

std::vector<GradcheckResult> gradcheck_ops(const GradcheckOptions& opts) {
  std::vector<GradcheckResult> out;
  struct ConvCase {
    const char* name;
    ConvParams p;
    Shape x;
    bool transposed;
  };
  const std::vector<ConvCase> convs = {
      {"conv2d 3x3 s1 p1 +bias", ConvParams::square(3, 4, 3, 1, 1, true), {2, 3, 6, 5}, false},
      {"conv2d 3x3 s2 p1", ConvParams::square(3, 4, 3, 2, 1), {2, 3, 7, 6}, false},
      {"conv2d 7x7 s2 p3", ConvParams::square(2, 3, 7, 2, 3), {1, 2, 9, 8}, false},
      {"conv2d 1x1 s1", ConvParams::square(5, 3, 1), {2, 5, 4, 4}, false},
      {"conv2d 1x1 s2", ConvParams::square(4, 6, 1, 2), {2, 4, 5, 6}, false},
      {"transpose 2x2 s2 +bias", ConvParams::square(4, 3, 2, 2, 0, true), {2, 4, 3, 4}, true},
      {"transpose 3x3 s2 p1", ConvParams::square(3, 2, 3, 2, 1), {1, 3, 4, 3}, true},
  };
  for (const auto& c : convs) {
    out.push_back(run_case(c.name, opts, [&](std::mt19937_64& rng, GradcheckResult& r) {
      conv_case(c.p, c.x, c.transposed, opts, rng, r);
    }));
  }
  out.push_back(run_case("batchnorm train", opts, [&](auto& rng, auto& r) { batchnorm_case(Mode::train, opts, rng, r); }));
  out.push_back(run_case("batchnorm eval", opts, [&](auto& rng, auto& r) { batchnorm_case(Mode::eval, opts, rng, r); }));
  out.push_back(run_case("relu", opts, [&](auto& rng, auto& r) { relu_case(opts, rng, r); }));
  out.push_back(run_case("maxpool 3x3 s2 p1", opts, [&](auto& rng, auto& r) { maxpool_case(opts, rng, r); }));
  out.push_back(run_case("weighted cross-entropy", opts, [&](auto& rng, auto& r) { cross_entropy_case(opts, rng, r); }));
  return out;
}

std::vector<GradcheckResult> gradcheck_units(const GradcheckOptions& opts) {
  const std::vector<UnitSpec> specs = {
      UnitSpec::make(UnitKind::bottleneck, 8, 8, SpatialMode::keep),
      UnitSpec::make(UnitKind::bottleneck, 4, 8, SpatialMode::keep),
      UnitSpec::make(UnitKind::bottleneck, 8, 16, SpatialMode::down2),
      UnitSpec::make(UnitKind::basic, 6, 6, SpatialMode::keep),
      UnitSpec::make(UnitKind::basic, 4, 6, SpatialMode::keep),
      UnitSpec::make(UnitKind::basic, 4, 6, SpatialMode::down2),
      UnitSpec::make(UnitKind::upsample, 8, 4, SpatialMode::up2),
  };
  std::vector<GradcheckResult> out;
  for (const auto& spec : specs) {
    out.push_back(run_case(spec.str(), opts, [&](auto& rng, auto& r) { unit_case(spec, opts, rng, r); }));
  }
  return out;
}

GradcheckOptions model_gradcheck_defaults() {
  GradcheckOptions o;
  o.seeds = 1;
  o.tolerance = 1e-3;
  o.coords_per_tensor = 1;
  o.floor = 1e-3;
  o.step = 1e-7;
  return o;
}

GradcheckResult gradcheck_model(const GradcheckOptions& opts) {
  // Layer4 is 1x1 here, so its batch norm sees only kBatch values per channel.
  constexpr int64_t kBatch = 4;
  const NetworkConfig cfg = NetworkConfig::resnet50(3, 32, 32).scaled(8);
  return run_case("rednet-50 32x32 /8 train", opts, [&](std::mt19937_64& rng, GradcheckResult& r) {
    RedNet<double> net = RedNet<double>::build(cfg, rng());
    // Build-time parameters; randomized batch-norm affines across fifty layers
    // make the objective chaotic at finite-difference scale.
    auto set = net.parameters();
    const Tensor<double> rgb = random_tensor({kBatch, 3, 32, 32}, rng);
    const Tensor<double> depth = random_tensor({kBatch, 1, 32, 32}, rng);
    LabelMap labels(kBatch, 32, 32);
    std::uniform_int_distribution<int> lab(0, cfg.num_classes);
    for (auto& v : labels.data) v = lab(rng);
    const PyramidTargets targets = build_pyramid_targets(labels, 32, 32);
    const ClassWeights weights{{0.5, 1.0, 2.0}, {}};
    auto loss = [&] { return pyramid_loss(net.forward(rgb, depth, Mode::train), targets, weights); };
    set.zero_grad();
    auto l = loss();
    net.backward(l.grads);
    std::vector<GradProbe> probes;
    for (auto& p : set.params) probes.push_back({p.name, p.value, *p.grad});
    check_gradients(probes, [&] { return loss().total; }, opts, rng, r);
  });
}

std::vector<GradcheckResult> run_gradcheck(const std::string& scope, const GradcheckOptions& opts) {
  if (scope != "ops" && scope != "units" && scope != "model" && scope != "all") {
    throw ConfigError("gradcheck scope must be ops, units, model or all; got '" + scope + "'");
  }
  std::vector<GradcheckResult> out;
  if (scope == "ops" || scope == "all") {
    auto r = gradcheck_ops(opts);
    out.insert(out.end(), r.begin(), r.end());
  }
  if (scope == "units" || scope == "all") {
    auto r = gradcheck_units(opts);
    out.insert(out.end(), r.begin(), r.end());
  }
  if (scope == "model" || scope == "all") {
    GradcheckOptions m = model_gradcheck_defaults();
    m.base_seed = opts.base_seed;
    out.push_back(gradcheck_model(m));
  }
  return out;
}

std::string format_gradcheck(const std::vector<GradcheckResult>& results) {
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%-34s %5s %7s %7s %9s %11s %9s %7s  %s\n", "case", "seeds", "checked",
                "skipped", "covered", "max_rel", "tol", "time_s", "status");
  out += buf;
  for (const auto& r : results) {
    const std::string covered = std::to_string(r.tensors_covered) + "/" + std::to_string(r.tensors);
    std::snprintf(buf, sizeof(buf), "%-34s %5d %7lld %7lld %9s %11.3e %9.1e %7.2f  %s%s%s\n", r.name.c_str(),
                  r.seeds, static_cast<long long>(r.checked), static_cast<long long>(r.skipped), covered.c_str(), r.max_rel,
                  r.tolerance,
                  r.seconds, r.pass() ? "PASS" : "FAIL", r.pass() ? "" : "  worst: ", r.pass() ? "" : r.worst.c_str());
    out += buf;
  }
  return out;
}

}  // namespace rednet
