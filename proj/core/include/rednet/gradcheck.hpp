#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rednet/tensor.hpp"

namespace rednet {

struct GradcheckOptions {
  int seeds = 20;
  double step = 1e-5;       // central-difference h
  double tolerance = 1e-4;  // max relative error
  /// rel = |a - n| / max(|a|, |n|, floor); the floor keeps finite-difference
  /// round-off on near-zero gradients from reading as failures.
  double floor = 1e-4;
  int coords_per_tensor = 12;  // every coordinate when the tensor is smaller
  int kink_retries = 4;        // replacement draws per tensor after a skipped coordinate
  uint64_t base_seed = 1;
};

struct GradcheckResult {
  std::string name;
  int seeds = 0;
  int64_t checked = 0;
  int64_t skipped = 0;  // coordinates whose perturbation flipped a ReLU/max-pool decision
  int64_t tensors = 0;
  int64_t tensors_covered = 0;  // tensors with at least one checked coordinate
  double max_rel = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string worst;  // tensor and index of the largest error

  bool pass() const { return checked > 0 && max_rel < tolerance; }
};

/// One differentiable tensor of a check: its storage and the analytic gradient.
struct GradProbe {
  std::string name;
  Tensor<double>* value = nullptr;
  Tensor<double> grad;
};

/// Compares analytic gradients with central differences of `objective` on
/// sampled coordinates of every probe; folds the outcome into `result`.
void check_gradients(std::vector<GradProbe>& probes, const std::function<double()>& objective,
                     const GradcheckOptions& opts, std::mt19937_64& rng, GradcheckResult& result);

/// Convolutions, transposed convolutions, batch norm (train/eval), ReLU,
/// max pooling and weighted cross-entropy.
std::vector<GradcheckResult> gradcheck_ops(const GradcheckOptions& opts = {});
/// Every residual unit variant the network builds.
std::vector<GradcheckResult> gradcheck_units(const GradcheckOptions& opts = {});
/// Tiny depth-50 network (32x32, channels/8, 3 classes) in train mode
/// through the full pyramid loss.
GradcheckResult gradcheck_model(const GradcheckOptions& opts);
GradcheckOptions model_gradcheck_defaults();

/// scope: ops, units, model or all.
std::vector<GradcheckResult> run_gradcheck(const std::string& scope, const GradcheckOptions& opts = {});
std::string format_gradcheck(const std::vector<GradcheckResult>& results);

}  // namespace rednet
