#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rednet/label_map.hpp"
#include "rednet/model.hpp"

namespace rednet {

/// alpha[c - 1] is the multiplier of class c. Classes without pixels get
/// weight 0 and are listed in `absent`.
struct ClassWeights {
  std::vector<double> alpha;
  std::vector<int> absent;

  int num_classes() const { return static_cast<int>(alpha.size()); }
  static ClassWeights uniform(int num_classes) { return {std::vector<double>(num_classes, 1.0), {}}; }
};

/// counts[c - 1] = labeled pixels of class c. alpha_c = median(prob) / prob(c),
/// with the median taken over classes that occur.
ClassWeights median_frequency_weights(std::span<const int64_t> counts);

/// Per-class pixel counts over labels 1..num_classes (label 0 skipped).
std::vector<int64_t> class_histogram(const LabelMap& labels, int num_classes);
void add_histogram(std::vector<int64_t>& into, const LabelMap& labels);

/// Text cache: one `class_id count` line per class.
void write_histogram(const std::filesystem::path& path, std::span<const int64_t> counts);
std::vector<int64_t> read_histogram(const std::filesystem::path& path);

/// Targets of out1..out4 and the final output.
using PyramidTargets = std::array<LabelMap, kPyramidLevels>;

/// Nearest-neighbor downsamples at 1/16, 1/8, 1/4, 1/2 plus the original.
PyramidTargets build_pyramid_targets(const LabelMap& full, int height, int width);

/// Loss multipliers of the five terms; {0,0,0,0,1} trains the final head only.
using TermWeights = std::array<double, kPyramidLevels>;
inline constexpr TermWeights kPyramidOn = {1, 1, 1, 1, 1};
inline constexpr TermWeights kPyramidOff = {0, 0, 0, 0, 1};

template <typename T>
struct PyramidLoss {
  double total = 0.0;
  std::array<double, kPyramidLevels> terms{};  // unweighted per-output losses
  PyramidOutputs<T> grads;                     // d total / d scores
};

/// total = sum_k term_weights[k] * CE_k, summed in out1..final order.
template <typename T>
PyramidLoss<T> pyramid_loss(const PyramidOutputs<T>& outputs, const PyramidTargets& targets,
                            const ClassWeights& weights, const TermWeights& term_weights = kPyramidOn);

}  // namespace rednet
