#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rednet/data.hpp"
#include "rednet/label_map.hpp"
#include "rednet/model.hpp"

namespace rednet {

/// N_c x N_c counts; rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int num_classes);

  /// cm[gt - 1][pred - 1] += 1 for every pixel whose ground truth is not ignored.
  void accumulate(const LabelMap& pred, const LabelMap& gt);
  void merge(const ConfusionMatrix& other);

  int num_classes() const { return n_; }
  int64_t at(int gt, int pred) const { return counts_[static_cast<size_t>(gt) * n_ + pred]; }
  int64_t row_sum(int c) const;
  int64_t col_sum(int c) const;
  int64_t total() const;
  int64_t trace() const;
  const std::vector<int64_t>& counts() const { return counts_; }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int n_ = 0;
  std::vector<int64_t> counts_;
};

struct Metrics {
  double pixel_acc = 0.0;
  double mean_acc = 0.0;
  double miou = 0.0;
  std::vector<std::optional<double>> class_acc;  // nullopt when the class never occurs in gt
  std::vector<std::optional<double>> class_iou;  // nullopt when absent from gt and pred
};

/// Throws DataError on an empty matrix.
Metrics compute_metrics(const ConfusionMatrix& cm);

/// Per-pixel argmax over channels mapped to labels 1..N_c; ties go to the lowest class.
template <typename T>
LabelMap argmax_labels(const Tensor<T>& scores);

/// Text table of per-class accuracy/IoU followed by the three summary lines.
std::string format_report(const ConfusionMatrix& cm, const Metrics& m, const std::string& title = "");

/// Produces the five score maps for a normalized batch.
using Predictor = std::function<PyramidOutputs<float>(const Batch&)>;

/// Scores equal to one-hot ground truth at every scale (metrics sanity path).
Predictor oracle_predictor(int num_classes);
/// Eval-mode forward pass of `net` (which must outlive the predictor).
Predictor model_predictor(RedNet<float>& net);

struct EvaluationResult {
  std::array<ConfusionMatrix, kPyramidLevels> confusion;
  std::array<Metrics, kPyramidLevels> metrics;
};

/// Evaluates every output scale against nearest-downsampled ground truth.
EvaluationResult evaluate(Dataset& data, const DatasetStats& stats, const Predictor& predict, int batch_size = 1);

}  // namespace rednet
