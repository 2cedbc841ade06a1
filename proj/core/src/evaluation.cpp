#include "rednet/evaluation.hpp"

#include <cstdio>

#include "rednet/error.hpp"
#include "rednet/supervision.hpp"

namespace rednet {

ConfusionMatrix::ConfusionMatrix(int num_classes) : n_(num_classes) {
  if (num_classes < 1) throw std::invalid_argument("confusion matrix needs at least one class");
  counts_.assign(static_cast<size_t>(num_classes) * num_classes, 0);
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& gt) {
  if (!(pred.shape() == gt.shape())) {
    throw ShapeError("confusion: prediction " + pred.shape().str() + " vs ground truth " + gt.shape().str());
  }
  for (int64_t i = 0; i < gt.numel(); ++i) {
    const int32_t g = gt.data[i];
    if (g == kIgnoreLabel) continue;
    const int32_t p = pred.data[i];
    if (g < 1 || g > n_) throw DataError("ground-truth label " + std::to_string(g) + " outside 1.." + std::to_string(n_));
    if (p < 1 || p > n_) throw DataError("predicted label " + std::to_string(p) + " outside 1.." + std::to_string(n_));
    ++counts_[static_cast<size_t>(g - 1) * n_ + (p - 1)];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw ShapeError("confusion: cannot merge matrices of different class counts");
  for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

int64_t ConfusionMatrix::row_sum(int c) const {
  int64_t s = 0;
  for (int j = 0; j < n_; ++j) s += at(c, j);
  return s;
}

int64_t ConfusionMatrix::col_sum(int c) const {
  int64_t s = 0;
  for (int i = 0; i < n_; ++i) s += at(i, c);
  return s;
}

int64_t ConfusionMatrix::total() const {
  int64_t s = 0;
  for (int64_t v : counts_) s += v;
  return s;
}

int64_t ConfusionMatrix::trace() const {
  int64_t s = 0;
  for (int c = 0; c < n_; ++c) s += at(c, c);
  return s;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  const int64_t total = cm.total();
  if (total == 0) throw DataError("metrics: confusion matrix is empty");
  Metrics m;
  m.pixel_acc = static_cast<double>(cm.trace()) / static_cast<double>(total);
  const int n = cm.num_classes();
  m.class_acc.resize(n);
  m.class_iou.resize(n);
  double acc_sum = 0.0, iou_sum = 0.0;
  int acc_n = 0, iou_n = 0;
  for (int c = 0; c < n; ++c) {
    const int64_t row = cm.row_sum(c);
    const int64_t col = cm.col_sum(c);
    const int64_t tp = cm.at(c, c);
    if (row > 0) {
      m.class_acc[c] = static_cast<double>(tp) / static_cast<double>(row);
      acc_sum += *m.class_acc[c];
      ++acc_n;
    }
    if (row + col > 0) {
      m.class_iou[c] = static_cast<double>(tp) / static_cast<double>(row + col - tp);
      iou_sum += *m.class_iou[c];
      ++iou_n;
    }
  }
  m.mean_acc = acc_n > 0 ? acc_sum / acc_n : 0.0;
  m.miou = iou_n > 0 ? iou_sum / iou_n : 0.0;
  return m;
}

template <typename T>
LabelMap argmax_labels(const Tensor<T>& scores) {
  const Shape& s = scores.shape();
  LabelMap out(s.n, s.h, s.w);
  const int64_t plane = s.plane();
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t i = 0; i < plane; ++i) {
      int best = 0;
      T best_v = scores.plane(n, 0)[i];
      for (int64_t c = 1; c < s.c; ++c) {
        const T v = scores.plane(n, c)[i];
        if (v > best_v) {
          best_v = v;
          best = static_cast<int>(c);
        }
      }
      out.data[n * plane + i] = best + 1;
    }
  }
  return out;
}

std::string format_report(const ConfusionMatrix& cm, const Metrics& m, const std::string& title) {
  std::string out;
  char buf[128];
  if (!title.empty()) out += "== " + title + " ==\n";
  out += "class      acc      iou    gt_pixels\n";
  for (int c = 0; c < cm.num_classes(); ++c) {
    auto cell = [](const std::optional<double>& v) {
      char b[16];
      if (v) {
        std::snprintf(b, sizeof(b), "%.4f", *v);
      } else {
        std::snprintf(b, sizeof(b), "%6s", "-");
      }
      return std::string(b);
    };
    std::snprintf(buf, sizeof(buf), "%5d  %7s  %7s  %11lld\n", c + 1, cell(m.class_acc[c]).c_str(),
                  cell(m.class_iou[c]).c_str(), static_cast<long long>(cm.row_sum(c)));
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "pixel_acc %.6f\nmean_acc %.6f\nmiou %.6f\n", m.pixel_acc, m.mean_acc, m.miou);
  out += buf;
  return out;
}

Predictor oracle_predictor(int num_classes) {
  return [num_classes](const Batch& batch) {
    const PyramidTargets targets = build_pyramid_targets(batch.labels, static_cast<int>(batch.labels.h),
                                                         static_cast<int>(batch.labels.w));
    PyramidOutputs<float> out;
    for (int k = 0; k < kPyramidLevels; ++k) {
      const LabelMap& t = targets[k];
      Tensor<float> scores(Shape{t.n, num_classes, t.h, t.w});
      for (int64_t n = 0; n < t.n; ++n) {
        for (int64_t i = 0; i < t.plane(); ++i) {
          const int32_t label = t.data[n * t.plane() + i];
          if (label >= 1 && label <= num_classes) scores.plane(n, label - 1)[i] = 1.0f;
        }
      }
      out[k] = std::move(scores);
    }
    return out;
  };
}

Predictor model_predictor(RedNet<float>& net) {
  return [&net](const Batch& batch) { return net.forward(batch.rgb, batch.depth, Mode::eval); };
}

EvaluationResult evaluate(Dataset& data, const DatasetStats& stats, const Predictor& predict, int batch_size) {
  if (batch_size < 1) throw ConfigError("evaluation batch size must be >= 1");
  EvaluationResult r;
  for (auto& cm : r.confusion) cm = ConfusionMatrix(data.num_classes());
  for (size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<Sample> samples;
    for (size_t i = start; i < std::min(data.size(), start + batch_size); ++i) {
      samples.push_back(normalize(data.get(i), stats));
    }
    const Batch batch = make_batch(samples);
    const PyramidOutputs<float> out = predict(batch);
    const PyramidTargets targets =
        build_pyramid_targets(batch.labels, static_cast<int>(batch.labels.h), static_cast<int>(batch.labels.w));
    for (int k = 0; k < kPyramidLevels; ++k) r.confusion[k].accumulate(argmax_labels(out[k]), targets[k]);
  }
  for (int k = 0; k < kPyramidLevels; ++k) r.metrics[k] = compute_metrics(r.confusion[k]);
  return r;
}

template LabelMap argmax_labels(const Tensor<float>&);
template LabelMap argmax_labels(const Tensor<double>&);

}  // namespace rednet
