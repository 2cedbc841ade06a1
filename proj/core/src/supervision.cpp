#include "rednet/supervision.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "rednet/error.hpp"
#include "rednet/ops.hpp"

namespace rednet {

ClassWeights median_frequency_weights(std::span<const int64_t> counts) {
  std::vector<int64_t> present;
  for (int64_t c : counts) {
    if (c < 0) throw DataError("median_frequency_weights: negative class count");
    if (c > 0) present.push_back(c);
  }
  if (present.empty()) throw DataError("median_frequency_weights: every class count is zero");
  std::sort(present.begin(), present.end());
  const size_t k = present.size();
  // prob(c) = count(c) / total, so median(prob) / prob(c) = median(count) / count(c);
  // working in counts keeps the weights exactly invariant to scaling.
  const double median = k % 2 == 1 ? static_cast<double>(present[k / 2])
                                   : 0.5 * (static_cast<double>(present[k / 2 - 1]) + static_cast<double>(present[k / 2]));
  ClassWeights w;
  w.alpha.resize(counts.size(), 0.0);
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) {
      w.absent.push_back(static_cast<int>(i) + 1);
    } else {
      w.alpha[i] = median / static_cast<double>(counts[i]);
    }
  }
  return w;
}

void add_histogram(std::vector<int64_t>& into, const LabelMap& labels) {
  const int n = static_cast<int>(into.size());
  for (int32_t v : labels.data) {
    if (v == kIgnoreLabel) continue;
    if (v < 0 || v > n) {
      throw DataError("label " + std::to_string(v) + " outside 0.." + std::to_string(n));
    }
    ++into[v - 1];
  }
}

std::vector<int64_t> class_histogram(const LabelMap& labels, int num_classes) {
  std::vector<int64_t> counts(num_classes, 0);
  add_histogram(counts, labels);
  return counts;
}

void write_histogram(const std::filesystem::path& path, std::span<const int64_t> counts) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write histogram " + path.string());
  for (size_t i = 0; i < counts.size(); ++i) out << i + 1 << ' ' << counts[i] << '\n';
  if (!out) throw DataError("failed writing histogram " + path.string());
}

std::vector<int64_t> read_histogram(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open histogram " + path.string());
  std::vector<int64_t> counts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int64_t id = 0, count = 0;
    std::string rest;
    if (!(ss >> id >> count) || (ss >> rest) || count < 0) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected `class_id count`");
    }
    if (id != static_cast<int64_t>(counts.size()) + 1) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": class ids must run 1..N in order");
    }
    counts.push_back(count);
  }
  if (counts.empty()) throw DataError("histogram " + path.string() + " is empty");
  return counts;
}

PyramidTargets build_pyramid_targets(const LabelMap& full, int height, int width) {
  if (full.h != height || full.w != width) {
    throw ShapeError("label map " + std::to_string(full.h) + "x" + std::to_string(full.w) + " does not match " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  PyramidTargets t;
  for (int k = 0; k < kPyramidLevels; ++k) {
    const int f = kPyramidFactors[k];
    if (height % f != 0 || width % f != 0) {
      throw ShapeError("size " + std::to_string(height) + "x" + std::to_string(width) + " is not divisible by " +
                       std::to_string(f));
    }
    t[k] = f == 1 ? full : resize_nearest(full, height / f, width / f);
  }
  return t;
}

template <typename T>
PyramidLoss<T> pyramid_loss(const PyramidOutputs<T>& outputs, const PyramidTargets& targets,
                            const ClassWeights& weights, const TermWeights& term_weights) {
  PyramidLoss<T> r;
  for (int k = 0; k < kPyramidLevels; ++k) {
    const Shape& s = outputs[k].shape();
    const Shape ts = targets[k].shape();
    if (s.n != ts.n || s.h != ts.h || s.w != ts.w) {
      throw ShapeError(std::string(kPyramidNames[k]) + ": scores " + s.str() + " vs targets " + ts.str());
    }
    if (s.c != weights.num_classes()) {
      throw ShapeError(std::string(kPyramidNames[k]) + ": " + std::to_string(s.c) + " score channels but " +
                       std::to_string(weights.num_classes()) + " class weights");
    }
    auto ce = weighted_softmax_cross_entropy(outputs[k], targets[k], weights.alpha);
    r.terms[k] = ce.loss;
    r.total += term_weights[k] * ce.loss;
    const double tw = term_weights[k];
    r.grads[k] = tw == 1.0 ? std::move(ce.grad) : scale(ce.grad, static_cast<T>(tw));
  }
  return r;
}

template PyramidLoss<float> pyramid_loss(const PyramidOutputs<float>&, const PyramidTargets&, const ClassWeights&,
                                         const TermWeights&);
template PyramidLoss<double> pyramid_loss(const PyramidOutputs<double>&, const PyramidTargets&,
                                          const ClassWeights&, const TermWeights&);

}  // namespace rednet
