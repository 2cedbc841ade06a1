#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rednet/label_map.hpp"
#include "rednet/tensor.hpp"

namespace rednet {

/// One RGB-D frame: rgb [1,3,H,W] in [0,1], depth [1,1,H,W], labels [1,H,W].
struct Sample {
  Tensor<float> rgb;
  Tensor<float> depth;
  LabelMap labels;

  int64_t height() const { return labels.h; }
  int64_t width() const { return labels.w; }
  /// Throws ShapeError unless the three parts agree spatially.
  void validate() const;
};

/// Paths of one sample, absolute or relative to the manifest directory.
struct SampleRecord {
  std::filesystem::path rgb;
  std::filesystem::path depth;
  std::filesystem::path labels;
};

/// Text manifest: `#classes=N`, optional `#split=name`, then one
/// `rgb\tdepth\tlabels` line per sample.
struct DatasetManifest {
  std::vector<SampleRecord> records;
  int num_classes = 0;
  std::string split;
  std::filesystem::path base_dir;

  size_t size() const { return records.size(); }
  SampleRecord resolved(size_t i) const;

  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

Sample load_sample(const SampleRecord& record);
void save_sample(const Sample& sample, const SampleRecord& record);

/// Bilinear for rgb, nearest for depth and labels.
Sample resize_sample(const Sample& s, int64_t height, int64_t width);

struct AugmentConfig {
  bool enabled = true;
  double scale_min = 1.0;
  double scale_max = 1.4;
  double brightness = 0.1;  // multiplier in [1 - b, 1 + b]
  double saturation = 0.1;  // multiplier in [1 - s, 1 + s]
  double hue = 0.05;        // rotation in turns, [-h, h]
};

/// Random scale, crop back to the input size, and RGB-only HSV jitter.
Sample augment(const Sample& s, const AugmentConfig& cfg, std::mt19937_64& rng);

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v);
void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b);

struct DatasetStats {
  std::array<double, 3> rgb_mean{0, 0, 0};
  std::array<double, 3> rgb_std{1, 1, 1};
  double depth_mean = 0.0;
  double depth_std = 1.0;
  /// Channels whose std fell below 1e-12 and was replaced by 1.
  std::vector<std::string> guarded;

  bool operator==(const DatasetStats&) const = default;
};

/// Two-pass double-precision mean and (population) std over every pixel.
DatasetStats compute_stats(std::span<const Sample> samples);
DatasetStats compute_stats(const DatasetManifest& manifest);
Sample normalize(const Sample& s, const DatasetStats& stats);

/// Stream-independent generator for sample `index` of `epoch`.
std::mt19937_64 sample_rng(uint64_t seed, uint64_t epoch, uint64_t index);

struct Batch {
  Tensor<float> rgb;    // [B,3,H,W]
  Tensor<float> depth;  // [B,1,H,W]
  LabelMap labels;      // [B,H,W]
};

Batch make_batch(std::span<const Sample> samples);

/// Manifest-backed dataset resized to a fixed size. Decoded samples are
/// kept in memory after first use.
class Dataset {
 public:
  Dataset(DatasetManifest manifest, int64_t height, int64_t width, bool cache = true);

  size_t size() const { return manifest_.size(); }
  int num_classes() const { return manifest_.num_classes; }
  const DatasetManifest& manifest() const { return manifest_; }
  /// Resized, unnormalized sample.
  const Sample& get(size_t index);

 private:
  DatasetManifest manifest_;
  int64_t height_;
  int64_t width_;
  bool cache_;
  std::vector<std::optional<Sample>> samples_;
  Sample scratch_;
};

struct SynthConfig {
  int samples = 8;
  int height = 64;
  int width = 64;
  int num_classes = 4;
  uint64_t seed = 1;
};

/// Writes rgb_NNNNN.ppm, depth_NNNNN.pgm, label_NNNNN.rten and manifest.txt.
/// Each scene: a slanted background plane (class 1) and 2-5 rectangles of
/// classes 2..N_c, each class at its own constant depth nearer than the
/// background, drawn far to near.
DatasetManifest synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

/// In-memory version of one synthetic scene.
Sample synth_scene(const SynthConfig& cfg, uint64_t index);

}  // namespace rednet
