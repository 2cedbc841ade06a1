#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rednet/data.hpp"
#include "rednet/model.hpp"
#include "rednet/optimizer.hpp"
#include "rednet/supervision.hpp"

namespace rednet {

/// Every tunable of a run. Defaults follow the reference training protocol
/// where it states a value.
struct RunConfig {
  // model
  int encoder_depth = 50;
  int num_classes = 37;
  int height = 480;
  int width = 640;
  int channel_divisor = 1;

  // training
  int64_t epochs = 500;
  int batch_size = 5;
  SgdConfig sgd;
  bool pyramid = true;
  bool median_frequency = true;
  int64_t early_stop_patience = 50;
  double early_stop_rel = 1e-4;
  int64_t checkpoint_every = 10;
  uint64_t seed = 1;

  // data
  std::string manifest;
  std::string val_manifest;
  std::string histogram;  // class-count cache; computed when missing
  int workers = 1;
  AugmentConfig augment;

  std::string output_dir = "runs/default";

  NetworkConfig network() const;
  TermWeights term_weights() const { return pyramid ? kPyramidOn : kPyramidOff; }

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  /// Applies one `key = value` assignment; unknown keys throw ConfigError.
  void set(const std::string& key, const std::string& value);
  /// Flat `key = value` text with `#` comments. Relative paths stay as written.
  static RunConfig parse(const std::string& text, const std::string& source = "<config>");
  static RunConfig load(const std::filesystem::path& path);
  /// Fully resolved config, one `key = value` per line in a fixed order.
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  static std::vector<std::string> keys();
};

}  // namespace rednet
