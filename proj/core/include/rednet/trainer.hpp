#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rednet/checkpoint.hpp"
#include "rednet/config.hpp"
#include "rednet/data.hpp"
#include "rednet/model.hpp"
#include "rednet/optimizer.hpp"
#include "rednet/supervision.hpp"

namespace rednet {

struct EpochRecord {
  int64_t epoch = 0;
  double lr = 0.0;
  double total = 0.0;                          // mean over batches of the pyramid total
  std::array<double, kPyramidLevels> terms{};  // mean per-output losses
  double wall_s = 0.0;
  int64_t batches = 0;
  int64_t skipped = 0;  // batches without a labeled pixel

  /// `epoch\tlr\tloss_total\tloss_out1..loss_final\twall_s`.
  std::string log_line() const;
  /// The log line without the wall-clock column (what determinism compares).
  std::string deterministic_part() const;
};

struct TrainOutcome {
  std::vector<EpochRecord> history;
  bool early_stopped = false;
};

/// Owns the network, optimizer state and data of one training run.
/// Files go to config.output_dir: config.cfg, train.log, histogram.txt,
/// last.ckpt, best.ckpt, epoch_NNNN.ckpt and nan_dump/ on divergence.
class Trainer {
 public:
  /// Loads data, computes statistics and class weights, and initializes the network.
  explicit Trainer(const RunConfig& cfg);

  /// Trains until cfg.epochs (counted from 0) or early stop, appending to train.log.
  TrainOutcome train();
  /// One pass over the shuffled training set; throws NumericError on a non-finite loss.
  EpochRecord run_epoch();

  Checkpoint checkpoint() const;
  void save_checkpoint(const std::filesystem::path& path) const;
  /// Restores network, optimizer, rng and progress. The model section of the
  /// checkpoint's config must equal this run's.
  void restore(const Checkpoint& ck);

  RedNet<float>& model() { return *net_; }
  Dataset& dataset() { return *train_; }
  const DatasetStats& stats() const { return stats_; }
  const ClassWeights& class_weights() const { return weights_; }
  const RunConfig& config() const { return cfg_; }
  int64_t next_epoch() const { return epoch_; }

  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const std::string&)> on_warning;

 private:
  std::vector<Sample> prepare(std::span<const size_t> indices, uint64_t epoch, bool augmented);
  double validation_loss();
  void warn(const std::string& msg) const;
  [[noreturn]] void dump_nan(const EpochRecord& partial, std::span<const size_t> indices, const PyramidLoss<float>& loss);

  RunConfig cfg_;
  std::filesystem::path out_dir_;
  std::unique_ptr<Dataset> train_;
  std::unique_ptr<Dataset> val_;
  DatasetStats stats_;
  ClassWeights weights_;
  std::unique_ptr<RedNet<float>> net_;
  OptimizerState<float> opt_;
  std::mt19937_64 rng_;
  int64_t epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  double best_criterion_ = std::numeric_limits<double>::infinity();
  int64_t stale_epochs_ = 0;
};

/// Run configuration recorded in a training checkpoint.
RunConfig config_from_checkpoint(const Checkpoint& ck);
/// Normalization statistics recorded in a training checkpoint.
DatasetStats stats_from_checkpoint(const Checkpoint& ck);

/// Parses one train.log line back into a record.
EpochRecord parse_log_line(const std::string& line);

}  // namespace rednet
