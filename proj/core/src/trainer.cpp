#include "rednet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "rednet/error.hpp"

namespace rednet {
namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_real(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::logic_error&) {
    throw DataError("cannot parse number '" + s + "'");
  }
}

std::string join(std::span<const double> v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + g17(v[i]);
  return out;
}

std::vector<double> split_reals(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(item));
  return out;
}

std::map<std::string, std::string> config_entries(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  std::istringstream in(cfg.serialize());
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

bool has_labeled_pixel(const LabelMap& labels) {
  for (int32_t v : labels.data) {
    if (v != kIgnoreLabel) return true;
  }
  return false;
}

}  // namespace

std::string EpochRecord::deterministic_part() const {
  std::string s = std::to_string(epoch) + "\t" + g17(lr) + "\t" + g17(total);
  for (double t : terms) s += "\t" + g17(t);
  return s;
}

std::string EpochRecord::log_line() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", wall_s);
  return deterministic_part() + "\t" + buf;
}

EpochRecord parse_log_line(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, '\t')) f.push_back(item);
  if (f.size() != 3 + kPyramidLevels + 1) throw DataError("malformed training log line: " + line);
  EpochRecord r;
  r.epoch = std::stoll(f[0]);
  r.lr = parse_real(f[1]);
  r.total = parse_real(f[2]);
  for (int k = 0; k < kPyramidLevels; ++k) r.terms[k] = parse_real(f[3 + k]);
  r.wall_s = parse_real(f.back());
  return r;
}

Trainer::Trainer(const RunConfig& cfg) : cfg_(cfg), out_dir_(cfg.output_dir), rng_(cfg.seed) {
  cfg_.validate();
  if (cfg_.manifest.empty()) throw ConfigError("config: data.manifest is required for training");
  std::filesystem::create_directories(out_dir_);
  cfg_.save(out_dir_ / "config.cfg");

  DatasetManifest manifest = DatasetManifest::load(cfg_.manifest);
  if (manifest.num_classes != cfg_.num_classes) {
    throw ConfigError("manifest declares " + std::to_string(manifest.num_classes) + " classes but model.num_classes = " +
                      std::to_string(cfg_.num_classes));
  }
  train_ = std::make_unique<Dataset>(std::move(manifest), cfg_.height, cfg_.width);
  if (!cfg_.val_manifest.empty()) {
    val_ = std::make_unique<Dataset>(DatasetManifest::load(cfg_.val_manifest), cfg_.height, cfg_.width);
  }
  // Decoding everything up front keeps later parallel reads of the cache race-free.
  std::vector<const Sample*> all;
  for (size_t i = 0; i < train_->size(); ++i) all.push_back(&train_->get(i));
  {
    std::vector<Sample> copies;
    copies.reserve(all.size());
    for (const Sample* s : all) copies.push_back(*s);
    stats_ = compute_stats(copies);
  }
  for (const auto& g : stats_.guarded) warn("channel " + g + " has zero variance; std set to 1");

  if (cfg_.median_frequency) {
    std::vector<int64_t> counts;
    const std::filesystem::path cache = cfg_.histogram;
    if (!cache.empty() && std::filesystem::exists(cache)) {
      counts = read_histogram(cache);
      if (static_cast<int>(counts.size()) != cfg_.num_classes) {
        throw DataError(cache.string() + ": histogram lists " + std::to_string(counts.size()) + " classes, expected " +
                        std::to_string(cfg_.num_classes));
      }
    } else {
      counts.assign(cfg_.num_classes, 0);
      for (const Sample* s : all) add_histogram(counts, s->labels);
      if (!cache.empty()) write_histogram(cache, counts);
    }
    write_histogram(out_dir_ / "histogram.txt", counts);
    weights_ = median_frequency_weights(counts);
    for (int c : weights_.absent) warn("class " + std::to_string(c) + " never occurs; its weight is 0");
  } else {
    weights_ = ClassWeights::uniform(cfg_.num_classes);
  }
  net_ = std::make_unique<RedNet<float>>(RedNet<float>::build(cfg_.network(), cfg_.seed));
}

void Trainer::warn(const std::string& msg) const {
  if (on_warning) {
    on_warning(msg);
  } else {
    std::cerr << "warning: " << msg << "\n";
  }
}

std::vector<Sample> Trainer::prepare(std::span<const size_t> indices, uint64_t epoch, bool augmented) {
  std::vector<Sample> out(indices.size());
  auto one = [&](size_t j) {
    const Sample& src = train_->get(indices[j]);
    if (augmented && cfg_.augment.enabled) {
      auto rng = sample_rng(cfg_.seed, epoch, indices[j]);
      out[j] = normalize(augment(src, cfg_.augment, rng), stats_);
    } else {
      out[j] = normalize(src, stats_);
    }
  };
  if (cfg_.workers <= 1 || indices.size() <= 1) {
    for (size_t j = 0; j < indices.size(); ++j) one(j);
  } else {
    // Every sample owns its generator, so worker scheduling cannot change results.
    std::vector<std::future<void>> jobs;
    const size_t workers = std::min<size_t>(cfg_.workers, indices.size());
    for (size_t w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (size_t j = w; j < indices.size(); j += workers) one(j);
      }));
    }
    for (auto& j : jobs) j.get();
  }
  return out;
}

EpochRecord Trainer::run_epoch() {
  const auto t0 = std::chrono::steady_clock::now();
  EpochRecord rec;
  rec.epoch = epoch_;
  rec.lr = lr_at_epoch(cfg_.sgd.base_lr, epoch_, cfg_.sgd.lr_decay, cfg_.sgd.lr_decay_every);

  std::vector<size_t> order(train_->size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng_);

  const TermWeights term_weights = cfg_.term_weights();
  for (size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg_.batch_size));
    std::span<const size_t> idx(order.data() + start, end - start);
    const Batch batch = make_batch(prepare(idx, static_cast<uint64_t>(epoch_), true));
    if (!has_labeled_pixel(batch.labels)) {
      warn("epoch " + std::to_string(epoch_) + ": skipping a batch without labeled pixels");
      ++rec.skipped;
      continue;
    }
    const PyramidTargets targets = build_pyramid_targets(batch.labels, cfg_.height, cfg_.width);
    net_->zero_grad();
    PyramidOutputs<float> out = net_->forward(batch.rgb, batch.depth, Mode::train);
    PyramidLoss<float> loss = pyramid_loss(out, targets, weights_, term_weights);
    if (!std::isfinite(loss.total)) dump_nan(rec, idx, loss);
    net_->backward(loss.grads);
    auto params = net_->parameters();
    sgd_momentum_step(params, opt_, cfg_.sgd, rec.lr);
    rec.total += loss.total;
    for (int k = 0; k < kPyramidLevels; ++k) rec.terms[k] += loss.terms[k];
    ++rec.batches;
  }
  if (rec.batches > 0) {
    rec.total /= static_cast<double>(rec.batches);
    for (auto& t : rec.terms) t /= static_cast<double>(rec.batches);
  }
  ++epoch_;
  rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

double Trainer::validation_loss() {
  double sum = 0.0;
  int64_t batches = 0;
  for (size_t start = 0; start < val_->size(); start += cfg_.batch_size) {
    std::vector<Sample> samples;
    for (size_t i = start; i < std::min(val_->size(), start + static_cast<size_t>(cfg_.batch_size)); ++i) {
      samples.push_back(normalize(val_->get(i), stats_));
    }
    const Batch batch = make_batch(samples);
    if (!has_labeled_pixel(batch.labels)) continue;
    const auto out = net_->forward(batch.rgb, batch.depth, Mode::eval);
    sum += pyramid_loss(out, build_pyramid_targets(batch.labels, cfg_.height, cfg_.width), weights_,
                        cfg_.term_weights())
               .total;
    ++batches;
  }
  return batches > 0 ? sum / static_cast<double>(batches) : std::numeric_limits<double>::infinity();
}

void Trainer::dump_nan(const EpochRecord& partial, std::span<const size_t> indices, const PyramidLoss<float>& loss) {
  const auto dir = out_dir_ / "nan_dump";
  std::filesystem::create_directories(dir);
  std::ofstream info(dir / "diagnostic.txt");
  info << "epoch " << partial.epoch << "\nlr " << g17(partial.lr) << "\nbatch_index " << partial.batches << "\nsamples";
  for (size_t i : indices) info << ' ' << i;
  info << "\nloss_total " << g17(loss.total) << "\n";
  for (int k = 0; k < kPyramidLevels; ++k) info << "loss_" << kPyramidNames[k] << ' ' << g17(loss.terms[k]) << "\n";
  save_checkpoint(dir / "state.ckpt");
  throw NumericError("non-finite loss at epoch " + std::to_string(partial.epoch) + " batch " +
                     std::to_string(partial.batches) + "; diagnostics in " + dir.string());
}

TrainOutcome Trainer::train() {
  TrainOutcome outcome;
  std::ofstream log(out_dir_ / "train.log", epoch_ == 0 ? std::ios::trunc : std::ios::app);
  if (!log) throw DataError("cannot write " + (out_dir_ / "train.log").string());
  while (epoch_ < cfg_.epochs) {
    EpochRecord rec = run_epoch();
    log << rec.log_line() << "\n" << std::flush;
    outcome.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const bool improved = rec.total < best_loss_ * (1.0 - cfg_.early_stop_rel) || !std::isfinite(best_loss_);
    if (improved) {
      best_loss_ = rec.total;
      stale_epochs_ = 0;
    } else {
      ++stale_epochs_;
    }
    const double criterion = val_ ? validation_loss() : rec.total;
    if (criterion < best_criterion_) {
      best_criterion_ = criterion;
      save_checkpoint(out_dir_ / "best.ckpt");
    }
    if (epoch_ % cfg_.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04lld.ckpt", static_cast<long long>(epoch_));
      save_checkpoint(out_dir_ / name);
    }
    if (stale_epochs_ >= cfg_.early_stop_patience) {
      outcome.early_stopped = true;
      break;
    }
  }
  save_checkpoint(out_dir_ / "last.ckpt");
  return outcome;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.meta["format"] = "rednet-train";
  ck.meta["epoch"] = std::to_string(epoch_);
  std::ostringstream rng;
  rng << rng_;
  ck.meta["rng"] = rng.str();
  ck.meta["best_loss"] = g17(best_loss_);
  ck.meta["best_criterion"] = g17(best_criterion_);
  ck.meta["stale_epochs"] = std::to_string(stale_epochs_);
  ck.meta["stats.rgb_mean"] = join(stats_.rgb_mean);
  ck.meta["stats.rgb_std"] = join(stats_.rgb_std);
  ck.meta["stats.depth_mean"] = g17(stats_.depth_mean);
  ck.meta["stats.depth_std"] = g17(stats_.depth_std);
  ck.meta["class_weights"] = join(weights_.alpha);
  for (const auto& [k, v] : config_entries(cfg_)) ck.meta["config." + k] = v;
  store_model(ck, *net_);
  store_optimizer(ck, opt_);
  return ck;
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const { checkpoint().save(path); }

void Trainer::restore(const Checkpoint& ck) {
  const auto mine = config_entries(cfg_);
  for (const char* key : {"model.encoder_depth", "model.num_classes", "model.height", "model.width",
                          "model.channel_divisor"}) {
    const std::string& theirs = ck.meta_at(std::string("config.") + key);
    if (theirs != mine.at(key)) {
      throw ConfigError(std::string("checkpoint has ") + key + " = " + theirs + ", this run uses " + mine.at(key));
    }
  }
  restore_model(ck, *net_);
  restore_optimizer(ck, opt_);
  epoch_ = std::stoll(ck.meta_at("epoch"));
  std::istringstream rng(ck.meta_at("rng"));
  rng >> rng_;
  if (!rng) throw DataError("checkpoint rng state is malformed");
  best_loss_ = parse_real(ck.meta_at("best_loss"));
  best_criterion_ = parse_real(ck.meta_at("best_criterion"));
  stale_epochs_ = std::stoll(ck.meta_at("stale_epochs"));
  stats_ = stats_from_checkpoint(ck);
  auto alpha = split_reals(ck.meta_at("class_weights"));
  if (static_cast<int>(alpha.size()) != cfg_.num_classes) throw DataError("checkpoint class weights are malformed");
  weights_.alpha = std::move(alpha);
}

RunConfig config_from_checkpoint(const Checkpoint& ck) {
  RunConfig cfg;
  for (const auto& [k, v] : ck.meta) {
    if (k.rfind("config.", 0) == 0) cfg.set(k.substr(7), v);
  }
  cfg.validate();
  return cfg;
}

DatasetStats stats_from_checkpoint(const Checkpoint& ck) {
  DatasetStats st;
  const auto rgb_mean = split_reals(ck.meta_at("stats.rgb_mean"));
  const auto rgb_std = split_reals(ck.meta_at("stats.rgb_std"));
  if (rgb_mean.size() != 3 || rgb_std.size() != 3) throw DataError("checkpoint dataset stats are malformed");
  std::copy(rgb_mean.begin(), rgb_mean.end(), st.rgb_mean.begin());
  std::copy(rgb_std.begin(), rgb_std.end(), st.rgb_std.begin());
  st.depth_mean = parse_real(ck.meta_at("stats.depth_mean"));
  st.depth_std = parse_real(ck.meta_at("stats.depth_std"));
  return st;
}

}  // namespace rednet
