// rednet: train, evaluate and inspect RGB-D segmentation networks.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rednet/checkpoint.hpp"
#include "rednet/config.hpp"
#include "rednet/data.hpp"
#include "rednet/error.hpp"
#include "rednet/evaluation.hpp"
#include "rednet/gradcheck.hpp"
#include "rednet/pnm.hpp"
#include "rednet/rten.hpp"
#include "rednet/supervision.hpp"
#include "rednet/trainer.hpp"

namespace fs = std::filesystem;
using namespace rednet;

namespace {

int code(ExitCode c) { return static_cast<int>(c); }

RunConfig resolve_train_config(const std::string& path, const std::vector<std::string>& overrides,
                               std::optional<uint64_t> seed, const std::string& pyramid, const std::string& out) {
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::load(path);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    cfg.set(o.substr(0, eq), o.substr(eq + 1));
  }
  if (seed) cfg.seed = *seed;
  if (!pyramid.empty()) cfg.set("train.pyramid", pyramid);
  if (!out.empty()) cfg.output_dir = out;
  cfg.validate();
  return cfg;
}

int cmd_train(const std::string& config, const std::vector<std::string>& overrides, std::optional<uint64_t> seed,
              const std::string& pyramid, const std::string& out, const std::string& resume, bool quiet) {
  const RunConfig cfg = resolve_train_config(config, overrides, seed, pyramid, out);
  Trainer trainer(cfg);
  if (!resume.empty()) trainer.restore(Checkpoint::load(resume));
  if (!quiet) {
    trainer.on_epoch = [](const EpochRecord& r) { std::cout << r.log_line() << "\n" << std::flush; };
  }
  const TrainOutcome outcome = trainer.train();
  std::cout << "trained to epoch " << trainer.next_epoch() << (outcome.early_stopped ? " (early stop)" : "")
            << "; outputs in " << cfg.output_dir << "\n";
  return code(ExitCode::ok);
}

void write_metrics_table(const fs::path& path, const EvaluationResult& r) {
  std::ofstream out(path);
  out << "output\tpixel_acc\tmean_acc\tmiou\n";
  for (int k = 0; k < kPyramidLevels; ++k) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\t%.6f\n", kPyramidNames[k], r.metrics[k].pixel_acc,
                  r.metrics[k].mean_acc, r.metrics[k].miou);
    out << buf;
  }
  if (!out) throw DataError("cannot write " + path.string());
}

int cmd_eval(const std::string& checkpoint, const std::string& manifest_path, bool oracle, const std::string& out,
             int batch, int height, int width) {
  DatasetManifest manifest = DatasetManifest::load(manifest_path);
  RunConfig cfg;
  DatasetStats stats;
  std::optional<RedNet<float>> net;
  if (oracle) {
    cfg.num_classes = manifest.num_classes;
    if (height <= 0 || width <= 0) {
      const Sample first = load_sample(manifest.resolved(0));
      height = static_cast<int>(first.height());
      width = static_cast<int>(first.width());
    }
    cfg.height = height;
    cfg.width = width;
  } else {
    if (checkpoint.empty()) throw ConfigError("eval needs --checkpoint or --oracle");
    const Checkpoint ck = Checkpoint::load(checkpoint);
    cfg = config_from_checkpoint(ck);
    stats = stats_from_checkpoint(ck);
    net.emplace(cfg.network());
    restore_model(ck, *net);
  }
  if (manifest.num_classes != cfg.num_classes) {
    throw DataError("manifest declares " + std::to_string(manifest.num_classes) + " classes, model has " +
                    std::to_string(cfg.num_classes));
  }
  Dataset data(std::move(manifest), cfg.height, cfg.width);
  const Predictor predict = oracle ? oracle_predictor(cfg.num_classes) : model_predictor(*net);
  const EvaluationResult r = evaluate(data, stats, predict, batch);
  for (int k = 0; k < kPyramidLevels; ++k) {
    std::cout << format_report(r.confusion[k], r.metrics[k], kPyramidNames[k]) << "\n";
  }
  if (!out.empty()) {
    fs::create_directories(out);
    cfg.save(fs::path(out) / "config.cfg");
    write_metrics_table(fs::path(out) / "metrics.tsv", r);
    std::ofstream report(fs::path(out) / "report.txt");
    for (int k = 0; k < kPyramidLevels; ++k) {
      report << format_report(r.confusion[k], r.metrics[k], kPyramidNames[k]) << "\n";
      const int n = r.confusion[k].num_classes();
      LabelMap cm(1, n, n);
      for (int i = 0; i < n * n; ++i) cm.data[i] = static_cast<int32_t>(r.confusion[k].counts()[i]);
      save_rten(fs::path(out) / ("confusion_" + std::string(kPyramidNames[k]) + ".rten"), cm);
    }
  }
  return code(ExitCode::ok);
}

int cmd_infer(const std::string& checkpoint, const std::string& rgb_path, const std::string& depth_path,
              const std::string& out) {
  const Checkpoint ck = Checkpoint::load(checkpoint);
  const RunConfig cfg = config_from_checkpoint(ck);
  const DatasetStats stats = stats_from_checkpoint(ck);
  RedNet<float> net(cfg.network());
  restore_model(ck, net);
  Sample s{load_ppm(rgb_path), load_pgm(depth_path), LabelMap()};
  if (s.rgb.shape().h != s.depth.shape().h || s.rgb.shape().w != s.depth.shape().w) {
    throw DataError("rgb " + s.rgb.shape().str() + " and depth " + s.depth.shape().str() + " differ in size");
  }
  s.labels = LabelMap(1, s.rgb.shape().h, s.rgb.shape().w);
  s = normalize(resize_sample(s, cfg.height, cfg.width), stats);
  const PyramidOutputs<float> scores = net.forward(s.rgb, s.depth, Mode::eval);
  fs::create_directories(out);
  cfg.save(fs::path(out) / "config.cfg");
  for (int k = 0; k < kPyramidLevels; ++k) {
    const std::string name = kPyramidNames[k];
    save_rten(fs::path(out) / ("scores_" + name + ".rten"), scores[k]);
    const LabelMap pred = argmax_labels(scores[k]);
    save_pgm8(fs::path(out) / ("labels_" + name + ".pgm"), static_cast<int>(pred.h), static_cast<int>(pred.w),
              pred.data);
  }
  std::cout << "wrote scores and argmax maps for " << kPyramidLevels << " outputs to " << out << "\n";
  return code(ExitCode::ok);
}

int cmd_gradcheck(const std::string& scope, int seeds) {
  GradcheckOptions opts;
  opts.seeds = seeds;
  const auto results = run_gradcheck(scope, opts);
  std::cout << format_gradcheck(results);
  for (const auto& r : results) {
    if (!r.pass()) return code(ExitCode::gradcheck_failure);
  }
  return code(ExitCode::ok);
}

int cmd_synth(const SynthConfig& cfg, const std::string& out) {
  const DatasetManifest m = synth_generate(cfg, out);
  std::ofstream meta(fs::path(out) / "synth.cfg");
  meta << "samples = " << cfg.samples << "\nheight = " << cfg.height << "\nwidth = " << cfg.width
       << "\nnum_classes = " << cfg.num_classes << "\nseed = " << cfg.seed << "\n";
  std::cout << "wrote " << m.size() << " samples and " << (fs::path(out) / "manifest.txt").string() << "\n";
  return code(ExitCode::ok);
}

int cmd_stats(const std::string& manifest_path, const std::string& histogram_out) {
  const DatasetManifest m = DatasetManifest::load(manifest_path);
  if (m.size() == 0) throw DataError(manifest_path + " lists no samples");
  const DatasetStats st = compute_stats(m);
  std::vector<int64_t> counts(m.num_classes, 0);
  for (size_t i = 0; i < m.size(); ++i) add_histogram(counts, load_sample(m.resolved(i)).labels);
  std::printf("samples %zu\nrgb_mean %.9g %.9g %.9g\nrgb_std %.9g %.9g %.9g\ndepth_mean %.9g\ndepth_std %.9g\n",
              m.size(), st.rgb_mean[0], st.rgb_mean[1], st.rgb_mean[2], st.rgb_std[0], st.rgb_std[1], st.rgb_std[2],
              st.depth_mean, st.depth_std);
  for (const auto& g : st.guarded) std::printf("guarded %s (zero variance, std set to 1)\n", g.c_str());
  std::printf("class count median_frequency_weight\n");
  const bool any = std::any_of(counts.begin(), counts.end(), [](int64_t c) { return c > 0; });
  const ClassWeights w = any ? median_frequency_weights(counts) : ClassWeights{};
  for (int c = 0; c < m.num_classes; ++c) {
    std::printf("%5d %12lld %.9g\n", c + 1, static_cast<long long>(counts[c]), any ? w.alpha[c] : 0.0);
  }
  if (!histogram_out.empty()) write_histogram(histogram_out, counts);
  return code(ExitCode::ok);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RGB-D residual encoder-decoder for semantic segmentation"};
  app.require_subcommand(1);

  std::string config, out, resume, pyramid;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train a network from a config file");
  train->add_option("--config,-c", config, "flat key = value config file");
  train->add_option("--set", overrides, "override one key (key=value); repeatable");
  train->add_option("--seed", seed, "override train.seed");
  train->add_option("--pyramid", pyramid, "on: supervise all five outputs; off: final output only")
      ->check(CLI::IsMember({"on", "off"}));
  train->add_option("--out", out, "override output.dir");
  train->add_option("--resume", resume, "continue from a checkpoint");
  train->add_flag("--quiet,-q", quiet, "do not echo log lines");

  std::string checkpoint, manifest;
  bool oracle = false;
  int batch = 1, height = 0, width = 0;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "confusion-matrix metrics at every output scale");
  eval->add_option("--checkpoint", checkpoint, "trained checkpoint");
  eval->add_option("--manifest,-m", manifest, "dataset manifest")->required();
  eval->add_flag("--oracle", oracle, "score with one-hot ground truth instead of a network");
  eval->add_option("--out", eval_out, "directory for report.txt, metrics.tsv and confusion matrices");
  eval->add_option("--batch", batch, "evaluation batch size")->check(CLI::PositiveNumber);
  eval->add_option("--height", height, "oracle mode: evaluation height (default: first sample)");
  eval->add_option("--width", width, "oracle mode: evaluation width (default: first sample)");

  std::string rgb, depth, infer_out;
  auto* infer = app.add_subcommand("infer", "score maps and argmax labels for one RGB-D pair");
  infer->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  infer->add_option("--rgb", rgb, "P6 color image")->required();
  infer->add_option("--depth", depth, "P5 depth image")->required();
  infer->add_option("--out", infer_out, "output directory")->required();

  std::string scope = "all";
  int seeds = 20;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  grad->add_option("scope", scope, "ops, units, model or all")->check(CLI::IsMember({"ops", "units", "model", "all"}));
  grad->add_option("--seeds", seeds, "random cases per check")->check(CLI::PositiveNumber);

  SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic RGB-D dataset");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--samples,-n", synth_cfg.samples, "number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--height", synth_cfg.height, "image height");
  synth->add_option("--width", synth_cfg.width, "image width");
  synth->add_option("--classes", synth_cfg.num_classes, "number of classes (>= 2)");
  synth->add_option("--seed", synth_cfg.seed, "generator seed");

  std::string histogram_out;
  auto* stats = app.add_subcommand("stats", "normalization statistics and class histogram of a dataset");
  stats->add_option("--manifest,-m", manifest, "dataset manifest")->required();
  stats->add_option("--histogram", histogram_out, "also write the class histogram cache");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code(ExitCode::config_error);
  }

  try {
    if (*train) return cmd_train(config, overrides, seed, pyramid, out, resume, quiet);
    if (*eval) return cmd_eval(checkpoint, manifest, oracle, eval_out, batch, height, width);
    if (*infer) return cmd_infer(checkpoint, rgb, depth, infer_out);
    if (*grad) return cmd_gradcheck(scope, seeds);
    if (*synth) return cmd_synth(synth_cfg, synth_out);
    if (*stats) return cmd_stats(manifest, histogram_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return code(ExitCode::config_error);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return code(ExitCode::numeric_failure);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return code(ExitCode::data_error);
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return code(ExitCode::data_error);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return code(ExitCode::data_error);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code(ExitCode::ok);
}
