// Acceptance driver: one PASS/FAIL line per criterion.
//
//   rednet_acceptance [--workdir DIR] [N ...]
//
// Runs every criterion when none is named. Exit status is non-zero when any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rednet/evaluation.hpp"
#include "rednet/gradcheck.hpp"
#include "rednet/model.hpp"
#include "rednet/ops.hpp"
#include "rednet/supervision.hpp"
#include "rednet/trainer.hpp"

namespace fs = std::filesystem;
using namespace rednet;

namespace {

// Pinned tolerances and budgets.
constexpr double kOpsUnitsTolerance = 1e-4;
constexpr int kOpsUnitsSeeds = 20;
constexpr double kOpsUnitsBudgetS = 300.0;
constexpr double kModelTolerance = 1e-3;
constexpr double kModelBudgetS = 120.0;
constexpr double kOracleTolerance = 1e-6;
constexpr double kToyAccuracy = 0.95;
constexpr int64_t kToyEpochs = 300;
constexpr double kToyBudgetS = 900.0;
constexpr double kPyramidRatio = 256.0;
constexpr double kPyramidRelTolerance = 0.01;

struct Verdict {
  bool pass = false;
  std::string detail;
};

fs::path g_workdir;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

bool bit_equal(const Tensor<float>& a, const Tensor<float>& b) {
  return a.shape() == b.shape() && std::memcmp(a.ptr(), b.ptr(), sizeof(float) * a.numel()) == 0;
}

bool same_parameters(RedNet<float>& a, RedNet<float>& b) {
  auto pa = a.parameters(), pb = b.parameters();
  for (size_t i = 0; i < pa.params.size(); ++i)
    if (!bit_equal(*pa.params[i].value, *pb.params[i].value)) return false;
  for (size_t i = 0; i < pa.buffers.size(); ++i)
    if (!bit_equal(*pa.buffers[i].value, *pb.buffers[i].value)) return false;
  return true;
}

DatasetManifest synth_once(const std::string& name, int samples, int size, int classes, uint64_t seed) {
  const fs::path dir = g_workdir / name;
  if (fs::exists(dir / "manifest.txt")) return DatasetManifest::load(dir / "manifest.txt");
  SynthConfig sc;
  sc.samples = samples;
  sc.height = size;
  sc.width = size;
  sc.num_classes = classes;
  sc.seed = seed;
  return synth_generate(sc, dir);
}

Verdict gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  GradcheckOptions o;
  o.seeds = kOpsUnitsSeeds;
  o.tolerance = kOpsUnitsTolerance;
  auto results = gradcheck_ops(o);
  auto units = gradcheck_units(o);
  results.insert(results.end(), units.begin(), units.end());
  const double secs = seconds_since(t0);
  std::cout << format_gradcheck(results);
  bool ok = secs < kOpsUnitsBudgetS;
  double worst = 0;
  std::string failed;
  for (const auto& r : results) {
    ok &= r.pass() && r.seeds >= kOpsUnitsSeeds;
    worst = std::max(worst, r.max_rel);
    if (!r.pass()) failed += " " + r.name;
  }
  return {ok, fmt("%zu checks x %d seeds, max rel %.2e < %.0e, %.1f s < %.0f s%s", results.size(), kOpsUnitsSeeds, worst,
                  kOpsUnitsTolerance, secs, kOpsUnitsBudgetS, failed.empty() ? "" : (" failed:" + failed).c_str())};
}

Verdict whole_model_gradient() {
  GradcheckOptions o = model_gradcheck_defaults();
  o.tolerance = kModelTolerance;
  const auto r = gradcheck_model(o);
  std::cout << format_gradcheck({r});
  const bool ok = r.pass() && r.seconds < kModelBudgetS;
  return {ok, fmt("max rel %.2e < %.0e over %lld coordinates in %lld/%lld tensors, %.1f s < %.0f s", r.max_rel,
                  kModelTolerance, static_cast<long long>(r.checked), static_cast<long long>(r.tensors_covered),
                  static_cast<long long>(r.tensors), r.seconds, kModelBudgetS)};
}

Verdict shape_law() {
  const int64_t want[5][2] = {{30, 40}, {60, 80}, {120, 160}, {240, 320}, {480, 640}};
  bool ok = true;
  std::string detail;
  for (int depth : {50, 34}) {
    const auto cfg = NetworkConfig::for_depth(depth);
    RedNet<float> net = RedNet<float>::build(cfg, 1);
    const auto out = net.forward(Tensor<float>({1, 3, 480, 640}, 0.5f), Tensor<float>({1, 1, 480, 640}, 0.5f),
                                 Mode::eval);
    detail += " depth" + std::to_string(depth) + ":";
    for (int k = 0; k < kPyramidLevels; ++k) {
      const Shape s = out[k].shape();
      ok &= s == Shape{1, cfg.num_classes, want[k][0], want[k][1]};
      detail += fmt(" %lldx%lld", static_cast<long long>(s.h), static_cast<long long>(s.w));
    }
    detail += fmt(" (%d ch)", static_cast<int>(out.final().shape().c));
  }
  return {ok, "480x640 input," + detail};
}

Verdict config_fidelity() {
  // Rows of the reference encoder/decoder table: (m, n, l_unit).
  const std::vector<LayerSummary> table = {
      {"Conv1", 3, 64, 0},      {"Layer1", 64, 256, 3},    {"Layer2", 256, 512, 4},  {"Layer3", 512, 1024, 6},
      {"Layer4", 1024, 2048, 3}, {"Trans1", 512, 256, 6},   {"Trans2", 256, 128, 4},  {"Trans3", 128, 64, 3},
      {"Trans4", 64, 64, 3},     {"Trans5", 64, 64, 3},
  };
  RedNet<float> net(NetworkConfig::resnet50());
  const auto rows = net.layer_table();
  bool ok = rows == table;
  std::string mismatch;
  for (size_t i = 0; i < std::min(rows.size(), table.size()); ++i) {
    if (!(rows[i] == table[i])) mismatch += " " + rows[i].name;
  }
  // Unit-level introspection must agree with the summary.
  for (int i = 1; i <= 4; ++i) {
    auto specs = net.unit_specs("layer" + std::to_string(i));
    ok &= static_cast<int>(specs.size()) == table[i].units && specs.front().in_channels == table[i].in_channels &&
          specs.back().out_channels == table[i].out_channels;
  }
  for (int j = 1; j <= 5; ++j) {
    auto specs = net.unit_specs("trans" + std::to_string(j));
    ok &= static_cast<int>(specs.size()) == table[4 + j].units && specs.front().in_channels == table[4 + j].in_channels &&
          specs.back().out_channels == table[4 + j].out_channels;
  }
  return {ok, fmt("%zu rows compared%s", table.size(), mismatch.empty() ? ", all equal" : (", differ:" + mismatch).c_str())};
}

Verdict oracle_equivalence() {
  struct Geom {
    int n, c, h, w, o, k, s, p;
  };
  const std::vector<Geom> conv = {{1, 2, 5, 5, 3, 3, 1, 1}, {2, 3, 6, 7, 4, 3, 2, 1}, {1, 3, 19, 17, 8, 7, 2, 3},
                                  {2, 16, 9, 9, 8, 1, 1, 0}, {1, 8, 10, 9, 16, 1, 2, 0}, {2, 8, 12, 12, 8, 3, 1, 1}};
  const std::vector<Geom> trans = {{1, 4, 3, 3, 2, 2, 2, 0}, {2, 8, 5, 7, 4, 2, 2, 0}, {1, 3, 4, 4, 5, 3, 2, 1},
                                   {2, 6, 6, 5, 6, 2, 2, 0}};
  double conv_err = 0, trans_err = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    for (const auto& g : conv) {
      auto x = oracle::random_tensor<double>({g.n, g.c, g.h, g.w}, rng);
      auto w = oracle::random_tensor<double>({g.o, g.c, g.k, g.k}, rng);
      auto bt = oracle::random_tensor<double>({1, g.o, 1, 1}, rng);
      std::vector<double> b(bt.data().begin(), bt.data().end());
      auto got = conv2d_forward<double>(x, w, b, ConvParams::square(g.c, g.o, g.k, g.s, g.p, true));
      conv_err = std::max(conv_err, max_abs_diff(got, oracle::direct_conv(x, w, b, g.s, g.p)));
    }
    for (const auto& g : trans) {
      auto x = oracle::random_tensor<double>({g.n, g.c, g.h, g.w}, rng);
      auto w = oracle::random_tensor<double>({g.c, g.o, g.k, g.k}, rng);
      auto bt = oracle::random_tensor<double>({1, g.o, 1, 1}, rng);
      std::vector<double> b(bt.data().begin(), bt.data().end());
      auto got = transpose_conv2d_forward<double>(x, w, b, ConvParams::square(g.c, g.o, g.k, g.s, g.p, true));
      trans_err = std::max(trans_err, max_abs_diff(got, oracle::zero_stuffed_transpose_conv(x, w, b, g.s, g.p)));
    }
  }

  bool metrics_exact = true;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const int n = 2 + static_cast<int>(seed % 6);
    auto gt = oracle::random_labels(2, 9, 9, 0, n, rng);
    auto pred = oracle::random_labels(2, 9, 9, 1, n, rng);
    ConfusionMatrix cm(n);
    cm.accumulate(pred, gt);
    const auto ref = oracle::double_loop_confusion(pred, gt, n);
    for (int g = 0; g < n; ++g)
      for (int p = 0; p < n; ++p) metrics_exact &= cm.at(g, p) == ref[g][p];
    // Summary metrics from the oracle matrix by the textbook formulas.
    int64_t total = 0, trace = 0;
    double acc_sum = 0, iou_sum = 0;
    int acc_n = 0, iou_n = 0;
    for (int c = 0; c < n; ++c) {
      int64_t row = 0, col = 0;
      for (int k = 0; k < n; ++k) {
        row += ref[c][k];
        col += ref[k][c];
        total += ref[c][k];
      }
      trace += ref[c][c];
      if (row > 0) {
        acc_sum += static_cast<double>(ref[c][c]) / static_cast<double>(row);
        ++acc_n;
      }
      if (row + col > 0) {
        iou_sum += static_cast<double>(ref[c][c]) / static_cast<double>(row + col - ref[c][c]);
        ++iou_n;
      }
    }
    const auto m = compute_metrics(cm);
    metrics_exact &= m.pixel_acc == static_cast<double>(trace) / static_cast<double>(total);
    metrics_exact &= m.mean_acc == acc_sum / acc_n;
    metrics_exact &= m.miou == iou_sum / iou_n;
  }
  const bool ok = conv_err <= kOracleTolerance && trans_err <= kOracleTolerance && metrics_exact;
  return {ok, fmt("im2col vs direct %.2e, transpose vs zero-stuffing %.2e (<= %.0e), metrics %s", conv_err, trans_err,
                  kOracleTolerance, metrics_exact ? "exact" : "MISMATCH")};
}

RunConfig toy_config(const std::string& run) {
  RunConfig cfg = RunConfig::load(fs::path(REDNET_SOURCE_DIR) / "configs" / "toy.cfg");
  const auto m = synth_once("toy_data", 8, 64, 4, 1);
  cfg.manifest = (g_workdir / "toy_data" / "manifest.txt").string();
  cfg.output_dir = (g_workdir / run).string();
  return cfg;
}

Verdict convergence() {
  RunConfig cfg = toy_config("toy_run");
  cfg.epochs = kToyEpochs;
  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(cfg);
  const auto outcome = trainer.train();
  const auto r = evaluate(trainer.dataset(), trainer.stats(), model_predictor(trainer.model()), cfg.batch_size);
  const double secs = seconds_since(t0);
  const double acc = r.metrics[kPyramidLevels - 1].pixel_acc;
  const auto& h = outcome.history;
  const double ratio200 = h.size() > 199 ? h[199].total / h.front().total : NAN;
  const bool ok = acc >= kToyAccuracy && static_cast<int64_t>(h.size()) <= kToyEpochs && secs < kToyBudgetS;
  return {ok, fmt("train pixel acc %.4f >= %.2f after %zu epochs (loss %.4f -> %.4f, epoch-199/epoch-0 %.3f), %.0f s < %.0f s",
                  acc, kToyAccuracy, h.size(), h.front().total, h.back().total, ratio200, secs, kToyBudgetS)};
}

Verdict pyramid_ablation() {
  synth_once("ablation_train", 200, 64, 4, 11);
  synth_once("ablation_val", 40, 64, 4, 12);
  const fs::path artifact = g_workdir / "pyramid_ablation.tsv";
  std::ofstream tsv(artifact);
  tsv << "variant\tpixel_acc\tmean_acc\tmiou\tfinal_train_loss\n";
  bool ok = true;
  std::string detail;
  for (bool pyramid : {true, false}) {
    RunConfig cfg;
    cfg.encoder_depth = 34;
    cfg.num_classes = 4;
    cfg.height = cfg.width = 64;
    cfg.channel_divisor = 8;
    cfg.epochs = 8;
    cfg.batch_size = 8;
    cfg.sgd.base_lr = 0.05;
    cfg.seed = 5;
    cfg.checkpoint_every = 100;
    cfg.pyramid = pyramid;
    cfg.manifest = (g_workdir / "ablation_train" / "manifest.txt").string();
    cfg.output_dir = (g_workdir / (pyramid ? "ablation_pyramid" : "ablation_final_only")).string();
    Trainer trainer(cfg);
    const auto outcome = trainer.train();
    Dataset val(DatasetManifest::load(g_workdir / "ablation_val" / "manifest.txt"), 64, 64);
    const auto r = evaluate(val, trainer.stats(), model_predictor(trainer.model()), 8);
    const auto& m = r.metrics[kPyramidLevels - 1];
    const std::string name = pyramid ? "RedNet-34 with pyramid" : "RedNet-34 without pyramid";
    tsv << name << "\t" << fmt("%.6f\t%.6f\t%.6f\t%.6f", m.pixel_acc, m.mean_acc, m.miou, outcome.history.back().total)
        << "\n";
    ok &= outcome.history.size() == static_cast<size_t>(cfg.epochs) && std::isfinite(outcome.history.back().total);
    detail += fmt("%s%s: pixel %.3f mIoU %.3f", detail.empty() ? "" : "; ", pyramid ? "with" : "without", m.pixel_acc,
                  m.miou);
  }
  tsv.close();
  std::ifstream check(artifact);
  int lines = 0;
  for (std::string l; std::getline(check, l);) ++lines;
  ok &= lines == 3;
  return {ok, detail + "; artifact " + artifact.string()};
}

Verdict supervision_weighting() {
  const int64_t h = 480, w = 640;
  const int classes = 4;
  LabelMap labels(1, h, w, 3);
  const auto targets = build_pyramid_targets(labels, h, w);
  PyramidOutputs<double> base;
  for (int k = 0; k < kPyramidLevels; ++k)
    base[k] = Tensor<double>({1, classes, h / kPyramidFactors[k], w / kPyramidFactors[k]}, 0.0);
  const auto weights = ClassWeights::uniform(classes);
  const double l0 = pyramid_loss(base, targets, weights).total;
  // Change in total when one pixel's correct-class score rises by d.
  auto contribution = [&](int level) {
    auto o = base;
    o[level].at(0, 2, 7, 11) += 1e-3;
    return l0 - pyramid_loss(o, targets, weights).total;
  };
  const double out1 = contribution(0), final_px = contribution(kPyramidLevels - 1);
  const double ratio = out1 / final_px;
  const bool ok = std::abs(ratio - kPyramidRatio) <= kPyramidRelTolerance * kPyramidRatio;
  return {ok, fmt("out1 pixel / final pixel = %.4f (want %.0f within %.0f%%)", ratio, kPyramidRatio,
                  kPyramidRelTolerance * 100)};
}

Verdict median_frequency() {
  bool uniform_ok = true, scale_ok = true;
  for (int n : {2, 4, 13, 37})
    for (int64_t c : {int64_t{1}, int64_t{7}, int64_t{123456789}}) {
      std::vector<int64_t> counts(n, c);
      for (double a : median_frequency_weights(counts).alpha) uniform_ok &= a == 1.0;
    }
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int64_t> u(1, 1000000);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int64_t> counts(2 + trial % 36);
    for (auto& c : counts) c = u(rng);
    const auto base = median_frequency_weights(counts);
    for (int64_t k : {2, 10, 4096, 999983}) {
      auto scaled = counts;
      for (auto& c : scaled) c *= k;
      scale_ok &= median_frequency_weights(scaled).alpha == base.alpha;
    }
  }
  return {uniform_ok && scale_ok, fmt("uniform histograms give exactly 1: %s; scaled counts give identical weights: %s",
                                      uniform_ok ? "yes" : "no", scale_ok ? "yes" : "no")};
}

Verdict determinism_and_resume() {
  std::map<std::string, std::vector<std::string>> logs;
  auto run = [&](const std::string& name, int64_t epochs, const fs::path* resume) {
    RunConfig cfg = toy_config(name);
    cfg.epochs = epochs;
    cfg.augment.enabled = true;
    cfg.checkpoint_every = 1;
    auto t = std::make_unique<Trainer>(cfg);
    if (resume) t->restore(Checkpoint::load(*resume));
    t->train();
    std::ifstream in(fs::path(cfg.output_dir) / "train.log");
    logs[name].clear();
    for (std::string l; std::getline(in, l);) logs[name].push_back(parse_log_line(l).deterministic_part());
    return t;
  };
  auto a = run("det_a", 3, nullptr);
  auto b = run("det_b", 3, nullptr);
  const bool same_logs = logs["det_a"] == logs["det_b"] && logs["det_a"].size() == 3;
  const bool same_params = same_parameters(a->model(), b->model());

  run("det_part", 2, nullptr);
  const fs::path ck = g_workdir / "det_part" / "epoch_0002.ckpt";
  auto resumed = run("det_part", 3, &ck);
  const bool resume_log = logs["det_part"].size() == 3 && logs["det_part"][2] == logs["det_a"][2];
  const bool resume_params = same_parameters(a->model(), resumed->model());
  const bool ok = same_logs && same_params && resume_log && resume_params;
  return {ok, fmt("repeat run: logs %s, parameters %s; resumed epoch 2: log %s, parameters %s",
                  same_logs ? "identical" : "DIFFER", same_params ? "identical" : "DIFFER",
                  resume_log ? "identical" : "DIFFER", resume_params ? "identical" : "DIFFER")};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  g_workdir = fs::temp_directory_path() / "rednet_acceptance";
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) {
      g_workdir = argv[++i];
    } else {
      try {
        selected.push_back(std::stoi(a));
      } catch (const std::exception&) {
        std::cerr << "usage: rednet_acceptance [--workdir DIR] [criterion ...]\n";
        return 2;
      }
    }
  }
  fs::create_directories(g_workdir);

  const std::vector<Criterion> all = {
      {1, "gradient suite (ops and units)", gradient_suite},
      {2, "whole-model gradient", whole_model_gradient},
      {3, "output shape law", shape_law},
      {4, "layer configuration table", config_fidelity},
      {5, "oracle equivalence", oracle_equivalence},
      {6, "toy convergence", convergence},
      {7, "pyramid ablation artifact", pyramid_ablation},
      {8, "supervision weighting", supervision_weighting},
      {9, "median-frequency weights", median_frequency},
      {10, "determinism and resume", determinism_and_resume},
  };
  if (selected.empty())
    for (const auto& c : all) selected.push_back(c.id);

  int failures = 0;
  std::vector<std::string> summary;
  for (int id : selected) {
    auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; });
    if (it == all.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    Verdict v;
    try {
      v = it->run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    const std::string line = fmt("%s criterion %d: %s: ", v.pass ? "PASS" : "FAIL", it->id, it->title) + v.detail;
    std::cout << line << std::endl;
    summary.push_back(line);
  }
  if (selected.size() > 1) {
    std::cout << "\n";
    for (const auto& l : summary) std::cout << l << "\n";
  }
  return failures == 0 ? 0 : 1;
}
