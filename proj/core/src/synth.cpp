#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>

#include "rednet/data.hpp"
#include "rednet/error.hpp"

namespace rednet {
namespace {

struct Rect {
  int64_t y0, x0, y1, x1;  // half-open
  int32_t label;
  float depth;
};

// Well-separated class colors: golden-ratio hue steps.
void class_color(int32_t label, float& r, float& g, float& b) {
  const float hue = std::fmod(0.618034f * static_cast<float>(label), 1.0f);
  const float sat = label % 2 == 0 ? 0.75f : 0.55f;
  const float val = label % 3 == 0 ? 0.6f : 0.85f;
  hsv_to_rgb(hue, sat, val, r, g, b);
}

std::string numbered(const char* stem, uint64_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05llu.%s", stem, static_cast<unsigned long long>(i), ext);
  return buf;
}

}  // namespace

Sample synth_scene(const SynthConfig& cfg, uint64_t index) {
  if (cfg.num_classes < 2) throw ConfigError("synth: num_classes must be >= 2");
  if (cfg.height < 8 || cfg.width < 8) throw ConfigError("synth: images must be at least 8x8");
  std::mt19937_64 rng = sample_rng(cfg.seed, 0x5e7, index);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto integer = [&](int64_t lo, int64_t hi) { return std::uniform_int_distribution<int64_t>(lo, hi)(rng); };

  const int64_t h = cfg.height;
  const int64_t w = cfg.width;
  // Background plane between 0.6 and 1.0, tilted along a random direction.
  const double tilt = uniform(0.0, 1.0);
  const double near = uniform(0.6, 0.7);
  const double span = 1.0 - near;

  // One depth per class, on a 0.05 grid in [0.1, 0.55], so equal depth <=> equal class.
  std::vector<int> slots(10);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<float> class_depth(cfg.num_classes + 1, 0.0f);
  int used_slots = 0;

  const int count = static_cast<int>(integer(2, 5));
  std::vector<Rect> rects;
  for (int i = 0; i < count; ++i) {
    Rect r{};
    r.label = static_cast<int32_t>(integer(2, cfg.num_classes));
    const int64_t rh = integer(std::max<int64_t>(2, h / 8), std::max<int64_t>(2, h / 2));
    const int64_t rw = integer(std::max<int64_t>(2, w / 8), std::max<int64_t>(2, w / 2));
    r.y0 = integer(0, h - rh);
    r.x0 = integer(0, w - rw);
    r.y1 = r.y0 + rh;
    r.x1 = r.x0 + rw;
    if (class_depth[r.label] == 0.0f) {
      class_depth[r.label] = static_cast<float>(0.1 + 0.05 * slots[used_slots++ % slots.size()]);
    }
    r.depth = class_depth[r.label];
    rects.push_back(r);
  }
  // Painter's order: far first so nearer rectangles occlude.
  std::stable_sort(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) { return a.depth > b.depth; });

  Sample s{Tensor<float>(Shape{1, 3, h, w}), Tensor<float>(Shape{1, 1, h, w}), LabelMap(1, h, w, 1)};
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const double t = tilt * static_cast<double>(y) / static_cast<double>(h - 1) +
                       (1.0 - tilt) * static_cast<double>(x) / static_cast<double>(w - 1);
      s.depth.at(0, 0, y, x) = static_cast<float>(near + span * t);
    }
  }
  for (const auto& r : rects) {
    for (int64_t y = r.y0; y < r.y1; ++y) {
      for (int64_t x = r.x0; x < r.x1; ++x) {
        s.labels.at(0, y, x) = r.label;
        s.depth.at(0, 0, y, x) = r.depth;
      }
    }
  }
  std::normal_distribution<float> noise(0.0f, 0.03f);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      float c[3];
      class_color(s.labels.at(0, y, x), c[0], c[1], c[2]);
      for (int k = 0; k < 3; ++k) s.rgb.at(0, k, y, x) = std::clamp(c[k] + noise(rng), 0.0f, 1.0f);
    }
  }
  return s;
}

DatasetManifest synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.samples < 1) throw ConfigError("synth: samples must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  DatasetManifest m;
  m.num_classes = cfg.num_classes;
  m.split = "synthetic";
  m.base_dir = out_dir;
  for (int i = 0; i < cfg.samples; ++i) {
    SampleRecord rec{numbered("rgb", i, "ppm"), numbered("depth", i, "pgm"), numbered("label", i, "rten")};
    m.records.push_back(rec);
    save_sample(synth_scene(cfg, static_cast<uint64_t>(i)), m.resolved(m.records.size() - 1));
  }
  m.save(out_dir / "manifest.txt");
  return m;
}

}  // namespace rednet
