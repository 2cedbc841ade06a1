#include "rednet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rednet/error.hpp"
#include "rednet/ops.hpp"
#include "rednet/pnm.hpp"
#include "rednet/rten.hpp"

namespace rednet {

void Sample::validate() const {
  const Shape r = rgb.shape();
  const Shape d = depth.shape();
  if (r.n != 1 || r.c != 3 || d.n != 1 || d.c != 1 || labels.n != 1 || r.h != d.h || r.w != d.w ||
      r.h != labels.h || r.w != labels.w) {
    throw ShapeError("sample parts disagree: rgb " + r.str() + ", depth " + d.str() + ", labels " +
                     labels.shape().str());
  }
}

SampleRecord DatasetManifest::resolved(size_t i) const {
  const SampleRecord& r = records.at(i);
  auto fix = [&](const std::filesystem::path& p) { return p.is_absolute() ? p : base_dir / p; };
  return {fix(r.rgb), fix(r.depth), fix(r.labels)};
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::string line;
  int lineno = 0;
  auto where = [&] { return path.string() + ":" + std::to_string(lineno) + ": "; };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#classes=", 0) == 0) {
        try {
          size_t used = 0;
          m.num_classes = std::stoi(line.substr(9), &used);
          if (used != line.size() - 9) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw DataError(where() + "bad #classes header");
        }
      } else if (line.rfind("#split=", 0) == 0) {
        m.split = line.substr(7);
      }
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw DataError(where() + "expected rgb<TAB>depth<TAB>labels");
    }
    m.records.push_back({fields[0], fields[1], fields[2]});
  }
  if (m.num_classes < 1) throw DataError(path.string() + ": missing #classes=N header");
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << "#classes=" << num_classes << '\n';
  if (!split.empty()) out << "#split=" << split << '\n';
  for (const auto& r : records) {
    out << r.rgb.generic_string() << '\t' << r.depth.generic_string() << '\t' << r.labels.generic_string() << '\n';
  }
  if (!out) throw DataError("failed writing manifest " + path.string());
}

Sample load_sample(const SampleRecord& record) {
  Sample s{load_ppm(record.rgb), load_pgm(record.depth), load_rten_labels(record.labels)};
  if (s.labels.n != 1) throw DataError(record.labels.string() + ": expected a single label map");
  try {
    s.validate();
  } catch (const ShapeError& e) {
    throw DataError(record.rgb.string() + ": " + e.what());
  }
  return s;
}

void save_sample(const Sample& sample, const SampleRecord& record) {
  sample.validate();
  save_ppm(record.rgb, sample.rgb);
  save_pgm16(record.depth, sample.depth);
  save_rten(record.labels, sample.labels);
}

Sample resize_sample(const Sample& s, int64_t height, int64_t width) {
  if (s.height() == height && s.width() == width) return s;
  return {resize_bilinear(s.rgb, height, width), resize_nearest(s.depth, height, width),
          resize_nearest(s.labels, height, width)};
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float mx = std::max({r, g, b});
  const float mn = std::min({r, g, b});
  const float d = mx - mn;
  v = mx;
  s = mx > 0 ? d / mx : 0.0f;
  if (d <= 0) {
    h = 0;
    return;
  }
  float hh;
  if (mx == r) {
    hh = (g - b) / d;
  } else if (mx == g) {
    hh = 2.0f + (b - r) / d;
  } else {
    hh = 4.0f + (r - g) / d;
  }
  hh /= 6.0f;
  h = hh < 0 ? hh + 1.0f : hh;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  h = h - std::floor(h);
  const float x = h * 6.0f;
  const int i = std::min(static_cast<int>(x), 5);
  const float f = x - static_cast<float>(i);
  const float p = v * (1 - s);
  const float q = v * (1 - s * f);
  const float t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

Sample augment(const Sample& s, const AugmentConfig& cfg, std::mt19937_64& rng) {
  s.validate();
  if (!cfg.enabled) return s;
  const int64_t h = s.height();
  const int64_t w = s.width();
  // Fixed draw order: scale, crop y, crop x, brightness, saturation, hue.
  const double scale = cfg.scale_max > cfg.scale_min
                           ? std::uniform_real_distribution<double>(cfg.scale_min, cfg.scale_max)(rng)
                           : cfg.scale_min;
  const int64_t sh = std::max<int64_t>(h, std::llround(static_cast<double>(h) * scale));
  const int64_t sw = std::max<int64_t>(w, std::llround(static_cast<double>(w) * scale));
  const int64_t oy = std::uniform_int_distribution<int64_t>(0, sh - h)(rng);
  const int64_t ox = std::uniform_int_distribution<int64_t>(0, sw - w)(rng);
  auto jitter = [&](double range) {
    return range > 0 ? std::uniform_real_distribution<double>(-range, range)(rng) : 0.0;
  };
  const float bright = static_cast<float>(1.0 + jitter(cfg.brightness));
  const float sat = static_cast<float>(1.0 + jitter(cfg.saturation));
  const float hue = static_cast<float>(jitter(cfg.hue));

  Sample scaled = resize_sample(s, sh, sw);
  Sample out{Tensor<float>(Shape{1, 3, h, w}), Tensor<float>(Shape{1, 1, h, w}), LabelMap(1, h, w)};
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) out.rgb.at(0, c, y, x) = scaled.rgb.at(0, c, y + oy, x + ox);
      out.depth.at(0, 0, y, x) = scaled.depth.at(0, 0, y + oy, x + ox);
      out.labels.at(0, y, x) = scaled.labels.at(0, y + oy, x + ox);
    }
  }
  if (bright == 1.0f && sat == 1.0f && hue == 0.0f) return out;
  const int64_t plane = h * w;
  float* r = out.rgb.ptr();
  float* g = r + plane;
  float* b = g + plane;
  for (int64_t i = 0; i < plane; ++i) {
    float hh, ss, vv;
    rgb_to_hsv(r[i], g[i], b[i], hh, ss, vv);
    hh += hue;
    ss = std::clamp(ss * sat, 0.0f, 1.0f);
    vv = std::clamp(vv * bright, 0.0f, 1.0f);
    hsv_to_rgb(hh, ss, vv, r[i], g[i], b[i]);
    r[i] = std::clamp(r[i], 0.0f, 1.0f);
    g[i] = std::clamp(g[i], 0.0f, 1.0f);
    b[i] = std::clamp(b[i], 0.0f, 1.0f);
  }
  return out;
}

namespace {

template <typename Visit>
DatasetStats stats_from(size_t n, Visit&& visit) {
  if (n == 0) throw DataError("compute_stats: empty dataset");
  std::array<double, 4> mean{};
  int64_t count = 0;
  for (size_t i = 0; i < n; ++i) {
    visit(i, [&](const Sample& s) {
      const int64_t plane = s.rgb.shape().plane();
      for (int c = 0; c < 3; ++c) {
        const float* p = s.rgb.plane(0, c);
        for (int64_t k = 0; k < plane; ++k) mean[c] += p[k];
      }
      for (int64_t k = 0; k < plane; ++k) mean[3] += s.depth[k];
      count += plane;
    });
  }
  for (auto& m : mean) m /= static_cast<double>(count);
  std::array<double, 4> var{};
  for (size_t i = 0; i < n; ++i) {
    visit(i, [&](const Sample& s) {
      const int64_t plane = s.rgb.shape().plane();
      for (int c = 0; c < 3; ++c) {
        const float* p = s.rgb.plane(0, c);
        for (int64_t k = 0; k < plane; ++k) {
          const double d = p[k] - mean[c];
          var[c] += d * d;
        }
      }
      for (int64_t k = 0; k < plane; ++k) {
        const double d = s.depth[k] - mean[3];
        var[3] += d * d;
      }
    });
  }
  DatasetStats st;
  static const char* names[4] = {"rgb.r", "rgb.g", "rgb.b", "depth"};
  std::array<double, 4> sd{};
  for (int c = 0; c < 4; ++c) {
    sd[c] = std::sqrt(var[c] / static_cast<double>(count));
    if (sd[c] < 1e-12) {
      sd[c] = 1.0;
      st.guarded.emplace_back(names[c]);
    }
  }
  st.rgb_mean = {mean[0], mean[1], mean[2]};
  st.rgb_std = {sd[0], sd[1], sd[2]};
  st.depth_mean = mean[3];
  st.depth_std = sd[3];
  return st;
}

}  // namespace

DatasetStats compute_stats(std::span<const Sample> samples) {
  return stats_from(samples.size(), [&](size_t i, auto&& f) { f(samples[i]); });
}

DatasetStats compute_stats(const DatasetManifest& manifest) {
  return stats_from(manifest.size(), [&](size_t i, auto&& f) { f(load_sample(manifest.resolved(i))); });
}

Sample normalize(const Sample& s, const DatasetStats& stats) {
  Sample out = s;
  const int64_t plane = s.rgb.shape().plane();
  for (int c = 0; c < 3; ++c) {
    float* p = out.rgb.plane(0, c);
    const double m = stats.rgb_mean[c];
    const double inv = 1.0 / stats.rgb_std[c];
    for (int64_t k = 0; k < plane; ++k) p[k] = static_cast<float>((p[k] - m) * inv);
  }
  const double inv = 1.0 / stats.depth_std;
  for (auto& v : out.depth.data()) v = static_cast<float>((v - stats.depth_mean) * inv);
  return out;
}

std::mt19937_64 sample_rng(uint64_t seed, uint64_t epoch, uint64_t index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(epoch),
                    static_cast<uint32_t>(epoch >> 32), static_cast<uint32_t>(index),
                    static_cast<uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Batch make_batch(std::span<const Sample> samples) {
  if (samples.empty()) throw DataError("make_batch: no samples");
  const int64_t n = static_cast<int64_t>(samples.size());
  const int64_t h = samples[0].height();
  const int64_t w = samples[0].width();
  Batch b{Tensor<float>(Shape{n, 3, h, w}), Tensor<float>(Shape{n, 1, h, w}), LabelMap(n, h, w)};
  for (int64_t i = 0; i < n; ++i) {
    const Sample& s = samples[i];
    s.validate();
    if (s.height() != h || s.width() != w) throw ShapeError("make_batch: samples differ in size");
    std::copy(s.rgb.data().begin(), s.rgb.data().end(), b.rgb.ptr() + i * 3 * h * w);
    std::copy(s.depth.data().begin(), s.depth.data().end(), b.depth.ptr() + i * h * w);
    std::copy(s.labels.data.begin(), s.labels.data.end(), b.labels.data.begin() + i * h * w);
  }
  return b;
}

Dataset::Dataset(DatasetManifest manifest, int64_t height, int64_t width, bool cache)
    : manifest_(std::move(manifest)), height_(height), width_(width), cache_(cache), samples_(manifest_.size()) {
  if (manifest_.size() == 0) throw DataError("dataset manifest lists no samples");
}

const Sample& Dataset::get(size_t index) {
  auto load = [&] {
    Sample s = resize_sample(load_sample(manifest_.resolved(index)), height_, width_);
    const int32_t top = max_label(s.labels);
    if (top > manifest_.num_classes) {
      throw DataError(manifest_.resolved(index).labels.string() + ": label " + std::to_string(top) +
                      " exceeds #classes=" + std::to_string(manifest_.num_classes));
    }
    return s;
  };
  if (!cache_) {
    scratch_ = load();
    return scratch_;
  }
  auto& slot = samples_.at(index);
  if (!slot) slot = load();
  return *slot;
}

}  // namespace rednet
