#include "rednet/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "rednet/error.hpp"

namespace rednet {
namespace {

class Cursor {
 public:
  Cursor(const std::vector<uint8_t>& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  int header_int() {
    skip_space_and_comments();
    const size_t start = pos_;
    int64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1 << 30)) fail("header value too large");
      ++pos_;
    }
    if (pos_ == start) fail("expected a decimal header value");
    return static_cast<int>(v);
  }

  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("expected whitespace before raster");
    ++pos_;
  }

  size_t pos() const { return pos_; }
  void advance(size_t n) { pos_ += n; }
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<uint8_t>& bytes_;
  std::string source_;
  size_t pos_ = 0;
};

std::vector<uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

uint16_t quantize(float v, int maxval) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<uint16_t>(std::lround(c * maxval));
}

Tensor<float> to_tensor(const PnmImage& img) {
  Tensor<float> t(Shape{1, img.channels, img.height, img.width});
  const int64_t plane = static_cast<int64_t>(img.height) * img.width;
  const float maxval = static_cast<float>(img.maxval);
  for (int64_t i = 0; i < plane; ++i) {
    for (int c = 0; c < img.channels; ++c) {
      t[c * plane + i] = static_cast<float>(img.samples[i * img.channels + c]) / maxval;
    }
  }
  return t;
}

PnmImage from_tensor(const Tensor<float>& t, int channels, int maxval, const char* what) {
  const Shape& s = t.shape();
  if (s.n != 1 || s.c != channels) {
    throw ShapeError(std::string(what) + " expects [1," + std::to_string(channels) + ",H,W], got " + s.str());
  }
  PnmImage img{static_cast<int>(s.w), static_cast<int>(s.h), channels, maxval, {}};
  const int64_t plane = s.plane();
  img.samples.resize(plane * channels);
  for (int64_t i = 0; i < plane; ++i) {
    for (int c = 0; c < channels; ++c) img.samples[i * channels + c] = quantize(t[c * plane + i], maxval);
  }
  return img;
}

}  // namespace

PnmImage read_pnm(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  Cursor cur(bytes, path.string());
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
    cur.fail("not a binary PPM/PGM (expected P6 or P5 magic)");
  }
  PnmImage img;
  img.channels = bytes[1] == '6' ? 3 : 1;
  cur.advance(2);
  img.width = cur.header_int();
  img.height = cur.header_int();
  img.maxval = cur.header_int();
  if (img.width < 1 || img.height < 1) cur.fail("image dimensions must be positive");
  if (img.maxval < 1 || img.maxval > 65535) cur.fail("maxval must be in 1..65535");
  cur.single_whitespace();
  const size_t bps = img.maxval > 255 ? 2 : 1;
  const size_t count = static_cast<size_t>(img.width) * img.height * img.channels;
  if (cur.remaining() < count * bps) {
    cur.fail("truncated raster: need " + std::to_string(count * bps) + " bytes, have " +
             std::to_string(cur.remaining()));
  }
  img.samples.resize(count);
  const uint8_t* p = bytes.data() + cur.pos();
  for (size_t i = 0; i < count; ++i) {
    const uint16_t v = bps == 2 ? static_cast<uint16_t>((p[2 * i] << 8) | p[2 * i + 1]) : p[i];
    if (v > img.maxval) {
      cur.advance(i * bps);
      cur.fail("sample " + std::to_string(v) + " exceeds maxval " + std::to_string(img.maxval));
    }
    img.samples[i] = v;
  }
  return img;
}

void write_pnm(const std::filesystem::path& path, const PnmImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
  std::vector<uint8_t> raster;
  const bool wide = img.maxval > 255;
  raster.reserve(img.samples.size() * (wide ? 2 : 1));
  for (uint16_t v : img.samples) {
    if (wide) raster.push_back(static_cast<uint8_t>(v >> 8));
    raster.push_back(static_cast<uint8_t>(v & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

Tensor<float> load_ppm(const std::filesystem::path& path) {
  auto img = read_pnm(path);
  if (img.channels != 3) throw DataError(path.string() + ": expected a P6 color image");
  return to_tensor(img);
}

Tensor<float> load_pgm(const std::filesystem::path& path) {
  auto img = read_pnm(path);
  if (img.channels != 1) throw DataError(path.string() + ": expected a P5 grayscale image");
  return to_tensor(img);
}

void save_ppm(const std::filesystem::path& path, const Tensor<float>& rgb) {
  write_pnm(path, from_tensor(rgb, 3, 255, "save_ppm"));
}

void save_pgm16(const std::filesystem::path& path, const Tensor<float>& depth) {
  write_pnm(path, from_tensor(depth, 1, 65535, "save_pgm16"));
}

void save_pgm8(const std::filesystem::path& path, int height, int width, const std::vector<int32_t>& values) {
  if (static_cast<int64_t>(values.size()) != static_cast<int64_t>(height) * width) {
    throw ShapeError("save_pgm8: value count does not match " + std::to_string(height) + "x" + std::to_string(width));
  }
  PnmImage img{width, height, 1, 255, {}};
  img.samples.reserve(values.size());
  for (int32_t v : values) img.samples.push_back(static_cast<uint16_t>(std::clamp(v, 0, 255)));
  write_pnm(path, img);
}

}  // namespace rednet
