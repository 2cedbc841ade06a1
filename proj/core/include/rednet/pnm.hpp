#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rednet/tensor.hpp"

namespace rednet {

/// Raw binary PNM raster (P6 or P5). Samples are interleaved per pixel.
struct PnmImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 3 for P6, 1 for P5
  int maxval = 255;
  std::vector<uint16_t> samples;
};

/// Parses P6/P5 with any maxval in 1..65535 (two big-endian bytes per
/// sample when maxval > 255). Errors carry the path and byte offset.
PnmImage read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const PnmImage& image);

/// P6 -> [1,3,H,W] in [0,1] (divided by maxval).
Tensor<float> load_ppm(const std::filesystem::path& path);
/// P5 -> [1,1,H,W] in [0,1] (divided by maxval).
Tensor<float> load_pgm(const std::filesystem::path& path);

/// Quantizes [0,1] values (clamped) to 8-bit P6.
void save_ppm(const std::filesystem::path& path, const Tensor<float>& rgb);
/// Quantizes [0,1] values (clamped) to 16-bit P5.
void save_pgm16(const std::filesystem::path& path, const Tensor<float>& depth);
/// Writes an 8-bit P5 from integer values (clamped to 0..255).
void save_pgm8(const std::filesystem::path& path, int height, int width, const std::vector<int32_t>& values);

}  // namespace rednet
