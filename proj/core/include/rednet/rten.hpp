#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "rednet/label_map.hpp"
#include "rednet/tensor.hpp"

namespace rednet {

// RTEN raw tensor file:
//   "RTEN" | u8 version (1) | u8 dtype | 4 x u64 LE dims (N,C,H,W) | LE buffer
// dtype 1 = f32, 2 = f64, 3 = i32 (label maps; stored with C = 1).
enum class RtenDType : uint8_t { f32 = 1, f64 = 2, i32 = 3 };

inline constexpr uint8_t kRtenVersion = 1;

struct RtenHeader {
  RtenDType dtype = RtenDType::f32;
  Shape shape;
};

template <typename T>
void write_rten(std::ostream& os, const Tensor<T>& t);
void write_rten(std::ostream& os, const LabelMap& labels);

RtenHeader read_rten_header(std::istream& is, const std::string& source);

/// Reads a floating-point RTEN tensor, converting from the stored dtype.
template <typename T>
Tensor<T> read_rten(std::istream& is, const std::string& source = "<stream>");

/// Reads an RTEN label map. Integer payloads are taken as-is; f32/f64
/// payloads must hold integral values.
LabelMap read_rten_labels(std::istream& is, const std::string& source = "<stream>");

template <typename T>
void save_rten(const std::filesystem::path& path, const Tensor<T>& t);
void save_rten(const std::filesystem::path& path, const LabelMap& labels);

template <typename T>
Tensor<T> load_rten(const std::filesystem::path& path);
LabelMap load_rten_labels(const std::filesystem::path& path);

}  // namespace rednet
