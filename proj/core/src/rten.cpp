#include "rednet/rten.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace rednet {
namespace {

constexpr std::array<char, 4> kMagic = {'R', 'T', 'E', 'N'};

void put_u64(std::ostream& os, uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(bytes.data(), bytes.size());
}

uint64_t get_u64(std::istream& is, const std::string& source) {
  std::array<unsigned char, 8> bytes{};
  const auto offset = static_cast<long long>(is.tellg());
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw DataError(source + ": truncated RTEN header at byte " + std::to_string(offset));
  }
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return v;
}

template <typename Scalar>
void put_buffer(std::ostream& os, std::span<const Scalar> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (Scalar v : values) {
      std::array<char, sizeof(Scalar)> bytes{};
      std::memcpy(bytes.data(), &v, sizeof(Scalar));
      std::reverse(bytes.begin(), bytes.end());
      os.write(bytes.data(), bytes.size());
    }
  }
}

template <typename Scalar>
std::vector<Scalar> get_buffer(std::istream& is, int64_t count, const std::string& source) {
  std::vector<Scalar> values(count);
  const auto offset = static_cast<long long>(is.tellg());
  if (!is.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(Scalar)))) {
    throw DataError(source + ": truncated RTEN payload starting at byte " + std::to_string(offset));
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : values) {
      std::array<char, sizeof(Scalar)> bytes{};
      std::memcpy(bytes.data(), &v, sizeof(Scalar));
      std::reverse(bytes.begin(), bytes.end());
      std::memcpy(&v, bytes.data(), sizeof(Scalar));
    }
  }
  return values;
}

void put_header(std::ostream& os, RtenDType dtype, const Shape& shape) {
  os.write(kMagic.data(), kMagic.size());
  os.put(static_cast<char>(kRtenVersion));
  os.put(static_cast<char>(dtype));
  put_u64(os, static_cast<uint64_t>(shape.n));
  put_u64(os, static_cast<uint64_t>(shape.c));
  put_u64(os, static_cast<uint64_t>(shape.h));
  put_u64(os, static_cast<uint64_t>(shape.w));
}

template <typename Scalar>
constexpr RtenDType dtype_of() {
  if constexpr (std::is_same_v<Scalar, float>) return RtenDType::f32;
  if constexpr (std::is_same_v<Scalar, double>) return RtenDType::f64;
  return RtenDType::i32;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path.string() + ": cannot open for reading");
  return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError(path.string() + ": cannot open for writing");
  return os;
}

}  // namespace

template <typename T>
void write_rten(std::ostream& os, const Tensor<T>& t) {
  put_header(os, dtype_of<T>(), t.shape());
  put_buffer<T>(os, t.data());
}

void write_rten(std::ostream& os, const LabelMap& labels) {
  put_header(os, RtenDType::i32, labels.shape());
  put_buffer<int32_t>(os, labels.data);
}

RtenHeader read_rten_header(std::istream& is, const std::string& source) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError(source + ": bad RTEN magic at byte 0");
  }
  const int version = is.get();
  if (version != kRtenVersion) {
    throw DataError(source + ": unsupported RTEN version " + std::to_string(version) + " at byte 4");
  }
  const int code = is.get();
  if (code < 1 || code > 3) {
    throw DataError(source + ": unknown RTEN dtype code " + std::to_string(code) + " at byte 5");
  }
  RtenHeader header;
  header.dtype = static_cast<RtenDType>(code);
  header.shape.n = static_cast<int64_t>(get_u64(is, source));
  header.shape.c = static_cast<int64_t>(get_u64(is, source));
  header.shape.h = static_cast<int64_t>(get_u64(is, source));
  header.shape.w = static_cast<int64_t>(get_u64(is, source));
  if (!header.shape.valid()) {
    throw DataError(source + ": invalid RTEN dims " + header.shape.str());
  }
  return header;
}

template <typename T>
Tensor<T> read_rten(std::istream& is, const std::string& source) {
  const RtenHeader header = read_rten_header(is, source);
  const int64_t count = header.shape.numel();
  switch (header.dtype) {
    case RtenDType::f32: {
      auto raw = get_buffer<float>(is, count, source);
      if constexpr (std::is_same_v<T, float>) return Tensor<T>(header.shape, std::move(raw));
      return Tensor<T>(header.shape, std::vector<T>(raw.begin(), raw.end()));
    }
    case RtenDType::f64: {
      auto raw = get_buffer<double>(is, count, source);
      if constexpr (std::is_same_v<T, double>) return Tensor<T>(header.shape, std::move(raw));
      return Tensor<T>(header.shape, std::vector<T>(raw.begin(), raw.end()));
    }
    case RtenDType::i32: {
      auto raw = get_buffer<int32_t>(is, count, source);
      return Tensor<T>(header.shape, std::vector<T>(raw.begin(), raw.end()));
    }
  }
  throw DataError(source + ": unreachable dtype");
}

LabelMap read_rten_labels(std::istream& is, const std::string& source) {
  const RtenHeader header = read_rten_header(is, source);
  if (header.shape.c != 1) {
    throw DataError(source + ": label map must have one channel, got " + header.shape.str());
  }
  LabelMap labels;
  labels.n = header.shape.n;
  labels.h = header.shape.h;
  labels.w = header.shape.w;
  const int64_t count = header.shape.numel();
  auto from_float = [&](const auto& raw) {
    labels.data.resize(count);
    for (int64_t i = 0; i < count; ++i) {
      const double v = static_cast<double>(raw[i]);
      if (v != std::floor(v) || v < 0 || v > 2147483647.0) {
        throw DataError(source + ": non-integral label value " + std::to_string(v) + " at element " +
                        std::to_string(i));
      }
      labels.data[i] = static_cast<int32_t>(v);
    }
  };
  switch (header.dtype) {
    case RtenDType::i32:
      labels.data = get_buffer<int32_t>(is, count, source);
      break;
    case RtenDType::f32:
      from_float(get_buffer<float>(is, count, source));
      break;
    case RtenDType::f64:
      from_float(get_buffer<double>(is, count, source));
      break;
  }
  for (int64_t i = 0; i < count; ++i) {
    if (labels.data[i] < 0) {
      throw DataError(source + ": negative label at element " + std::to_string(i));
    }
  }
  return labels;
}

template <typename T>
void save_rten(const std::filesystem::path& path, const Tensor<T>& t) {
  auto os = open_out(path);
  write_rten(os, t);
  if (!os) throw DataError(path.string() + ": write failed");
}

void save_rten(const std::filesystem::path& path, const LabelMap& labels) {
  auto os = open_out(path);
  write_rten(os, labels);
  if (!os) throw DataError(path.string() + ": write failed");
}

template <typename T>
Tensor<T> load_rten(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_rten<T>(is, path.string());
}

LabelMap load_rten_labels(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_rten_labels(is, path.string());
}

template void write_rten(std::ostream&, const Tensor<float>&);
template void write_rten(std::ostream&, const Tensor<double>&);
template Tensor<float> read_rten(std::istream&, const std::string&);
template Tensor<double> read_rten(std::istream&, const std::string&);
template void save_rten(const std::filesystem::path&, const Tensor<float>&);
template void save_rten(const std::filesystem::path&, const Tensor<double>&);
template Tensor<float> load_rten(const std::filesystem::path&);
template Tensor<double> load_rten(const std::filesystem::path&);

}  // namespace rednet
