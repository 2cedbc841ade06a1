#include "rednet/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rednet/error.hpp"
#include "rednet/rten.hpp"

namespace rednet {
namespace {

constexpr char kMagic[4] = {'R', 'N', 'C', 'K'};

template <typename U>
void put_le(std::string& out, U v) {
  for (size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
}

uint32_t crc32_of(const char* data, size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

class Reader {
 public:
  Reader(const std::string& bytes, size_t end, std::string source) : b_(bytes), end_(end), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }
  template <typename U>
  U le() {
    need(sizeof(U));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(b_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  std::string bytes(uint64_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void need(uint64_t n) const {
    if (n > end_ - pos_) fail("truncated checkpoint");
  }
  size_t pos() const { return pos_; }

 private:
  const std::string& b_;
  size_t end_;
  std::string source_;
  size_t pos_ = 0;
};

}  // namespace

template <typename T>
void Checkpoint::put(const std::string& name, const Tensor<T>& t) {
  std::ostringstream os(std::ios::binary);
  write_rten(os, t);
  for (auto& e : tensors_) {
    if (e.first == name) {
      e.second = os.str();
      return;
    }
  }
  tensors_.emplace_back(name, os.str());
}

template <typename T>
Tensor<T> Checkpoint::get(const std::string& name) const {
  for (const auto& e : tensors_) {
    if (e.first == name) {
      std::istringstream is(e.second, std::ios::binary);
      return read_rten<T>(is, "checkpoint tensor " + name);
    }
  }
  throw DataError("checkpoint has no tensor " + name);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& e : tensors_) {
    if (e.first == name) return true;
  }
  return false;
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  for (const auto& e : tensors_) out.push_back(e.first);
  return out;
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError("checkpoint metadata lacks key " + key);
  return it->second;
}

std::string Checkpoint::serialize() const {
  std::string meta_text;
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw DataError("checkpoint metadata entry " + k + " contains a reserved character");
    }
    meta_text += k + "=" + v + "\n";
  }
  std::string out(kMagic, 4);
  put_le<uint32_t>(out, kCheckpointVersion);
  put_le<uint64_t>(out, meta_text.size());
  out += meta_text;
  put_le<uint64_t>(out, tensors_.size());
  for (const auto& [name, blob] : tensors_) {
    put_le<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_le<uint64_t>(out, blob.size());
    out += blob;
  }
  put_le<uint32_t>(out, crc32_of(out.data(), out.size()));
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes, const std::string& source) {
  if (bytes.size() < 4 + 4 + 8 + 8 + 4) throw DataError(source + ": file too short for a checkpoint");
  const size_t body = bytes.size() - 4;
  {
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[body + i])) << (8 * i);
    if (stored != crc32_of(bytes.data(), body)) {
      throw DataError(source + ": checksum mismatch (corrupt checkpoint)");
    }
  }
  Reader r(bytes, body, source);
  if (std::memcmp(r.bytes(4).data(), kMagic, 4) != 0) r.fail("bad magic (not an RNCK checkpoint)");
  const auto version = r.le<uint32_t>();
  if (version != kCheckpointVersion) {
    r.fail("unsupported checkpoint version " + std::to_string(version) + " (expected " +
           std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  std::istringstream meta(r.bytes(r.le<uint64_t>()));
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) r.fail("malformed metadata line '" + line + "'");
    ck.meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto count = r.le<uint64_t>();
  for (uint64_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.le<uint32_t>());
    std::string blob = r.bytes(r.le<uint64_t>());
    ck.tensors_.emplace_back(std::move(name), std::move(blob));
  }
  if (r.pos() != body) r.fail("trailing bytes after tensor table");
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const std::string bytes = serialize();
  // Write then rename so an interrupted save never leaves a torn file behind.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize(bytes, path.string());
}

template <typename T>
void store_model(Checkpoint& ck, RedNet<T>& net) {
  auto set = net.parameters();
  for (const auto& p : set.params) ck.put("param/" + p.name, *p.value);
  for (const auto& b : set.buffers) ck.put("buffer/" + b.name, *b.value);
}

template <typename T>
void restore_model(const Checkpoint& ck, RedNet<T>& net) {
  auto set = net.parameters();
  auto load = [&](const std::string& key, Tensor<T>& into) {
    Tensor<T> t = ck.get<T>(key);
    if (!(t.shape() == into.shape())) {
      throw DataError("checkpoint tensor " + key + " has shape " + t.shape().str() + ", model expects " +
                      into.shape().str());
    }
    into = std::move(t);
  };
  for (auto& p : set.params) load("param/" + p.name, *p.value);
  for (auto& b : set.buffers) load("buffer/" + b.name, *b.value);
}

template <typename T>
void store_optimizer(Checkpoint& ck, const OptimizerState<T>& state) {
  ck.meta["optimizer.steps"] = std::to_string(state.steps);
  ck.meta["optimizer.tensors"] = std::to_string(state.velocity.size());
  for (size_t i = 0; i < state.velocity.size(); ++i) ck.put("velocity/" + state.names[i], state.velocity[i]);
}

template <typename T>
void restore_optimizer(const Checkpoint& ck, OptimizerState<T>& state) {
  state = {};
  state.steps = std::stoll(ck.meta_at("optimizer.steps"));
  const size_t n = std::stoull(ck.meta_at("optimizer.tensors"));
  for (const auto& name : ck.names()) {
    if (name.rfind("velocity/", 0) != 0) continue;
    state.names.push_back(name.substr(9));
    state.velocity.push_back(ck.get<T>(name));
  }
  if (state.velocity.size() != n) throw DataError("checkpoint velocity count does not match its metadata");
}

template void Checkpoint::put(const std::string&, const Tensor<float>&);
template void Checkpoint::put(const std::string&, const Tensor<double>&);
template Tensor<float> Checkpoint::get(const std::string&) const;
template Tensor<double> Checkpoint::get(const std::string&) const;
template void store_model(Checkpoint&, RedNet<float>&);
template void store_model(Checkpoint&, RedNet<double>&);
template void restore_model(const Checkpoint&, RedNet<float>&);
template void restore_model(const Checkpoint&, RedNet<double>&);
template void store_optimizer(Checkpoint&, const OptimizerState<float>&);
template void store_optimizer(Checkpoint&, const OptimizerState<double>&);
template void restore_optimizer(const Checkpoint&, OptimizerState<float>&);
template void restore_optimizer(const Checkpoint&, OptimizerState<double>&);

}  // namespace rednet
