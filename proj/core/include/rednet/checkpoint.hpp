#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rednet/model.hpp"
#include "rednet/optimizer.hpp"

namespace rednet {

// Checkpoint container (little endian):
//   "RNCK" | u32 version | u64 metadata bytes | metadata (key=value lines)
//   | u64 tensor count | per tensor: u32 name bytes, name, u64 blob bytes, RTEN blob
//   | u32 CRC32 of everything before it
inline constexpr uint32_t kCheckpointVersion = 1;

class Checkpoint {
 public:
  std::map<std::string, std::string> meta;

  template <typename T>
  void put(const std::string& name, const Tensor<T>& t);
  template <typename T>
  Tensor<T> get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<std::string> names() const;

  const std::string& meta_at(const std::string& key) const;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes, const std::string& source = "<memory>");
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> tensors_;  // name -> RTEN blob, insertion ordered
};

/// Stores parameters as "param/<name>" and running statistics as "buffer/<name>".
template <typename T>
void store_model(Checkpoint& ck, RedNet<T>& net);
/// Throws DataError when a tensor is missing or has the wrong shape.
template <typename T>
void restore_model(const Checkpoint& ck, RedNet<T>& net);

template <typename T>
void store_optimizer(Checkpoint& ck, const OptimizerState<T>& state);
template <typename T>
void restore_optimizer(const Checkpoint& ck, OptimizerState<T>& state);

}  // namespace rednet
