#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uesr/tensor.hpp"

namespace uesr {

// Named-tensor container with string metadata.
//
// Binary layout (little-endian):
//   "UESRCKP1"
//   u32 metadata_count, then per entry: str key, str value
//   u32 tensor_count,   then per entry: str name, u32 ndim, u64 dims[ndim],
//                                       f64 values[prod(dims)]
// where str = u32 byte length followed by the bytes.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  void put(std::string name, Tensor t);
  // Throws std::out_of_range when absent.
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;

  // Stores values, Adam moments and the Adam step count under `prefix/`.
  void put_parameters(const std::string& prefix, const ParameterSet& params);
  // Restores a set saved by put_parameters; throws std::runtime_error when a
  // tensor is missing or its shape differs.
  void get_parameters(const std::string& prefix, ParameterSet& params) const;

  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws std::runtime_error on I/O failure or a malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace uesr
