#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bildrl/tensor.hpp"

namespace bildrl {

// Tensors in a checkpoint are stored exactly as on disk: 32-bit floats. All
// in-memory training math is double; quantization to f32 happens once, when a
// checkpoint is assembled, so save -> load -> save is byte-identical.
struct F32Tensor {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> data;

  F32Tensor() = default;
  F32Tensor(std::uint32_t r, std::uint32_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}

  static F32Tensor from(const Tensor& t);
  Tensor to_double() const;
};

// Binary model file: magic "BDRL", little-endian, version, length-prefixed
// UTF-8 "key=value" config lines, then named tensor records
// (name_len u32, name, rows u32, cols u32, rows*cols f32).
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  std::vector<std::pair<std::string, std::string>> config;  // ordered lines
  std::map<std::string, F32Tensor> tensors;

  const std::string* find(const std::string& key) const;
  const std::string& require(const std::string& key) const;  // IntegrityError if absent
  void set(const std::string& key, const std::string& value);
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Validates magic, version, record framing, and tensor-shape consistency
// against the embedded config. IoError for framing problems, IntegrityError
// for semantic inconsistencies.
Checkpoint load_checkpoint(const std::string& path);

// The shape/config consistency check, also run by load_checkpoint.
void validate_checkpoint(const Checkpoint& ckpt);

}  // namespace bildrl
