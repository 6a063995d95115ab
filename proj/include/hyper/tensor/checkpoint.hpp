#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyper/tensor/tensor.hpp"

namespace hyper::tensor {

/// Precision-neutral copy of one named tensor.
struct StoredTensor {
  std::string name;
  Shape shape;
  std::uint8_t precision_bytes = 4;  ///< 4 (float) or 8 (double)
  std::vector<double> values;
};

/// Contents of a checkpoint file. Layout (all integers little-endian):
///
///   "HYPERCKP"                         8-byte magic
///   u32 version (= 1)
///   u32 config_bytes, then that many bytes of key=value text
///   u32 tensor_count
///   per tensor:
///     u32 name_bytes, name
///     u8  precision (4 or 8)
///     u32 rank, then rank x u64 dims
///     product(dims) raw IEEE-754 values of the stated precision
struct Checkpoint {
  std::string config_text;
  std::vector<StoredTensor> tensors;

  const StoredTensor& find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

template <typename T>
StoredTensor store(const std::string& name, const Tensor<T>& tensor);

}  // namespace hyper::tensor
