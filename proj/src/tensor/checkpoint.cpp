#include "hyper/tensor/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace hyper::tensor {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'P', 'E', 'R', 'C', 'K', 'P'};

template <typename U>
void put(std::ostream& os, U value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U get(std::istream& is, const std::string& path) {
  U value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (!is) throw CheckpointError("truncated checkpoint '" + path + "'");
  return value;
}

std::string get_string(std::istream& is, const std::string& path) {
  const auto n = get<std::uint32_t>(is, path);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw CheckpointError("truncated checkpoint '" + path + "'");
  return s;
}

}  // namespace

const StoredTensor& Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw CheckpointError("checkpoint has no tensor '" + name + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(checkpoint.config_text.size()));
  os.write(checkpoint.config_text.data(), static_cast<std::streamsize>(checkpoint.config_text.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& t : checkpoint.tensors) {
    if (shape_size(t.shape) != t.values.size()) throw CheckpointError("tensor '" + t.name + "' shape/value mismatch");
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint8_t>(os, t.precision_bytes);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::uint64_t>(os, d);
    for (double v : t.values) {
      if (t.precision_bytes == 4) put<float>(os, static_cast<float>(v));
      else put<double>(os, v);
    }
  }
  if (!os) throw IoError("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint '" + path + "' cannot be opened");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("'" + path + "' is not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint '" + path + "' has unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config_text = get_string(is, path);
  const auto count = get<std::uint32_t>(is, path);
  ck.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredTensor t;
    t.name = get_string(is, path);
    t.precision_bytes = get<std::uint8_t>(is, path);
    if (t.precision_bytes != 4 && t.precision_bytes != 8) {
      throw CheckpointError("tensor '" + t.name + "' has invalid precision");
    }
    const auto rank = get<std::uint32_t>(is, path);
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(get<std::uint64_t>(is, path));
    const auto n = shape_size(t.shape);
    t.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      t.values[j] = t.precision_bytes == 4 ? static_cast<double>(get<float>(is, path)) : get<double>(is, path);
    }
    ck.tensors.push_back(std::move(t));
  }
  return ck;
}

template <typename T>
StoredTensor store(const std::string& name, const Tensor<T>& tensor) {
  StoredTensor t;
  t.name = name;
  t.shape = tensor.shape();
  t.precision_bytes = sizeof(T);
  t.values.assign(tensor.values().begin(), tensor.values().end());
  return t;
}

template StoredTensor store<float>(const std::string&, const Tensor<float>&);
template StoredTensor store<double>(const std::string&, const Tensor<double>&);

}  // namespace hyper::tensor
