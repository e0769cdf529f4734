#pragma once

// "GQCK" checkpoint container: named row-major float32 tensors.
//
//   magic "GQCK" | version u32 | count u64
//   per tensor: name_len u32 | name | dtype u8 (0 = f32) | rank u8 |
//               dims u64 x rank | offset u64 | byte_len u64
//   payload (offsets relative to the start of the payload)
//   optional metadata block: "GQMD" | count u32 | {len u32, key, len u32, value}
//
// All integers and floats are little-endian.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gq {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  static std::uint64_t element_count(const std::vector<std::uint64_t>& shape);
  bool operator==(const Tensor&) const = default;
};

class Checkpoint {
 public:
  using Entry = std::pair<std::string, Tensor>;

  /// Appends a tensor; names must be unique and non-empty and the shape must
  /// match the data length.
  void add(std::string name, Tensor tensor);
  const Tensor* find(std::string_view name) const;
  Tensor* find(std::string_view name);
  const Tensor& at(std::string_view name) const;

  const std::vector<Entry>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  bool empty() const { return tensors_.empty(); }

  std::map<std::string, std::string> metadata;

  bool operator==(const Checkpoint&) const = default;

 private:
  std::vector<Entry> tensors_;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Directory listing without materializing payloads.
struct TensorInfo {
  std::string name;
  std::vector<std::uint64_t> shape;
};
std::vector<TensorInfo> list_checkpoint(const std::filesystem::path& path);

// Whole-file helpers shared by the container formats.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes);

}  // namespace gq
