#pragma once

// Sub-byte index streams and the "GQPK" packed-model container.
//
//   magic "GQPK" | version u32 | count u64
//   per tensor: name_len u32 | name | rank u8 | dims u64 x rank |
//               b u8 | m u16 | codes i8 x m | scale f32 | stream_len u64
//   streams, concatenated in manifest order
//
// Streams hold codebook indices, b bits each, MSB-first, zero-padded to a
// byte boundary. All multi-byte fields are little-endian.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gq/quantizer.hpp"
#include "gq/tensor_store.hpp"

namespace gq {

inline constexpr std::uint32_t kPackedVersion = 1;

std::size_t packed_stream_bytes(std::size_t n, int bit_depth);

std::vector<std::uint8_t> pack_indices(std::span<const std::uint32_t> indices,
                                       int bit_depth);
std::vector<std::uint32_t> unpack_indices(std::span<const std::uint8_t> bytes,
                                          std::size_t n, int bit_depth);

struct PackedTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  int bit_depth = 0;
  std::vector<std::int8_t> grid_codes;
  float scale = 0.0f;
  std::vector<std::uint8_t> stream;

  std::uint64_t element_count() const { return Tensor::element_count(shape); }
  /// Codebook view of the stored alphabet; mu is not part of the container.
  CentroidCodebook codebook() const;
  bool operator==(const PackedTensor&) const = default;
};

struct PackedModel {
  std::vector<PackedTensor> tensors;
  bool operator==(const PackedModel&) const = default;
};

PackedTensor pack_tensor(std::string name, std::vector<std::uint64_t> shape,
                         std::span<const std::uint32_t> indices,
                         const CentroidCodebook& codebook);
/// Reconstructs scale * k / 128 for every element.
Tensor dequantize(const PackedTensor& packed);
Checkpoint dequantize(const PackedModel& model);

enum class ReadMode {
  /// Rejects non-zero pad bits and indices beyond the codebook.
  strict,
  lenient,
};

std::vector<std::uint8_t> serialize_packed_model(const PackedModel& model);
PackedModel deserialize_packed_model(const std::vector<std::uint8_t>& bytes,
                                     ReadMode mode = ReadMode::strict);
void write_packed_model(const std::filesystem::path& path, const PackedModel& model);
PackedModel read_packed_model(const std::filesystem::path& path,
                              ReadMode mode = ReadMode::strict);

// -- footprint accounting ----------------------------------------------------

struct KernelShape {
  std::string name;
  std::vector<std::uint64_t> dims;
  /// Free-form module label used for per-group totals.
  std::string group;
};

struct BitAllocation {
  int default_bits = 5;
  std::map<std::string, int> overrides;

  int bits_for(const std::string& name) const;
};

struct TensorFootprint {
  std::string name;
  std::string group;
  std::uint64_t params = 0;
  int bit_depth = 0;
  std::uint64_t bytes_f32 = 0;
  std::uint64_t bytes_int8 = 0;
  std::uint64_t bytes_packed = 0;
  /// m one-byte grid codes plus a float32 scale.
  std::uint64_t codebook_bytes = 0;
};

struct GroupFootprint {
  std::string group;
  std::uint64_t params = 0;
  std::uint64_t bytes_f32 = 0;
  std::uint64_t bytes_packed = 0;
};

struct FootprintReport {
  std::vector<TensorFootprint> tensors;
  std::vector<GroupFootprint> groups;
  std::uint64_t total_params = 0;
  std::uint64_t total_f32 = 0;
  std::uint64_t total_int8 = 0;
  std::uint64_t total_packed = 0;
  std::uint64_t codebook_overhead = 0;
  /// total_f32 / total_packed, overhead excluded.
  double reduction_ratio = 0.0;
  /// total_f32 / (total_packed + codebook_overhead).
  double reduction_ratio_with_overhead = 0.0;
};

FootprintReport footprint_report(const std::vector<KernelShape>& shapes,
                                 const BitAllocation& bits);

}  // namespace gq
