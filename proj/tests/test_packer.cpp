#include <cstring>
#include <functional>

#include <gtest/gtest.h>

#include "gq/error.hpp"
#include "gq/packer.hpp"
#include "test_util.hpp"

namespace gq {
namespace {

// Bit-by-bit reference packer: MSB-first, zero-padded.
std::vector<std::uint8_t> ref_pack(const std::vector<std::uint32_t>& idx, int b) {
  std::vector<std::uint8_t> out((idx.size() * b + 7) / 8, 0);
  std::size_t bit = 0;
  for (std::uint32_t v : idx) {
    for (int k = b - 1; k >= 0; --k, ++bit) {
      if ((v >> k) & 1u) out[bit / 8] |= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    }
  }
  return out;
}

std::vector<std::uint32_t> random_indices(Rng& rng, std::size_t n, int b) {
  std::vector<std::uint32_t> v(n);
  for (auto& x : v) x = static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << b));
  return v;
}

ErrorCode error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::UsageError;
}

TEST(PackIndices, HandLayouts) {
  const std::vector<std::uint32_t> bits{1, 0, 1, 1, 0, 1, 0, 0};
  EXPECT_EQ(pack_indices(bits, 1), (std::vector<std::uint8_t>{0xB4}));
  EXPECT_EQ(unpack_indices(std::vector<std::uint8_t>{0xB4}, 8, 1), bits);

  const std::vector<std::uint32_t> five{31, 0, 17};
  EXPECT_EQ(pack_indices(five, 5), (std::vector<std::uint8_t>{0xF8, 0x22}));
  EXPECT_EQ(unpack_indices(std::vector<std::uint8_t>{0xF8, 0x22}, 3, 5), five);
}

TEST(PackIndices, Empty) {
  for (int b = 1; b <= 8; ++b) {
    EXPECT_TRUE(pack_indices({}, b).empty());
    EXPECT_TRUE(unpack_indices({}, 0, b).empty());
  }
}

TEST(PackIndices, RandomRoundtripsMatchReference) {
  Rng rng(1);
  for (int trial = 0; trial < 400; ++trial) {
    const int b = 1 + trial % 8;
    const std::size_t n = 1 + rng.below(10000);
    const auto idx = random_indices(rng, n, b);
    const auto bytes = pack_indices(idx, b);
    ASSERT_EQ(bytes.size(), (n * b + 7) / 8);
    ASSERT_EQ(bytes.size(), packed_stream_bytes(n, b));
    ASSERT_EQ(bytes, ref_pack(idx, b));
    ASSERT_EQ(unpack_indices(bytes, n, b), idx);
  }
}

TEST(PackIndices, Errors) {
  const std::vector<std::uint32_t> big{4};
  EXPECT_EQ(error_of([&] { pack_indices(big, 2); }), ErrorCode::IndexOverflow);
  EXPECT_EQ(error_of([&] { pack_indices(big, 9); }), ErrorCode::InvalidBitDepth);
  EXPECT_EQ(error_of([] { unpack_indices(std::vector<std::uint8_t>{1}, 3, 5); }),
            ErrorCode::CorruptStream);
}

PackedModel random_model(Rng& rng, int tensors) {
  PackedModel m;
  for (int i = 0; i < tensors; ++i) {
    std::vector<float> t(1 + rng.below(3000));
    for (auto& v : t) v = static_cast<float>(rng.laplace(0.1));
    const int b = 1 + static_cast<int>(rng.below(8));
    const auto q = quantize_tensor(t, b, 400, MuPolicy::fixed(rng.uniform(1, 50)), true);
    m.tensors.push_back(pack_tensor("layer" + std::to_string(i), {t.size()}, q.indices, q.codebook));
  }
  return m;
}

TEST(PackedModel, Roundtrip) {
  Rng rng(2);
  test::TempDir dir;
  const auto m = random_model(rng, 12);
  write_packed_model(dir.file("m.gqpk"), m);
  EXPECT_EQ(read_packed_model(dir.file("m.gqpk")), m);
  EXPECT_EQ(serialize_packed_model(deserialize_packed_model(serialize_packed_model(m))),
            serialize_packed_model(m));
}

TEST(PackedModel, PipelineIdentity) {
  Rng rng(3);
  for (int b = 1; b <= 8; ++b) {
    const auto t = test::normal_tensor(rng, 2048, 0.3);
    const auto q = quantize_tensor(t, b, 400, MuPolicy::refit(), true);
    const auto packed = pack_tensor("w", {32, 64}, q.indices, q.codebook);
    const auto back = dequantize(deserialize_packed_model(serialize_packed_model({{packed}})));
    const auto& data = back.at("w").data;
    ASSERT_EQ(data.size(), q.values.size());
    EXPECT_EQ(std::memcmp(data.data(), q.values.data(), data.size() * sizeof(float)), 0) << b;
    EXPECT_EQ(back.at("w").shape, (std::vector<std::uint64_t>{32, 64}));
  }
}

TEST(PackedModel, DequantizeFormula) {
  CentroidCodebook cb;
  cb.bit_depth = 2;
  cb.grid_codes = {-128, -5, 5, 127};
  cb.scale = 0.37f;
  const std::vector<std::uint32_t> idx{0, 1, 2, 3};
  const auto t = dequantize(pack_tensor("w", {4}, idx, cb));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(t.data[j], static_cast<float>(0.37f * static_cast<double>(cb.grid_codes[j]) / 128.0));
  }
}

std::size_t first_stream_offset(const PackedModel& m) {
  return serialize_packed_model(m).size() - m.tensors.front().stream.size();
}

TEST(PackedModel, TamperedPadBit) {
  CentroidCodebook cb;
  cb.bit_depth = 5;
  cb.grid_codes.assign(32, 0);
  for (int j = 0; j < 32; ++j) cb.grid_codes[j] = static_cast<std::int8_t>(-128 + 8 * j);
  cb.scale = 1.0f;
  const std::vector<std::uint32_t> idx{31, 0, 17};
  const PackedModel m{{pack_tensor("w", {3}, idx, cb)}};
  auto bytes = serialize_packed_model(m);
  bytes[first_stream_offset(m) + 1] |= 0x01;
  EXPECT_EQ(error_of([&] { deserialize_packed_model(bytes); }), ErrorCode::CorruptStream);
  EXPECT_NO_THROW(deserialize_packed_model(bytes, ReadMode::lenient));
}

TEST(PackedModel, IndexBeyondCodebook) {
  CentroidCodebook cb;
  cb.bit_depth = 2;
  cb.grid_codes = {-128, 0, 64};  // three entries under a 2-bit stream
  cb.scale = 1.0f;
  const std::vector<std::uint32_t> idx{0, 1, 2, 2};
  const PackedModel m{{pack_tensor("w", {4}, idx, cb)}};
  auto bytes = serialize_packed_model(m);
  bytes[first_stream_offset(m)] |= 0x03;  // last index -> 3
  EXPECT_EQ(error_of([&] { deserialize_packed_model(bytes); }), ErrorCode::CorruptStream);
}

TEST(PackedModel, RejectsBadHeaderAndTruncation) {
  Rng rng(4);
  const auto bytes = serialize_packed_model(random_model(rng, 2));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(error_of([&] { deserialize_packed_model(bad); }), ErrorCode::FormatError);
  bad = bytes;
  bad[4] = 7;
  EXPECT_EQ(error_of([&] { deserialize_packed_model(bad); }), ErrorCode::FormatError);
  bad.assign(bytes.begin(), bytes.end() - 1);
  EXPECT_EQ(error_of([&] { deserialize_packed_model(bad); }), ErrorCode::CorruptFile);
}

TEST(Footprint, UniformRatioIsThirtyTwoOverB) {
  const std::vector<KernelShape> shapes{{"a", {256, 1024}, "g"}, {"b", {3, 3, 8, 16}, "g"}};
  for (int b = 1; b <= 8; ++b) {
    const auto r = footprint_report(shapes, BitAllocation{b, {}});
    EXPECT_DOUBLE_EQ(r.reduction_ratio, 32.0 / b);
    EXPECT_EQ(r.total_f32, 4 * r.total_params);
    EXPECT_EQ(r.total_int8, r.total_params);
    EXPECT_EQ(r.codebook_overhead, 2 * ((1u << b) + 4));
    EXPECT_LT(r.reduction_ratio_with_overhead, r.reduction_ratio);
  }
}

TEST(Footprint, PackedBytesRoundUp) {
  const std::vector<KernelShape> shapes{{"odd", {3}, "g"}};
  EXPECT_EQ(footprint_report(shapes, BitAllocation{5, {}}).total_packed, 2u);
  const auto r = footprint_report(shapes, BitAllocation{5, {{"odd", 1}}});
  EXPECT_EQ(r.total_packed, 1u);
  EXPECT_EQ(r.tensors[0].bit_depth, 1);
}

}  // namespace
}  // namespace gq
