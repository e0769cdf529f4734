#include "gq/packer.hpp"

#include <algorithm>

#include "binary_io.hpp"
#include "gq/error.hpp"

namespace gq {

namespace {

constexpr std::string_view kMagic = "GQPK";

void check_bits(int bit_depth) {
  if (bit_depth < kMinBitDepth || bit_depth > kMaxBitDepth) {
    throw Error(ErrorCode::InvalidBitDepth,
                "bit depth must be in [1, 8], got " + std::to_string(bit_depth));
  }
}

bool padding_is_zero(std::span<const std::uint8_t> stream, std::size_t n, int b) {
  const std::size_t used_bits = n * static_cast<std::size_t>(b);
  const std::size_t pad = stream.size() * 8 - used_bits;
  if (pad == 0) return true;
  const auto mask = static_cast<std::uint8_t>((1u << pad) - 1u);
  return (stream.back() & mask) == 0;
}

}  // namespace

std::size_t packed_stream_bytes(std::size_t n, int bit_depth) {
  return (n * static_cast<std::size_t>(bit_depth) + 7) / 8;
}

std::vector<std::uint8_t> pack_indices(std::span<const std::uint32_t> indices,
                                       int bit_depth) {
  check_bits(bit_depth);
  const std::uint32_t limit = 1u << bit_depth;
  std::vector<std::uint8_t> out;
  out.reserve(packed_stream_bytes(indices.size(), bit_depth));
  std::uint32_t acc = 0;
  int acc_bits = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= limit) {
      throw Error(ErrorCode::IndexOverflow,
                  "index " + std::to_string(indices[i]) + " at position " +
                      std::to_string(i) + " does not fit in " +
                      std::to_string(bit_depth) + " bits");
    }
    acc = (acc << bit_depth) | indices[i];
    acc_bits += bit_depth;
    while (acc_bits >= 8) {
      acc_bits -= 8;
      out.push_back(static_cast<std::uint8_t>(acc >> acc_bits));
      acc &= (1u << acc_bits) - 1u;
    }
  }
  if (acc_bits > 0) out.push_back(static_cast<std::uint8_t>(acc << (8 - acc_bits)));
  return out;
}

std::vector<std::uint32_t> unpack_indices(std::span<const std::uint8_t> bytes,
                                          std::size_t n, int bit_depth) {
  check_bits(bit_depth);
  if (bytes.size() != packed_stream_bytes(n, bit_depth)) {
    throw Error(ErrorCode::CorruptStream,
                "stream holds " + std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(packed_stream_bytes(n, bit_depth)));
  }
  std::vector<std::uint32_t> out(n);
  const std::uint32_t mask = (1u << bit_depth) - 1u;
  std::uint32_t acc = 0;
  int acc_bits = 0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (acc_bits < bit_depth) {
      acc = (acc << 8) | bytes[next++];
      acc_bits += 8;
    }
    acc_bits -= bit_depth;
    out[i] = (acc >> acc_bits) & mask;
    acc &= (1u << acc_bits) - 1u;
  }
  return out;
}

CentroidCodebook PackedTensor::codebook() const {
  CentroidCodebook cb;
  cb.bit_depth = bit_depth;
  cb.grid_codes = grid_codes;
  cb.scale = scale;
  std::vector<std::int8_t> sorted = grid_codes;
  std::sort(sorted.begin(), sorted.end());
  cb.effective_distinct =
      static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  return cb;
}

PackedTensor pack_tensor(std::string name, std::vector<std::uint64_t> shape,
                         std::span<const std::uint32_t> indices,
                         const CentroidCodebook& codebook) {
  if (Tensor::element_count(shape) != indices.size()) {
    throw Error(ErrorCode::ShapeError, "index count does not match shape of '" + name + "'");
  }
  if (codebook.grid_codes.size() > (std::size_t{1} << codebook.bit_depth)) {
    throw Error(ErrorCode::InvalidBitDepth, "codebook larger than 2^bit_depth");
  }
  for (auto idx : indices) {
    if (idx >= codebook.grid_codes.size()) {
      throw Error(ErrorCode::IndexOverflow, "index beyond codebook in '" + name + "'");
    }
  }
  PackedTensor p;
  p.stream = pack_indices(indices, codebook.bit_depth);
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.bit_depth = codebook.bit_depth;
  p.grid_codes = codebook.grid_codes;
  p.scale = codebook.scale;
  return p;
}

Tensor dequantize(const PackedTensor& packed) {
  const auto n = static_cast<std::size_t>(packed.element_count());
  const auto indices = unpack_indices(packed.stream, n, packed.bit_depth);
  Tensor t;
  t.shape = packed.shape;
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (indices[i] >= packed.grid_codes.size()) {
      throw Error(ErrorCode::CorruptStream, "index beyond codebook in '" + packed.name + "'");
    }
    t.data[i] = dequantize_code(packed.scale, packed.grid_codes[indices[i]]);
  }
  return t;
}

Checkpoint dequantize(const PackedModel& model) {
  std::vector<Tensor> tensors(model.tensors.size());
  const auto count = static_cast<std::ptrdiff_t>(model.tensors.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    tensors[static_cast<std::size_t>(i)] = dequantize(model.tensors[static_cast<std::size_t>(i)]);
  }
  Checkpoint ckpt;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    ckpt.add(model.tensors[i].name, std::move(tensors[i]));
  }
  return ckpt;
}

std::vector<std::uint8_t> serialize_packed_model(const PackedModel& model) {
  std::vector<std::uint8_t> out;
  detail::ByteWriter w(out);
  w.put_bytes(kMagic);
  w.put(kPackedVersion);
  w.put(static_cast<std::uint64_t>(model.tensors.size()));
  for (const auto& t : model.tensors) {
    check_bits(t.bit_depth);
    if (t.shape.size() > 255 || t.grid_codes.size() > 256) {
      throw Error(ErrorCode::ShapeError, "tensor '" + t.name + "' cannot be encoded");
    }
    w.put(static_cast<std::uint32_t>(t.name.size()));
    w.put_bytes(t.name);
    w.put(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) w.put(d);
    w.put(static_cast<std::uint8_t>(t.bit_depth));
    w.put(static_cast<std::uint16_t>(t.grid_codes.size()));
    for (auto k : t.grid_codes) w.put(k);
    w.put_f32(t.scale);
    w.put(static_cast<std::uint64_t>(t.stream.size()));
  }
  for (const auto& t : model.tensors) w.put_bytes(t.stream.data(), t.stream.size());
  return out;
}

PackedModel deserialize_packed_model(const std::vector<std::uint8_t>& bytes,
                                     ReadMode mode) {
  detail::ByteReader in(bytes.data(), bytes.size(), ErrorCode::CorruptFile);
  if (in.remaining() < kMagic.size() || in.get_string(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::FormatError, "not a GQPK model (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kPackedVersion) {
    throw Error(ErrorCode::FormatError, "unsupported GQPK version " + std::to_string(version));
  }
  const auto count = in.get<std::uint64_t>();
  if (count > in.remaining()) throw Error(ErrorCode::CorruptFile, "tensor count exceeds file size");

  PackedModel model;
  std::vector<std::uint64_t> stream_lens;
  for (std::uint64_t i = 0; i < count; ++i) {
    PackedTensor t;
    t.name = in.get_string(in.get<std::uint32_t>());
    t.shape.resize(in.get<std::uint8_t>());
    for (auto& d : t.shape) d = in.get<std::uint64_t>();
    t.bit_depth = in.get<std::uint8_t>();
    const auto m = in.get<std::uint16_t>();
    t.grid_codes.resize(m);
    for (auto& k : t.grid_codes) k = in.get<std::int8_t>();
    t.scale = in.get_f32();
    stream_lens.push_back(in.get<std::uint64_t>());
    if (t.name.empty()) throw Error(ErrorCode::CorruptFile, "empty tensor name");
    if (t.bit_depth < kMinBitDepth || t.bit_depth > kMaxBitDepth) {
      throw Error(ErrorCode::FormatError, "bad bit depth in tensor '" + t.name + "'");
    }
    if (m == 0 || m > (1u << t.bit_depth)) {
      throw Error(ErrorCode::CorruptFile, "codebook size out of range in '" + t.name + "'");
    }
    const auto n = Tensor::element_count(t.shape);
    if (stream_lens.back() != packed_stream_bytes(n, t.bit_depth)) {
      throw Error(ErrorCode::CorruptStream, "stream length mismatch in '" + t.name + "'");
    }
    model.tensors.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < model.tensors.size(); ++i) {
    auto& t = model.tensors[i];
    const auto* p = in.take(stream_lens[i]);
    t.stream.assign(p, p + stream_lens[i]);
    if (mode == ReadMode::strict) {
      const auto n = static_cast<std::size_t>(t.element_count());
      if (!padding_is_zero(t.stream, n, t.bit_depth)) {
        throw Error(ErrorCode::CorruptStream, "non-zero pad bits in '" + t.name + "'");
      }
      if (t.grid_codes.size() < (1u << t.bit_depth)) {
        for (auto idx : unpack_indices(t.stream, n, t.bit_depth)) {
          if (idx >= t.grid_codes.size()) {
            throw Error(ErrorCode::CorruptStream, "index beyond codebook in '" + t.name + "'");
          }
        }
      }
    }
  }
  if (in.remaining() != 0) throw Error(ErrorCode::CorruptFile, "trailing bytes after streams");
  return model;
}

void write_packed_model(const std::filesystem::path& path, const PackedModel& model) {
  write_file_bytes(path, serialize_packed_model(model));
}

PackedModel read_packed_model(const std::filesystem::path& path, ReadMode mode) {
  return deserialize_packed_model(read_file_bytes(path), mode);
}

int BitAllocation::bits_for(const std::string& name) const {
  auto it = overrides.find(name);
  return it == overrides.end() ? default_bits : it->second;
}

FootprintReport footprint_report(const std::vector<KernelShape>& shapes,
                                 const BitAllocation& bits) {
  FootprintReport r;
  for (const auto& s : shapes) {
    TensorFootprint f;
    f.name = s.name;
    f.group = s.group;
    f.params = Tensor::element_count(s.dims);
    f.bit_depth = bits.bits_for(s.name);
    check_bits(f.bit_depth);
    f.bytes_f32 = f.params * 4;
    f.bytes_int8 = f.params;
    f.bytes_packed = packed_stream_bytes(f.params, f.bit_depth);
    f.codebook_bytes = (std::uint64_t{1} << f.bit_depth) + 4;

    r.total_params += f.params;
    r.total_f32 += f.bytes_f32;
    r.total_int8 += f.bytes_int8;
    r.total_packed += f.bytes_packed;
    r.codebook_overhead += f.codebook_bytes;

    auto g = std::find_if(r.groups.begin(), r.groups.end(),
                          [&](const GroupFootprint& x) { return x.group == s.group; });
    if (g == r.groups.end()) {
      r.groups.push_back({s.group, 0, 0, 0});
      g = std::prev(r.groups.end());
    }
    g->params += f.params;
    g->bytes_f32 += f.bytes_f32;
    g->bytes_packed += f.bytes_packed;
    r.tensors.push_back(std::move(f));
  }
  if (r.total_packed > 0) {
    r.reduction_ratio = static_cast<double>(r.total_f32) / static_cast<double>(r.total_packed);
    r.reduction_ratio_with_overhead =
        static_cast<double>(r.total_f32) /
        static_cast<double>(r.total_packed + r.codebook_overhead);
  }
  return r;
}

}  // namespace gq
