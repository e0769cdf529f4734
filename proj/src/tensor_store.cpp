#include "gq/tensor_store.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "gq/error.hpp"

namespace gq {

namespace {

constexpr std::string_view kMagic = "GQCK";
constexpr std::string_view kMetaMagic = "GQMD";
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::size_t kMaxRank = 255;

std::uint64_t checked_count(const std::vector<std::uint64_t>& shape, ErrorCode code) {
  std::uint64_t n = 1;
  for (auto d : shape) {
    if (d == 0) throw Error(code, "tensor dimensions must be positive");
    if (n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
      throw Error(code, "tensor size overflows");
    }
    n *= d;
  }
  return n;
}

struct DirectoryEntry {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::uint64_t offset = 0;
  std::uint64_t byte_len = 0;
};

std::vector<DirectoryEntry> read_directory(detail::ByteReader& in) {
  if (in.remaining() < kMagic.size() || in.get_string(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::FormatError, "not a GQCK checkpoint (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::FormatError,
                "unsupported GQCK version " + std::to_string(version));
  }
  const auto count = in.get<std::uint64_t>();
  // Smallest possible entry is 4 + 1 + 1 + 1 + 8 + 8 bytes.
  if (count > in.remaining() / 23) {
    throw Error(ErrorCode::CorruptFile, "tensor count exceeds file size");
  }
  std::vector<DirectoryEntry> dir;
  dir.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    DirectoryEntry e;
    const auto name_len = in.get<std::uint32_t>();
    e.name = in.get_string(name_len);
    const auto dtype = in.get<std::uint8_t>();
    if (dtype != kDtypeF32) {
      throw Error(ErrorCode::FormatError, "unsupported dtype in tensor '" + e.name + "'");
    }
    const auto rank = in.get<std::uint8_t>();
    e.shape.resize(rank);
    for (auto& d : e.shape) d = in.get<std::uint64_t>();
    e.offset = in.get<std::uint64_t>();
    e.byte_len = in.get<std::uint64_t>();
    if (e.name.empty()) throw Error(ErrorCode::CorruptFile, "empty tensor name");
    if (checked_count(e.shape, ErrorCode::CorruptFile) * 4 != e.byte_len) {
      throw Error(ErrorCode::CorruptFile,
                  "shape and byte length disagree for tensor '" + e.name + "'");
    }
    dir.push_back(std::move(e));
  }
  return dir;
}

}  // namespace

std::uint64_t Tensor::element_count(const std::vector<std::uint64_t>& shape) {
  return checked_count(shape, ErrorCode::ShapeError);
}

void Checkpoint::add(std::string name, Tensor tensor) {
  if (name.empty()) throw Error(ErrorCode::InvalidTensor, "tensor name must be non-empty");
  if (find(name) != nullptr) {
    throw Error(ErrorCode::InvalidTensor, "duplicate tensor name '" + name + "'");
  }
  if (tensor.shape.size() > kMaxRank) {
    throw Error(ErrorCode::ShapeError, "tensor rank exceeds 255");
  }
  if (Tensor::element_count(tensor.shape) != tensor.data.size()) {
    throw Error(ErrorCode::ShapeError,
                "shape does not match data length for tensor '" + name + "'");
  }
  tensors_.emplace_back(std::move(name), std::move(tensor));
}

const Tensor* Checkpoint::find(std::string_view name) const {
  auto it = std::find_if(tensors_.begin(), tensors_.end(),
                         [&](const Entry& e) { return e.first == name; });
  return it == tensors_.end() ? nullptr : &it->second;
}

Tensor* Checkpoint::find(std::string_view name) {
  return const_cast<Tensor*>(std::as_const(*this).find(name));
}

const Tensor& Checkpoint::at(std::string_view name) const {
  const Tensor* t = find(name);
  if (t == nullptr) {
    throw Error(ErrorCode::InvalidTensor, "no tensor named '" + std::string(name) + "'");
  }
  return *t;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out;
  detail::ByteWriter w(out);
  w.put_bytes(kMagic);
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint64_t>(ckpt.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors()) {
    w.put(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name);
    w.put(kDtypeF32);
    w.put(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) w.put(d);
    const std::uint64_t byte_len = t.data.size() * 4;
    w.put(offset);
    w.put(byte_len);
    offset += byte_len;
  }
  for (const auto& entry : ckpt.tensors()) {
    for (float v : entry.second.data) w.put_f32(v);
  }
  if (!ckpt.metadata.empty()) {
    w.put_bytes(kMetaMagic);
    w.put(static_cast<std::uint32_t>(ckpt.metadata.size()));
    for (const auto& [k, v] : ckpt.metadata) {
      w.put(static_cast<std::uint32_t>(k.size()));
      w.put_bytes(k);
      w.put(static_cast<std::uint32_t>(v.size()));
      w.put_bytes(v);
    }
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader in(bytes.data(), bytes.size(), ErrorCode::CorruptFile);
  const auto dir = read_directory(in);
  const std::size_t payload_start = in.pos();
  const std::size_t payload_size = bytes.size() - payload_start;

  Checkpoint ckpt;
  std::uint64_t payload_end = 0;
  for (const auto& e : dir) {
    if (e.offset > payload_size || e.byte_len > payload_size - e.offset) {
      throw Error(ErrorCode::CorruptFile, "payload of tensor '" + e.name + "' is truncated");
    }
    detail::ByteReader p(bytes.data() + payload_start + e.offset, e.byte_len,
                         ErrorCode::CorruptFile);
    Tensor t;
    t.shape = e.shape;
    t.data.resize(e.byte_len / 4);
    for (auto& v : t.data) v = p.get_f32();
    ckpt.add(e.name, std::move(t));
    payload_end = std::max(payload_end, e.offset + e.byte_len);
  }

  detail::ByteReader tail(bytes.data() + payload_start + payload_end,
                          payload_size - payload_end, ErrorCode::CorruptFile);
  if (tail.remaining() > 0) {
    if (tail.remaining() < kMetaMagic.size() ||
        tail.get_string(kMetaMagic.size()) != kMetaMagic) {
      throw Error(ErrorCode::CorruptFile, "trailing bytes after payload");
    }
    const auto n = tail.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      auto key = tail.get_string(tail.get<std::uint32_t>());
      auto value = tail.get_string(tail.get<std::uint32_t>());
      ckpt.metadata.emplace(std::move(key), std::move(value));
    }
    if (tail.remaining() != 0) {
      throw Error(ErrorCode::CorruptFile, "trailing bytes after metadata");
    }
  }
  return ckpt;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "failed reading '" + path.string() + "'");
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_bytes(path, serialize_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

std::vector<TensorInfo> list_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  // The directory is read incrementally; payloads are never loaded.
  std::vector<std::uint8_t> head;
  std::vector<DirectoryEntry> dir;
  std::size_t chunk = 4096;
  for (;;) {
    const auto old = head.size();
    head.resize(old + chunk);
    in.read(reinterpret_cast<char*>(head.data() + old), static_cast<std::streamsize>(chunk));
    head.resize(old + static_cast<std::size_t>(in.gcount()));
    const bool eof = in.gcount() < static_cast<std::streamsize>(chunk);
    try {
      detail::ByteReader r(head.data(), head.size(), ErrorCode::CorruptFile);
      dir = read_directory(r);
      break;
    } catch (const Error& e) {
      if (eof || e.code() != ErrorCode::CorruptFile) throw;
    }
    chunk *= 2;
  }
  std::vector<TensorInfo> out;
  for (auto& e : dir) out.push_back({std::move(e.name), std::move(e.shape)});
  return out;
}

}  // namespace gq
