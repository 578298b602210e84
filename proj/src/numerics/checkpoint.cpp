// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/numerics/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace untrack::num {

namespace {

constexpr std::array<char, 8> kMagic = {'U', 'N', 'T', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void string(const std::string& s) {
    uint<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void finish() {
    out_.flush();
    if (!out_) throw CheckpointError("write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw CheckpointError("cannot open '" + path.string() + "'");
  }
  template <typename T>
  T uint() {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      const int c = in_.get();
      if (c == EOF) throw CheckpointError("truncated checkpoint");
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return static_cast<T>(v);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw CheckpointError("truncated checkpoint");
  }
  std::string string() {
    const auto n = uint<std::uint32_t>();
    if (n > (1u << 24)) throw CheckpointError("implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  std::ifstream in_;
};

template <typename T>
T from_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(u);
}

template <typename T>
void to_le(T value, unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U u = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path, DType dtype) {
  Writer w(path);
  w.bytes(kMagic.data(), kMagic.size());
  w.uint<std::uint32_t>(kVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.string(k);
    w.string(v);
  }
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.size()));
  const std::size_t width = dtype == DType::f32 ? 4 : 8;
  for (const auto& [name, entry] : ckpt.params.entries()) {
    w.string(name);
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(dtype));
    w.uint<std::uint8_t>(entry.trainable ? 1 : 0);
    w.uint<std::uint16_t>(0);
    const Shape& shape = entry.value.shape();
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) w.uint<std::uint64_t>(d);
    std::vector<unsigned char> buf(entry.value.size() * width);
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      if (dtype == DType::f32) to_le<float>(static_cast<float>(entry.value[i]), buf.data() + i * 4);
      else to_le<double>(entry.value[i], buf.data() + i * 8);
    }
    w.bytes(buf.data(), buf.size());
  }
  w.finish();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw CheckpointError("'" + path.string() + "' is not a checkpoint (bad magic)");
  const auto version = r.uint<std::uint32_t>();
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const auto nmeta = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    std::string k = r.string();
    ckpt.metadata[k] = r.string();
  }
  const auto count = r.uint<std::uint32_t>();
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::string name = r.string();
    const auto dtype = r.uint<std::uint8_t>();
    if (dtype > 1) throw CheckpointError("unknown dtype code for '" + name + "'");
    const bool trainable = r.uint<std::uint8_t>() != 0;
    r.uint<std::uint16_t>();
    const auto ndim = r.uint<std::uint32_t>();
    if (ndim > 8) throw CheckpointError("implausible rank for '" + name + "'");
    Shape shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(r.uint<std::uint64_t>());
    const std::size_t n = element_count(shape);
    const std::size_t width = dtype == 0 ? 4 : 8;
    std::vector<unsigned char> buf(n * width);
    r.bytes(buf.data(), buf.size());
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
      data[i] = dtype == 0 ? static_cast<double>(from_le<float>(buf.data() + i * 4)) : from_le<double>(buf.data() + i * 8);
    }
    ckpt.params.add(name, Array(std::move(shape), std::move(data)), trainable);
  }
  return ckpt;
}

}  // namespace untrack::num
