#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grn/params.hpp"

namespace grn {

// Checkpoint container:
//   magic "GRNP", version byte 0x01, u32-LE tensor count, then per tensor:
//   u16-LE name length, UTF-8 name, u8 rank, rank x u32-LE dims,
//   prod(dims) x f32-LE row-major values.
namespace ckpt_detail {

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

inline void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_le<std::uint32_t>(os, bits);
}

inline float read_f32(std::istream& is) {
  std::uint32_t bits = read_le<std::uint32_t>(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const ParamSet& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write("GRNP", 4);
  os.put(0x01);
  ckpt_detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.items()) {
    if (p->name.size() > 0xffff)
      throw std::runtime_error("checkpoint: tensor name too long: " + p->name);
    ckpt_detail::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    os.put(static_cast<char>(p->rank()));
    for (int d : p->shape) ckpt_detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (real v : p->data) ckpt_detail::write_f32(os, static_cast<float>(v));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

// Loads values into an existing ParamSet; names and shapes must match the
// tensors already registered there. Unknown names in the file are rejected.
inline void load_checkpoint(ParamSet& params, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GRNP", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  int version = is.get();
  if (version != 0x01)
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  std::uint32_t count = ckpt_detail::read_le<std::uint32_t>(is);
  for (std::uint32_t k = 0; k < count; ++k) {
    std::uint16_t name_len = ckpt_detail::read_le<std::uint16_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    int rank = is.get();
    if (rank < 0) throw std::runtime_error("checkpoint: truncated file");
    std::vector<int> shape(rank);
    std::int64_t n = 1;
    for (int i = 0; i < rank; ++i) {
      shape[i] = static_cast<int>(ckpt_detail::read_le<std::uint32_t>(is));
      n *= shape[i];
    }
    if (!params.contains(name))
      throw std::runtime_error("checkpoint: unexpected tensor " + name);
    Value p = params.get(name);
    if (p->shape != shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name +
                               ": file " + shape_str(shape) + " vs model " +
                               shape_str(p->shape));
    for (std::int64_t i = 0; i < n; ++i)
      p->data[static_cast<std::size_t>(i)] = static_cast<real>(ckpt_detail::read_f32(is));
  }
}

}  // namespace grn
