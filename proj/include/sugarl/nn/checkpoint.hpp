#pragma once

#include "sugarl/nn/net.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sugarl::nn {

// Layout (all integers and floats little-endian):
//   8 bytes  magic "SUGARLCK"
//   u32      format version
//   u64      architecture hash
//   u32      array count
//   per array: u64 element count, then that many f32 values
// Arrays appear in parameter declaration order.
inline constexpr char kCheckpointMagic[8] = {'S', 'U', 'G', 'A', 'R', 'L', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw std::runtime_error("checkpoint: truncated file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}

}  // namespace detail

/// Hash identifying a network architecture; checkpoints only load into
/// networks with the same hash.
inline std::uint64_t architecture_hash(const std::string& description) { return fnv1a(description); }

inline std::string encode_checkpoint(std::uint64_t arch_hash, const std::vector<ParamRef<float>>& params) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint64_t>(out, arch_hash);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    detail::put_le<std::uint64_t>(out, p.value.size());
    for (float f : p.value) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

inline std::uint64_t checkpoint_arch_hash(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  std::size_t pos = 8;
  const auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  return detail::get_le<std::uint64_t>(bytes, pos);
}

inline void decode_checkpoint(const std::string& bytes, std::uint64_t expected_hash,
                              const std::vector<ParamRef<float>>& params) {
  const std::uint64_t hash = checkpoint_arch_hash(bytes);
  if (hash != expected_hash)
    throw std::runtime_error("checkpoint: architecture hash mismatch (file " + std::to_string(hash) + ", expected " +
                             std::to_string(expected_hash) + ")");
  std::size_t pos = 20;
  const auto count = detail::get_le<std::uint32_t>(bytes, pos);
  if (count != params.size()) throw std::runtime_error("checkpoint: array count mismatch");
  for (const auto& p : params) {
    const auto n = detail::get_le<std::uint64_t>(bytes, pos);
    if (n != p.value.size()) throw std::runtime_error("checkpoint: array size mismatch at " + p.name);
    for (auto& f : p.value) f = std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, pos));
  }
  if (pos != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Writes via a temporary file and rename so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void save_checkpoint(const std::filesystem::path& path, HeadedNet<float>& net) {
  write_file_atomic(path, encode_checkpoint(architecture_hash(net.describe()), net.params()));
}

inline void load_checkpoint(const std::filesystem::path& path, HeadedNet<float>& net) {
  decode_checkpoint(read_file_bytes(path), architecture_hash(net.describe()), net.params());
}

}  // namespace sugarl::nn
