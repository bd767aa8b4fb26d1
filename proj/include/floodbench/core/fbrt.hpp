#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "floodbench/core/errors.hpp"
#include "floodbench/core/raster.hpp"

// Flat binary raster for non-image fields:
//   bytes 0..3   magic "FBRT"
//   bytes 4..15  C, H, W as little-endian uint32
//   then C*H*W little-endian IEEE-754 doubles, channel-major.
namespace floodbench::fbrt {

inline constexpr char kMagic[4] = {'F', 'B', 'R', 'T'};
inline constexpr std::size_t kHeaderSize = 16;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const ChannelField& f) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(kHeaderSize + 8 * f.size());
  detail::put_u32(out, static_cast<std::uint32_t>(f.channels()));
  detail::put_u32(out, static_cast<std::uint32_t>(f.height()));
  detail::put_u32(out, static_cast<std::uint32_t>(f.width()));
  for (double v : f.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

inline ChannelField decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DecodeError("fbrt: missing FBRT header");
  }
  const std::size_t c = detail::get_u32(bytes, 4);
  const std::size_t h = detail::get_u32(bytes, 8);
  const std::size_t w = detail::get_u32(bytes, 12);
  const std::size_t n = c * h * w;
  if (bytes.size() != kHeaderSize + 8 * n) {
    throw DecodeError("fbrt: payload size " + std::to_string(bytes.size() - kHeaderSize) +
                      " does not match " + std::to_string(c) + "x" + std::to_string(h) + "x" +
                      std::to_string(w));
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) {
      bits |= static_cast<std::uint64_t>(bytes[kHeaderSize + 8 * i + k]) << (8 * k);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  return ChannelField(c, {h, w}, std::move(values));
}

inline ChannelField read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in), {});
  return decode(bytes);
}

inline void write(const std::filesystem::path& path, const ChannelField& f) {
  const auto bytes = encode(f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace floodbench::fbrt
