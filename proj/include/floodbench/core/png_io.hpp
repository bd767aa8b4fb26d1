#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <png.h>

#include "floodbench/core/errors.hpp"
#include "floodbench/core/raster.hpp"

namespace floodbench {

// 8-bit raster as stored on disk: 1 (gray) or 3 (RGB) interleaved channels.
struct PngImage {
  Extent extent;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const PngImage&, const PngImage&) = default;
};

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

class PngReadGuard {
 public:
  explicit PngReadGuard(png_image& img) : img_(img) {}
  ~PngReadGuard() { png_image_free(&img_); }
  PngReadGuard(const PngReadGuard&) = delete;
  PngReadGuard& operator=(const PngReadGuard&) = delete;

 private:
  png_image& img_;
};

}  // namespace detail

// Decodes an 8-bit gray or RGB PNG without any colour conversion. Palette,
// alpha and 16-bit images are rejected: their samples would not survive
// unchanged.
inline PngImage decode_png(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>") {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw DecodeError(origin + ": " + img.message);
  }
  detail::PngReadGuard guard(img);
  const auto fmt = img.format;
  if (fmt & (PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR | PNG_FORMAT_FLAG_COLORMAP)) {
    throw DecodeError(origin + ": only 8-bit gray or RGB PNGs without palette or alpha are supported");
  }
  PngImage out;
  out.channels = (fmt & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  img.format = out.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  out.extent = {img.height, img.width};
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    throw DecodeError(origin + ": " + img.message);
  }
  return out;
}

inline PngImage read_png(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  return decode_png(bytes, path.string());
}

inline std::vector<std::uint8_t> encode_png(const PngImage& image) {
  if (image.channels != 1 && image.channels != 3) throw InvalidValue("png: channels must be 1 or 3");
  if (image.pixels.size() != image.extent.area() * static_cast<std::size_t>(image.channels)) {
    throw ShapeMismatch("png: pixel buffer does not match extent");
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.extent.width);
  img.height = static_cast<png_uint_32>(image.extent.height);
  img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(std::string("png encode: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(std::string("png encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

inline void write_png(const std::filesystem::path& path, const PngImage& image) {
  const auto bytes = encode_png(image);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline PngImage require_single_channel(PngImage img, const std::string& origin) {
  if (img.channels != 1) throw DecodeError(origin + ": expected a single-channel PNG");
  return img;
}

inline TernaryLabelMap label_map_from_png(const PngImage& img, const std::string& origin = "<memory>") {
  const auto gray = require_single_channel(img, origin);
  try {
    return TernaryLabelMap::from_codes(gray.extent, gray.pixels);
  } catch (const MalformedLabel& e) {
    throw MalformedLabel(origin + ": " + e.what());
  }
}

// Reads a must/may/cannot annotation stored as codes 0/1/2.
inline TernaryLabelMap load_label_map(const std::filesystem::path& path) {
  return label_map_from_png(read_png(path), path.string());
}

struct LoadedMask {
  SoftMask soft;
  BinaryMask binary;
};

inline LoadedMask mask_from_png(const PngImage& img, double threshold, const std::string& origin = "<memory>") {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidValue("mask threshold must lie in [0,1]");
  const auto gray = require_single_channel(img, origin);
  std::vector<double> soft(gray.pixels.size());
  for (std::size_t i = 0; i < soft.size(); ++i) soft[i] = gray.pixels[i] / 255.0;
  SoftMask m(gray.extent, std::move(soft));
  auto b = m.threshold(threshold);
  return {std::move(m), std::move(b)};
}

inline LoadedMask load_mask(const std::filesystem::path& path, double threshold = 0.5) {
  return mask_from_png(read_png(path), threshold, path.string());
}

inline PngImage to_png(const SoftMask& m) {
  PngImage img{m.extent(), 1, std::vector<std::uint8_t>(m.size())};
  for (std::size_t i = 0; i < m.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(m[i] * 255.0));
  }
  return img;
}

inline PngImage to_png(const BinaryMask& m) {
  PngImage img{m.extent(), 1, std::vector<std::uint8_t>(m.size())};
  for (std::size_t i = 0; i < m.size(); ++i) img.pixels[i] = m[i] ? 255 : 0;
  return img;
}

inline PngImage to_png(const TernaryLabelMap& m) {
  PngImage img{m.extent(), 1, std::vector<std::uint8_t>(m.size())};
  for (std::size_t i = 0; i < m.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(m[i]);
  return img;
}

// Gray or RGB PNG as a C×H×W field with values in [0,1].
inline ChannelField field_from_png(const PngImage& img) {
  const auto c = static_cast<std::size_t>(img.channels);
  const auto plane = img.extent.area();
  std::vector<double> values(c * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t k = 0; k < c; ++k) values[k * plane + i] = img.pixels[i * c + k] / 255.0;
  }
  return ChannelField(c, img.extent, std::move(values));
}

inline PngImage field_to_png(const ChannelField& f) {
  if (f.channels() != 1 && f.channels() != 3) throw InvalidValue("png export needs 1 or 3 channels");
  const auto c = f.channels();
  const auto plane = f.plane_size();
  PngImage img{f.extent(), static_cast<int>(c), std::vector<std::uint8_t>(c * plane)};
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      const double v = std::clamp(f[k * plane + i], 0.0, 1.0);
      img.pixels[i * c + k] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return img;
}

}  // namespace floodbench
