#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "floodbench/core/errors.hpp"

namespace floodbench {

struct Extent {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t area() const { return height * width; }
  friend bool operator==(const Extent&, const Extent&) = default;
};

inline std::string to_string(const Extent& e) {
  return std::to_string(e.height) + "x" + std::to_string(e.width);
}

inline void require_same_extent(const Extent& a, const Extent& b, const char* what) {
  if (!(a == b)) {
    throw ShapeMismatch(std::string(what) + ": shape mismatch " + to_string(a) + " vs " +
                        to_string(b));
  }
}

// Row-major H×W raster, immutable once built.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(Extent extent, std::vector<T> values) : extent_(extent), values_(std::move(values)) {
    if (values_.size() != extent_.area()) {
      throw ShapeMismatch("grid of " + to_string(extent_) + " given " +
                          std::to_string(values_.size()) + " values");
    }
  }
  Grid(Extent extent, T fill) : extent_(extent), values_(extent.area(), fill) {}

  const Extent& extent() const { return extent_; }
  std::size_t height() const { return extent_.height; }
  std::size_t width() const { return extent_.width; }
  std::size_t size() const { return values_.size(); }

  const T& operator()(std::size_t row, std::size_t col) const {
    return values_[row * extent_.width + col];
  }
  const T& operator[](std::size_t i) const { return values_[i]; }
  std::span<const T> values() const { return values_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Extent extent_;
  std::vector<T> values_;
};

enum class Label : std::uint8_t { Cannot = 0, May = 1, Must = 2 };

// Per-pixel must / may / cannot-be-flooded annotation.
class TernaryLabelMap : public Grid<Label> {
 public:
  TernaryLabelMap() = default;
  TernaryLabelMap(Extent extent, std::vector<Label> values)
      : Grid<Label>(extent, std::move(values)) {
    for (std::size_t i = 0; i < size(); ++i) {
      const auto code = static_cast<unsigned>((*this)[i]);
      if (code > 2) {
        throw MalformedLabel("label value " + std::to_string(code) + " at row " +
                             std::to_string(i / width()) + ", col " +
                             std::to_string(i % width()));
      }
    }
  }

  static TernaryLabelMap from_codes(Extent extent, std::span<const std::uint8_t> codes) {
    if (codes.size() != extent.area()) {
      throw ShapeMismatch("label map of " + to_string(extent) + " given " +
                          std::to_string(codes.size()) + " codes");
    }
    std::vector<Label> labels(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (codes[i] > 2) {
        throw MalformedLabel("label value " + std::to_string(codes[i]) + " at row " +
                             std::to_string(i / extent.width) + ", col " +
                             std::to_string(i % extent.width) + " (expected 0, 1 or 2)");
      }
      labels[i] = static_cast<Label>(codes[i]);
    }
    return TernaryLabelMap(extent, std::move(labels));
  }

  std::size_t count(Label l) const {
    std::size_t n = 0;
    for (auto v : values()) n += (v == l);
    return n;
  }
};

class BinaryMask : public Grid<std::uint8_t> {
 public:
  BinaryMask() = default;
  BinaryMask(Extent extent, std::vector<std::uint8_t> values)
      : Grid<std::uint8_t>(extent, std::move(values)) {
    for (auto v : this->values()) {
      if (v > 1) throw InvalidValue("binary mask value " + std::to_string(v) + " is not 0/1");
    }
  }

  BinaryMask complement() const {
    std::vector<std::uint8_t> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = static_cast<std::uint8_t>(1 - (*this)[i]);
    return BinaryMask(extent(), std::move(out));
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : values()) n += v;
    return n;
  }
};

// The MUST region of a label map as a binary mask; edge coherence compares
// predicted boundaries against the boundary of this region.
inline BinaryMask must_region(const TernaryLabelMap& label) {
  std::vector<std::uint8_t> out(label.size());
  for (std::size_t i = 0; i < label.size(); ++i) out[i] = label[i] == Label::Must;
  return BinaryMask(label.extent(), std::move(out));
}

class SoftMask : public Grid<double> {
 public:
  SoftMask() = default;
  SoftMask(Extent extent, std::vector<double> values) : Grid<double>(extent, std::move(values)) {
    for (std::size_t i = 0; i < size(); ++i) {
      const double v = (*this)[i];
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream os;
        os << "soft mask value " << v << " at index " << i << " outside [0,1]";
        throw InvalidValue(os.str());
      }
    }
  }

  static SoftMask from_binary(const BinaryMask& m) {
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i];
    return SoftMask(m.extent(), std::move(out));
  }

  BinaryMask threshold(double t) const {
    std::vector<std::uint8_t> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = (*this)[i] >= t;
    return BinaryMask(extent(), std::move(out));
  }
};

// C×H×W real raster, channel-major. Holds images, disparity, class
// probabilities, self-information maps and conditioning stacks.
class ChannelField {
 public:
  ChannelField() = default;
  ChannelField(std::size_t channels, Extent extent, std::vector<double> values)
      : channels_(channels), extent_(extent), values_(std::move(values)) {
    if (channels_ == 0 || extent_.height == 0 || extent_.width == 0) {
      throw InvalidValue("channel field dimensions must be positive");
    }
    if (values_.size() != channels_ * extent_.area()) {
      throw ShapeMismatch("channel field " + std::to_string(channels_) + "x" +
                          to_string(extent_) + " given " + std::to_string(values_.size()) +
                          " values");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw InvalidValue("non-finite value at flat index " + std::to_string(i));
      }
    }
  }
  ChannelField(std::size_t channels, Extent extent, double fill)
      : ChannelField(channels, extent, std::vector<double>(channels * extent.area(), fill)) {}

  static ChannelField from_mask(const SoftMask& m) {
    return ChannelField(1, m.extent(), std::vector<double>(m.values().begin(), m.values().end()));
  }

  std::size_t channels() const { return channels_; }
  const Extent& extent() const { return extent_; }
  std::size_t height() const { return extent_.height; }
  std::size_t width() const { return extent_.width; }
  std::size_t plane_size() const { return extent_.area(); }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t c, std::size_t row, std::size_t col) const {
    return values_[(c * extent_.height + row) * extent_.width + col];
  }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<const double> plane(std::size_t c) const {
    return std::span<const double>(values_).subspan(c * plane_size(), plane_size());
  }

  friend bool operator==(const ChannelField&, const ChannelField&) = default;

 private:
  std::size_t channels_ = 0;
  Extent extent_;
  std::vector<double> values_;
};

// Concatenates fields along the channel axis, e.g. the conditioning stack
// [image, disparity, segmentation].
inline ChannelField concat_channels(std::span<const ChannelField> parts) {
  if (parts.empty()) throw InvalidValue("concat_channels needs at least one field");
  std::size_t channels = 0;
  std::vector<double> values;
  for (const auto& p : parts) {
    require_same_extent(parts.front().extent(), p.extent(), "concat_channels");
    channels += p.channels();
    values.insert(values.end(), p.values().begin(), p.values().end());
  }
  return ChannelField(channels, parts.front().extent(), std::move(values));
}

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

// Boundary pixels in row-major order, unique, all within the source extent.
class BoundarySet {
 public:
  BoundarySet() = default;
  BoundarySet(Extent extent, std::vector<Pixel> pixels) : extent_(extent), pixels_(std::move(pixels)) {
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
      const auto& p = pixels_[i];
      if (p.row >= extent_.height || p.col >= extent_.width) {
        throw InvalidValue("boundary pixel out of range");
      }
      if (i > 0 && !(pixels_[i - 1] < p)) {
        throw InvalidValue("boundary pixels must be unique and row-major ordered");
      }
    }
  }

  const Extent& extent() const { return extent_; }
  std::span<const Pixel> pixels() const { return pixels_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

 private:
  Extent extent_;
  std::vector<Pixel> pixels_;
};

// Coefficients λ1..λ10 of the depth, segmentation and mask loss sums.
// operator()(k) is 1-based to match the usual numbering.
struct LossWeights {
  std::array<double, 10> lambda{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};

  LossWeights() = default;
  explicit LossWeights(std::array<double, 10> values) : lambda(values) {
    for (double v : lambda) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidValue("loss weights must be finite and >= 0");
    }
  }
  double operator()(int k) const { return lambda.at(static_cast<std::size_t>(k - 1)); }
};

}  // namespace floodbench
