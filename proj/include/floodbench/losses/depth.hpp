#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "floodbench/core/errors.hpp"
#include "floodbench/core/raster.hpp"

namespace floodbench {

inline constexpr int kGradientMatchingScales = 4;

namespace kernels {

// Median with the mean of the two central order statistics for even sizes.
inline double median(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

struct Alignment {
  double shift = 0.0;  // median
  double scale = 0.0;  // mean absolute deviation from the median
  std::vector<double> aligned;
};

inline Alignment align(std::span<const double> d) {
  Alignment a;
  a.shift = median(d);
  double dev = 0.0;
  for (double v : d) dev += std::abs(v - a.shift);
  a.scale = dev / static_cast<double>(d.size());
  if (!(a.scale > 0.0)) throw DegenerateInput("disparity map is constant; alignment undefined");
  a.aligned.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) a.aligned[i] = (d[i] - a.shift) / a.scale;
  return a;
}

// Pulls an upstream gradient over the aligned map back onto the raw map.
// The median contributes through its defining order statistic(s) only.
inline std::vector<double> align_backward(std::span<const double> d, const Alignment& a,
                                          std::span<const double> upstream) {
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
  std::vector<double> tau(n, 0.0);
  if (n % 2 == 1) {
    tau[order[n / 2]] = 1.0;
  } else {
    tau[order[n / 2 - 1]] = 0.5;
    tau[order[n / 2]] = 0.5;
  }

  double g_sum = 0.0, g_dot = 0.0, sign_sum = 0.0;
  std::vector<double> sign(n);
  for (std::size_t i = 0; i < n; ++i) {
    g_sum += upstream[i];
    g_dot += upstream[i] * a.aligned[i];
    const double diff = d[i] - a.shift;
    sign[i] = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
    sign_sum += sign[i];
  }
  const double nn = static_cast<double>(n);
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double dscale = (sign[j] - tau[j] * sign_sum) / nn;
    g[j] = (upstream[j] - tau[j] * g_sum - g_dot * dscale) / a.scale;
  }
  return g;
}

inline double ssimse_value(std::span<const double> d, std::span<const double> target) {
  const auto a = align(d);
  const auto b = align(target);
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = a.aligned[i] - b.aligned[i];
    sum += r * r;
  }
  return 0.5 * sum / static_cast<double>(d.size());
}

inline std::vector<double> ssimse_gradient(std::span<const double> d, std::span<const double> target) {
  const auto a = align(d);
  const auto b = align(target);
  std::vector<double> up(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) up[i] = (a.aligned[i] - b.aligned[i]) / static_cast<double>(d.size());
  return align_backward(d, a, up);
}

struct Level {
  Extent extent;
  std::vector<double> values;
};

// 2×2 average pooling; a trailing odd row/column is dropped.
inline Level downsample(const Level& in) {
  Level out;
  out.extent = {in.extent.height / 2, in.extent.width / 2};
  out.values.resize(out.extent.area());
  const std::size_t w = in.extent.width;
  for (std::size_t r = 0; r < out.extent.height; ++r) {
    for (std::size_t c = 0; c < out.extent.width; ++c) {
      const std::size_t i = 2 * r * w + 2 * c;
      out.values[r * out.extent.width + c] =
          0.25 * (in.values[i] + in.values[i + 1] + in.values[i + w] + in.values[i + w + 1]);
    }
  }
  return out;
}

inline std::vector<Level> residual_pyramid(const Extent& e, std::span<const double> d,
                                           std::span<const double> target) {
  const auto a = align(d);
  const auto b = align(target);
  Level base{e, std::vector<double>(d.size())};
  for (std::size_t i = 0; i < d.size(); ++i) base.values[i] = a.aligned[i] - b.aligned[i];
  std::vector<Level> levels{std::move(base)};
  for (int k = 1; k < kGradientMatchingScales; ++k) levels.push_back(downsample(levels.back()));
  return levels;
}

inline void require_gradient_matching_extent(const Extent& e) {
  const std::size_t min_side = std::size_t{1} << (kGradientMatchingScales - 1);
  if (e.height < min_side || e.width < min_side) {
    throw InvalidValue("gradient matching needs at least " + std::to_string(min_side) + "x" +
                       std::to_string(min_side) + " pixels, got " + to_string(e));
  }
}

// Σ_k Σ_{h,w} |∇x R_k| + |∇y R_k| over forward differences at valid
// positions of each pyramid level.
inline double gradient_matching_value(const Extent& e, std::span<const double> d, std::span<const double> target) {
  require_gradient_matching_extent(e);
  double sum = 0.0;
  for (const auto& lv : residual_pyramid(e, d, target)) {
    const std::size_t h = lv.extent.height, w = lv.extent.width;
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double v = lv.values[r * w + c];
        if (c + 1 < w) sum += std::abs(lv.values[r * w + c + 1] - v);
        if (r + 1 < h) sum += std::abs(lv.values[(r + 1) * w + c] - v);
      }
    }
  }
  return sum;
}

inline std::vector<double> gradient_matching_gradient(const Extent& e, std::span<const double> d,
                                                      std::span<const double> target) {
  require_gradient_matching_extent(e);
  const auto levels = residual_pyramid(e, d, target);
  auto sgn = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };

  // Gradient with respect to each level's residual, coarse to fine.
  std::vector<double> carry;
  for (int k = kGradientMatchingScales - 1; k >= 0; --k) {
    const auto& lv = levels[static_cast<std::size_t>(k)];
    const std::size_t h = lv.extent.height, w = lv.extent.width;
    std::vector<double> g(lv.values.size(), 0.0);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t i = r * w + c;
        if (c + 1 < w) {
          const double s = sgn(lv.values[i + 1] - lv.values[i]);
          g[i + 1] += s;
          g[i] -= s;
        }
        if (r + 1 < h) {
          const double s = sgn(lv.values[i + w] - lv.values[i]);
          g[i + w] += s;
          g[i] -= s;
        }
      }
    }
    if (!carry.empty()) {
      const std::size_t cw = w / 2;
      for (std::size_t r = 0; r < h / 2; ++r) {
        for (std::size_t c = 0; c < cw; ++c) {
          const double q = 0.25 * carry[r * cw + c];
          const std::size_t i = 2 * r * w + 2 * c;
          g[i] += q;
          g[i + 1] += q;
          g[i + w] += q;
          g[i + w + 1] += q;
        }
      }
    }
    carry = std::move(g);
  }
  return align_backward(d, align(d), carry);
}

}  // namespace kernels

inline ChannelField align_disparity(const ChannelField& d) {
  if (d.channels() != 1) throw ShapeMismatch("align_disparity: expected a single-channel map");
  auto a = kernels::align(d.values());
  return ChannelField(1, d.extent(), std::move(a.aligned));
}

inline void require_disparity_pair(const ChannelField& d, const ChannelField& target, const char* what) {
  if (d.channels() != 1 || target.channels() != 1) {
    throw ShapeMismatch(std::string(what) + ": disparity maps must be single-channel");
  }
  require_same_extent(d.extent(), target.extent(), what);
}

// ½·mean of squared differences between the aligned maps; invariant to any
// positive scale and shift of either input.
inline double ssimse_loss(const ChannelField& d, const ChannelField& target) {
  require_disparity_pair(d, target, "ssimse_loss");
  return kernels::ssimse_value(d.values(), target.values());
}

inline double gradient_matching_loss(const ChannelField& d, const ChannelField& target) {
  require_disparity_pair(d, target, "gradient_matching_loss");
  return kernels::gradient_matching_value(d.extent(), d.values(), target.values());
}

}  // namespace floodbench
