#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "floodbench/core/raster.hpp"

namespace floodbench {

// Exact squared Euclidean distance from every pixel to the nearest pixel of
// `sites`, via the separable lower-envelope transform of Felzenszwalb and
// Huttenlocher. Integer arithmetic throughout, so the result is exact.
// Pixels are set to kFar when `sites` is empty.
class SquaredDistanceMap {
 public:
  static constexpr std::int64_t kFar = std::numeric_limits<std::int64_t>::max() / 4;

  explicit SquaredDistanceMap(const BoundarySet& sites) : extent_(sites.extent()) {
    const auto h = static_cast<std::int64_t>(extent_.height);
    const auto w = static_cast<std::int64_t>(extent_.width);
    dist_.assign(extent_.area(), kFar);
    if (sites.empty()) return;

    // Columns: 1-D distance along each column.
    std::vector<std::int64_t> column(static_cast<std::size_t>(h));
    std::vector<std::uint8_t> is_site(extent_.area(), 0);
    for (const auto& p : sites.pixels()) is_site[p.row * extent_.width + p.col] = 1;
    std::vector<std::int64_t> f(static_cast<std::size_t>(std::max(h, w)));
    std::vector<std::int64_t> out(f.size());
    for (std::int64_t c = 0; c < w; ++c) {
      for (std::int64_t r = 0; r < h; ++r) {
        f[static_cast<std::size_t>(r)] = is_site[static_cast<std::size_t>(r * w + c)] ? 0 : kFar;
      }
      envelope(f, h, out);
      for (std::int64_t r = 0; r < h; ++r) dist_[static_cast<std::size_t>(r * w + c)] = out[static_cast<std::size_t>(r)];
    }
    // Rows: combine with horizontal offsets.
    for (std::int64_t r = 0; r < h; ++r) {
      for (std::int64_t c = 0; c < w; ++c) f[static_cast<std::size_t>(c)] = dist_[static_cast<std::size_t>(r * w + c)];
      envelope(f, w, out);
      for (std::int64_t c = 0; c < w; ++c) dist_[static_cast<std::size_t>(r * w + c)] = out[static_cast<std::size_t>(c)];
    }
  }

  std::int64_t operator()(std::size_t row, std::size_t col) const {
    return dist_[row * extent_.width + col];
  }

 private:
  // 1-D squared distance transform of sampled function f over [0, n).
  static void envelope(const std::vector<std::int64_t>& f, std::int64_t n, std::vector<std::int64_t>& out) {
    std::vector<std::int64_t> v(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) + 1);
    std::int64_t k = -1;
    for (std::int64_t q = 0; q < n; ++q) {
      if (f[static_cast<std::size_t>(q)] >= kFar) continue;
      if (k < 0) {
        k = 0;
        v[0] = q;
        z[0] = -std::numeric_limits<double>::infinity();
        z[1] = std::numeric_limits<double>::infinity();
        continue;
      }
      double s;
      for (;;) {
        const auto p = v[static_cast<std::size_t>(k)];
        s = static_cast<double>((f[static_cast<std::size_t>(q)] + q * q) - (f[static_cast<std::size_t>(p)] + p * p)) /
            static_cast<double>(2 * (q - p));
        // z[0] is -inf, so this stops at k == 0 at the latest.
        if (s > z[static_cast<std::size_t>(k)]) break;
        --k;
      }
      ++k;
      v[static_cast<std::size_t>(k)] = q;
      z[static_cast<std::size_t>(k)] = s;
      z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
    }
    if (k < 0) {
      for (std::int64_t q = 0; q < n; ++q) out[static_cast<std::size_t>(q)] = kFar;
      return;
    }
    std::int64_t j = 0;
    for (std::int64_t q = 0; q < n; ++q) {
      while (z[static_cast<std::size_t>(j) + 1] < static_cast<double>(q)) ++j;
      const auto p = v[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(q)] = (q - p) * (q - p) + f[static_cast<std::size_t>(p)];
    }
  }

  Extent extent_;
  std::vector<std::int64_t> dist_;
};

}  // namespace floodbench
