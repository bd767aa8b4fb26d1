#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "floodbench/core/raster.hpp"

namespace floodbench {

// Pixels where the 3×3 Sobel response of the mask is nonzero in either
// direction. Borders are replicate-padded, so a flood front touching the image
// edge still has a boundary but the image edge itself never does.
inline BoundarySet sobel_boundary(const BinaryMask& mask) {
  const auto h = static_cast<long>(mask.height());
  const auto w = static_cast<long>(mask.width());
  auto at = [&](long r, long c) -> int {
    r = std::clamp(r, 0L, h - 1);
    c = std::clamp(c, 0L, w - 1);
    return mask(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };

  std::vector<Pixel> out;
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const int gx = (at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1)) -
                     (at(r - 1, c - 1) + 2 * at(r, c - 1) + at(r + 1, c - 1));
      const int gy = (at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1)) -
                     (at(r - 1, c - 1) + 2 * at(r - 1, c) + at(r - 1, c + 1));
      if (gx != 0 || gy != 0) {
        out.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c)});
      }
    }
  }
  return BoundarySet(mask.extent(), std::move(out));
}

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// MUST pixels are positives, CANNOT pixels negatives; MAY pixels are ignored.
inline ConfusionCounts confusion_counts(const BinaryMask& pred, const TernaryLabelMap& label) {
  require_same_extent(pred.extent(), label.extent(), "confusion_counts");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    switch (label[i]) {
      case Label::Must:
        (p ? c.tp : c.fn) += 1;
        break;
      case Label::Cannot:
        (p ? c.fp : c.tn) += 1;
        break;
      case Label::May:
        break;
    }
  }
  return c;
}

}  // namespace floodbench
