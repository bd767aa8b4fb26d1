#pragma once

// Straightforward reimplementations used as references. They share no code
// with the library beyond the raster containers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "floodbench/core/raster.hpp"

namespace oracle {

using floodbench::BinaryMask;
using floodbench::ChannelField;
using floodbench::Extent;
using floodbench::Label;
using floodbench::TernaryLabelMap;

inline std::set<std::pair<std::size_t, std::size_t>> sobel(const std::vector<int>& m, std::size_t h, std::size_t w) {
  auto at = [&](long r, long c) {
    r = std::clamp(r, 0L, static_cast<long>(h) - 1);
    c = std::clamp(c, 0L, static_cast<long>(w) - 1);
    return m[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c)];
  };
  static const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      int gx = 0, gy = 0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const int v = at(static_cast<long>(r) + i - 1, static_cast<long>(c) + j - 1);
          gx += kx[i][j] * v;
          gy += ky[i][j] * v;
        }
      }
      if (gx != 0 || gy != 0) out.insert({r, c});
    }
  }
  return out;
}

struct Counts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Counts counts(const BinaryMask& pred, const TernaryLabelMap& label) {
  Counts k;
  for (std::size_t r = 0; r < pred.height(); ++r) {
    for (std::size_t c = 0; c < pred.width(); ++c) {
      const bool p = pred(r, c) != 0;
      switch (label(r, c)) {
        case Label::Must: (p ? k.tp : k.fn)++; break;
        case Label::Cannot: (p ? k.fp : k.tn)++; break;
        case Label::May: break;
      }
    }
  }
  return k;
}

inline double error(const BinaryMask& pred, const TernaryLabelMap& label) {
  const auto k = counts(pred, label);
  return static_cast<double>(k.fp + k.fn) / static_cast<double>(pred.height() * pred.width());
}

inline std::optional<double> f05(const BinaryMask& pred, const TernaryLabelMap& label) {
  const auto k = counts(pred, label);
  if (k.tp + k.fp == 0 || k.tp + k.fn == 0) return std::nullopt;
  const double p = static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fp);
  const double r = static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fn);
  if (p == 0.0 && r == 0.0) return 0.0;
  return (1.0 + 0.25) * p * r / (0.25 * p + r);
}

// All-pairs minimum distances, population standard deviation.
inline std::optional<double> edge_coherence(const BinaryMask& pred, const TernaryLabelMap& label) {
  const std::size_t h = pred.height(), w = pred.width();
  std::vector<int> pm(h * w), lm(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    pm[i] = pred[i] ? 1 : 0;
    lm[i] = label[i] == Label::Must ? 1 : 0;
  }
  const auto bp = sobel(pm, h, w);
  const auto bl = sobel(lm, h, w);
  if (bp.empty() || bl.empty()) return std::nullopt;
  std::vector<double> delta;
  for (const auto& [r, c] : bp) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [r2, c2] : bl) {
      const double dr = static_cast<double>(r) - static_cast<double>(r2);
      const double dc = static_cast<double>(c) - static_cast<double>(c2);
      best = std::min(best, std::sqrt(dr * dr + dc * dc));
    }
    delta.push_back(best / static_cast<double>(h));
  }
  double mean = 0.0;
  for (double d : delta) mean += d;
  mean /= static_cast<double>(delta.size());
  double var = 0.0;
  for (double d : delta) var += (d - mean) * (d - mean);
  var /= static_cast<double>(delta.size());
  return 1.0 - std::sqrt(var);
}

inline std::vector<double> aligned(std::vector<double> d) {
  std::vector<double> s = d;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  const double med = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  double mad = 0.0;
  for (double v : d) mad += std::abs(v - med);
  mad /= static_cast<double>(n);
  for (double& v : d) v = (v - med) / mad;
  return d;
}

inline double ssimse(const std::vector<double>& d, const std::vector<double>& t) {
  const auto a = aligned(d), b = aligned(t);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return 0.5 * s / static_cast<double>(a.size());
}

// Downsamples each aligned map on its own and differences afterwards.
inline double gradient_matching(const std::vector<double>& d, const std::vector<double>& t, std::size_t h,
                                 std::size_t w) {
  std::vector<double> a = aligned(d), b = aligned(t);
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double res = a[r * w + c] - b[r * w + c];
        if (c + 1 < w) total += std::abs((a[r * w + c + 1] - b[r * w + c + 1]) - res);
        if (r + 1 < h) total += std::abs((a[(r + 1) * w + c] - b[(r + 1) * w + c]) - res);
      }
    }
    if (k == 3) break;
    const std::size_t h2 = h / 2, w2 = w / 2;
    std::vector<double> a2(h2 * w2), b2(h2 * w2);
    for (std::size_t r = 0; r < h2; ++r) {
      for (std::size_t c = 0; c < w2; ++c) {
        auto pool = [&](const std::vector<double>& x) {
          return 0.25 * (x[2 * r * w + 2 * c] + x[2 * r * w + 2 * c + 1] + x[(2 * r + 1) * w + 2 * c] +
                         x[(2 * r + 1) * w + 2 * c + 1]);
        };
        a2[r * w2 + c] = pool(a);
        b2[r * w2 + c] = pool(b);
      }
    }
    a = std::move(a2);
    b = std::move(b2);
    h = h2;
    w = w2;
  }
  return total;
}

// Zero-padded 3×3 cross-correlation then per-channel standardization.
inline std::vector<double> spade(std::size_t ca, std::size_t cu, std::size_t h, std::size_t w,
                                 const std::vector<double>& a, const std::vector<double>& u,
                                 const std::vector<double>& gw, const std::vector<double>& gb,
                                 const std::vector<double>& bw, const std::vector<double>& bb) {
  auto conv = [&](const std::vector<double>& wt, const std::vector<double>& bias, std::size_t o, long r, long c) {
    double acc = bias[o];
    for (std::size_t i = 0; i < cu; ++i) {
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const long rr = r + dy, cc = c + dx;
          const double v = (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w))
                               ? 0.0
                               : u[i * h * w + static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(cc)];
          acc += wt[((o * cu + i) * 3 + static_cast<std::size_t>(dy + 1)) * 3 + static_cast<std::size_t>(dx + 1)] * v;
        }
      }
    }
    return acc;
  };
  std::vector<double> out(a.size());
  for (std::size_t o = 0; o < ca; ++o) {
    double mean = 0.0;
    for (std::size_t p = 0; p < h * w; ++p) mean += a[o * h * w + p];
    mean /= static_cast<double>(h * w);
    double var = 0.0;
    for (std::size_t p = 0; p < h * w; ++p) var += std::pow(a[o * h * w + p] - mean, 2);
    const double sd = std::sqrt(var / static_cast<double>(h * w));
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t i = o * h * w + r * w + c;
        out[i] = conv(gw, gb, o, static_cast<long>(r), static_cast<long>(c)) * (a[i] - mean) / sd +
                 conv(bw, bb, o, static_cast<long>(r), static_cast<long>(c));
      }
    }
  }
  return out;
}

inline double trimmed_mean(std::vector<double> xs, double trim) {
  std::sort(xs.begin(), xs.end());
  const auto k = static_cast<std::size_t>(std::floor(trim * static_cast<double>(xs.size()) + 1e-9));
  double s = 0.0;
  for (std::size_t i = k; i < xs.size() - k; ++i) s += xs[i];
  return s / static_cast<double>(xs.size() - 2 * k);
}

// Random (pred, label) pair: a few rectangles so boundaries are non-trivial.
inline std::pair<BinaryMask, TernaryLabelMap> random_pair(std::mt19937_64& rng, Extent e) {
  std::uniform_int_distribution<std::size_t> rr(0, e.height - 1), cc(0, e.width - 1);
  std::vector<std::uint8_t> pred(e.area(), 0), codes(e.area(), 0);
  auto paint = [&](std::vector<std::uint8_t>& dst, std::uint8_t v, int rects) {
    for (int k = 0; k < rects; ++k) {
      auto r0 = rr(rng), r1 = rr(rng), c0 = cc(rng), c1 = cc(rng);
      if (r0 > r1) std::swap(r0, r1);
      if (c0 > c1) std::swap(c0, c1);
      for (auto r = r0; r <= r1; ++r)
        for (auto c = c0; c <= c1; ++c) dst[r * e.width + c] = v;
    }
  };
  paint(codes, 2, 2);
  paint(codes, 1, 1);
  paint(pred, 1, 2);
  std::bernoulli_distribution noise(0.05);
  for (auto& p : pred) {
    if (noise(rng)) p ^= 1;
  }
  return {BinaryMask(e, std::move(pred)), TernaryLabelMap::from_codes(e, codes)};
}

}  // namespace oracle
