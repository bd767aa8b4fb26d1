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

// Clamp applied inside every logarithm.
inline constexpr double kLogEpsilon = 1e-12;

namespace kernels {

// Flat-array forms of the pointwise losses. These are what the gradient
// checker perturbs; the typed wrappers below validate their inputs first.

inline std::size_t tv_term_count(const Extent& e) {
  return (e.height - 1) * e.width + e.height * (e.width - 1);
}

// Mean over all valid forward differences (vertical and horizontal pooled)
// of the squared difference.
inline double tv_value(const Extent& e, std::span<const double> m) {
  const std::size_t terms = tv_term_count(e);
  if (terms == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < e.height; ++r) {
    for (std::size_t c = 0; c < e.width; ++c) {
      const double v = m[r * e.width + c];
      if (r + 1 < e.height) {
        const double d = m[(r + 1) * e.width + c] - v;
        sum += d * d;
      }
      if (c + 1 < e.width) {
        const double d = m[r * e.width + c + 1] - v;
        sum += d * d;
      }
    }
  }
  return sum / static_cast<double>(terms);
}

inline std::vector<double> tv_gradient(const Extent& e, std::span<const double> m) {
  std::vector<double> g(m.size(), 0.0);
  const std::size_t terms = tv_term_count(e);
  if (terms == 0) return g;
  const double scale = 2.0 / static_cast<double>(terms);
  for (std::size_t r = 0; r < e.height; ++r) {
    for (std::size_t c = 0; c < e.width; ++c) {
      const std::size_t i = r * e.width + c;
      if (r + 1 < e.height) {
        const std::size_t j = i + e.width;
        const double d = scale * (m[j] - m[i]);
        g[j] += d;
        g[i] -= d;
      }
      if (c + 1 < e.width) {
        const std::size_t j = i + 1;
        const double d = scale * (m[j] - m[i]);
        g[j] += d;
        g[i] -= d;
      }
    }
  }
  return g;
}

inline double neg_q_log_q(double q) { return q > 0.0 ? -q * std::log(q) : 0.0; }

inline double em_value(std::span<const double> q) {
  double sum = 0.0;
  for (double v : q) sum += neg_q_log_q(v);
  return sum / static_cast<double>(q.size());
}

inline std::vector<double> em_gradient(std::span<const double> q) {
  std::vector<double> g(q.size());
  const double n = static_cast<double>(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) g[i] = -(std::log(std::max(q[i], kLogEpsilon)) + 1.0) / n;
  return g;
}

// −Σ_c mean_{h,w}[y log s]: the sum over every element divided by H·W.
inline double ce_value(std::size_t plane, std::span<const double> y, std::span<const double> s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 0.0) sum += y[i] * std::log(std::max(s[i], kLogEpsilon));
  }
  return -sum / static_cast<double>(plane);
}

inline std::vector<double> ce_gradient(std::size_t plane, std::span<const double> y, std::span<const double> s) {
  std::vector<double> g(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 0.0 && s[i] > kLogEpsilon) g[i] = -y[i] / (s[i] * static_cast<double>(plane));
  }
  return g;
}

inline double bce_value(std::span<const double> y, std::span<const double> m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double p = std::clamp(m[i], kLogEpsilon, 1.0 - kLogEpsilon);
    sum -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(m.size());
}

inline std::vector<double> bce_gradient(std::span<const double> y, std::span<const double> m) {
  std::vector<double> g(m.size(), 0.0);
  const double n = static_cast<double>(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] <= kLogEpsilon || m[i] >= 1.0 - kLogEpsilon) continue;
    g[i] = (-y[i] / m[i] + (1.0 - y[i]) / (1.0 - m[i])) / n;
  }
  return g;
}

}  // namespace kernels

inline double tv_loss(const SoftMask& m) { return kernels::tv_value(m.extent(), m.values()); }

// Fraction of pixels where the ground pseudo-label exceeds the mask by more
// than 0.5.
inline double gi_loss(const SoftMask& ground, const SoftMask& m) {
  require_same_extent(ground.extent(), m.extent(), "gi_loss");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < m.size(); ++i) hits += (ground[i] - m[i]) > 0.5;
  return static_cast<double>(hits) / static_cast<double>(m.size());
}

inline void require_unit_interval(std::span<const double> q, const char* what) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] >= 0.0 && q[i] <= 1.0)) {
      throw InvalidValue(std::string(what) + ": value " + std::to_string(q[i]) + " at index " +
                         std::to_string(i) + " outside [0,1]");
    }
  }
}

inline double em_loss(const ChannelField& q) {
  require_unit_interval(q.values(), "em_loss");
  return kernels::em_value(q.values());
}

inline double em_loss(const SoftMask& m) { return kernels::em_value(m.values()); }

inline double ce_loss(const ChannelField& y, const ChannelField& s) {
  if (y.channels() != s.channels()) throw ShapeMismatch("ce_loss: channel counts differ");
  require_same_extent(y.extent(), s.extent(), "ce_loss");
  const std::size_t plane = y.plane_size();
  for (std::size_t p = 0; p < plane; ++p) {
    double ones = 0.0;
    for (std::size_t c = 0; c < y.channels(); ++c) {
      const double v = y[c * plane + p];
      if (v != 0.0 && v != 1.0) throw InvalidValue("ce_loss: targets must be one-hot");
      ones += v;
    }
    if (ones != 1.0) throw InvalidValue("ce_loss: targets must be one-hot");
  }
  require_unit_interval(s.values(), "ce_loss");
  return kernels::ce_value(plane, y.values(), s.values());
}

inline double bce_loss(const BinaryMask& y, const SoftMask& m) {
  require_same_extent(y.extent(), m.extent(), "bce_loss");
  std::vector<double> target(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) target[i] = y[i];
  return kernels::bce_value(target, m.values());
}

// Per-element −q log q, 0 log 0 taken as 0.
inline ChannelField self_information(const ChannelField& q) {
  require_unit_interval(q.values(), "self_information");
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = kernels::neg_q_log_q(q[i]);
  return ChannelField(q.channels(), q.extent(), std::move(out));
}

// Depth-aware self-information: every channel of `info` multiplied by the
// single-channel disparity map.
inline ChannelField dada_fuse(const ChannelField& info, const ChannelField& disparity) {
  if (disparity.channels() != 1) throw ShapeMismatch("dada_fuse: disparity must have one channel");
  require_same_extent(info.extent(), disparity.extent(), "dada_fuse");
  const std::size_t plane = info.plane_size();
  std::vector<double> out(info.size());
  for (std::size_t c = 0; c < info.channels(); ++c) {
    for (std::size_t p = 0; p < plane; ++p) out[c * plane + p] = info[c * plane + p] * disparity[p];
  }
  return ChannelField(info.channels(), info.extent(), std::move(out));
}

// painted ⊙ m + x ⊙ (1 − m) for a binary m. Implemented as a per-pixel
// select so that unmasked pixels are bit-identical copies of x.
inline ChannelField composite_flood(const ChannelField& x, const ChannelField& painted, const SoftMask& m) {
  if (x.channels() != painted.channels()) throw ShapeMismatch("composite_flood: channel counts differ");
  require_same_extent(x.extent(), painted.extent(), "composite_flood");
  require_same_extent(x.extent(), m.extent(), "composite_flood");
  for (double v : m.values()) {
    if (v != 0.0 && v != 1.0) throw InvalidValue("composite_flood: mask must be binary");
  }
  const std::size_t plane = x.plane_size();
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t i = c * plane + p;
      out[i] = m[p] == 1.0 ? painted[i] : x[i];
    }
  }
  return ChannelField(x.channels(), x.extent(), std::move(out));
}

struct WganLosses {
  double generator = 0.0;
  double discriminator = 0.0;
};

// Critic outputs are supplied by the caller. generator = −E[Q(real)],
// discriminator = −E[Q(sim) − Q(real)].
inline WganLosses wgan_losses(std::span<const double> q_real, std::span<const double> q_sim) {
  if (q_real.empty() || q_sim.empty()) throw InvalidValue("wgan_losses: critic outputs must be nonempty");
  auto mean = [](std::span<const double> xs) {
    double s = 0.0;
    for (double v : xs) s += v;
    return s / static_cast<double>(xs.size());
  };
  const double real = mean(q_real);
  const double sim = mean(q_sim);
  return {-real, -(sim - real)};
}

struct LossParts {
  double ssimse = 0.0;
  double gradient_matching = 0.0;
  double ce = 0.0;
  double em_seg = 0.0;
  double wgan_seg = 0.0;
  double tv = 0.0;
  double gi = 0.0;
  double bce = 0.0;
  double em_mask = 0.0;
  double wgan_mask = 0.0;
};

struct CombinedLosses {
  double depth = 0.0;
  double seg = 0.0;
  double mask = 0.0;
  double masker = 0.0;
};

inline CombinedLosses combined_losses(const LossParts& p, const LossWeights& w) {
  CombinedLosses out;
  out.depth = w(1) * p.ssimse + w(2) * p.gradient_matching;
  out.seg = w(3) * p.ce + w(4) * p.em_seg + w(5) * p.wgan_seg;
  out.mask = w(6) * p.tv + w(7) * p.gi + w(8) * p.bce + w(9) * p.em_mask + w(10) * p.wgan_mask;
  out.masker = out.depth + out.seg + out.mask;
  return out;
}

}  // namespace floodbench
