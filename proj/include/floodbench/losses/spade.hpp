#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "floodbench/core/errors.hpp"
#include "floodbench/core/raster.hpp"

namespace floodbench {

// 3×3 cross-correlation with zero padding and stride 1. Weights are laid out
// [out][in][ky][kx].
struct Conv3x3 {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  Conv3x3() = default;
  Conv3x3(std::size_t out, std::size_t in, std::vector<double> w, std::vector<double> b)
      : out_channels(out), in_channels(in), weights(std::move(w)), bias(std::move(b)) {
    if (weights.size() != out * in * 9 || bias.size() != out) {
      throw ShapeMismatch("conv3x3: expected " + std::to_string(out * in * 9) + " weights and " +
                          std::to_string(out) + " biases");
    }
  }

  // Output that is `value` everywhere, whatever the input.
  static Conv3x3 constant(std::size_t out, std::size_t in, double value) {
    return Conv3x3(out, in, std::vector<double>(out * in * 9, 0.0), std::vector<double>(out, value));
  }

  double weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * 3 + ky) * 3 + kx];
  }
};

struct SpadeParams {
  Conv3x3 gamma;
  Conv3x3 beta;
};

namespace kernels {

inline std::vector<double> conv3x3_forward(const Conv3x3& k, const Extent& e, std::span<const double> input) {
  const auto h = static_cast<long>(e.height), w = static_cast<long>(e.width);
  const std::size_t plane = e.area();
  std::vector<double> out(k.out_channels * plane);
  for (std::size_t o = 0; o < k.out_channels; ++o) {
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        double acc = k.bias[o];
        for (std::size_t i = 0; i < k.in_channels; ++i) {
          for (long ky = 0; ky < 3; ++ky) {
            const long rr = r + ky - 1;
            if (rr < 0 || rr >= h) continue;
            for (long kx = 0; kx < 3; ++kx) {
              const long cc = c + kx - 1;
              if (cc < 0 || cc >= w) continue;
              acc += k.weight(o, i, static_cast<std::size_t>(ky), static_cast<std::size_t>(kx)) *
                     input[i * plane + static_cast<std::size_t>(rr * w + cc)];
            }
          }
        }
        out[o * plane + static_cast<std::size_t>(r * w + c)] = acc;
      }
    }
  }
  return out;
}

struct ConvGrad {
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<double> input;
};

inline ConvGrad conv3x3_backward(const Conv3x3& k, const Extent& e, std::span<const double> input,
                                 std::span<const double> upstream) {
  const auto h = static_cast<long>(e.height), w = static_cast<long>(e.width);
  const std::size_t plane = e.area();
  ConvGrad g{std::vector<double>(k.weights.size(), 0.0), std::vector<double>(k.out_channels, 0.0),
             std::vector<double>(k.in_channels * plane, 0.0)};
  for (std::size_t o = 0; o < k.out_channels; ++o) {
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        const double up = upstream[o * plane + static_cast<std::size_t>(r * w + c)];
        g.bias[o] += up;
        for (std::size_t i = 0; i < k.in_channels; ++i) {
          for (long ky = 0; ky < 3; ++ky) {
            const long rr = r + ky - 1;
            if (rr < 0 || rr >= h) continue;
            for (long kx = 0; kx < 3; ++kx) {
              const long cc = c + kx - 1;
              if (cc < 0 || cc >= w) continue;
              const std::size_t wi = ((o * k.in_channels + i) * 3 + static_cast<std::size_t>(ky)) * 3 +
                                     static_cast<std::size_t>(kx);
              const std::size_t ii = i * plane + static_cast<std::size_t>(rr * w + cc);
              g.weights[wi] += up * input[ii];
              g.input[ii] += up * k.weights[wi];
            }
          }
        }
      }
    }
  }
  return g;
}

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population
};

inline ChannelStats channel_stats(std::size_t channels, std::size_t plane, std::span<const double> a) {
  ChannelStats s{std::vector<double>(channels), std::vector<double>(channels)};
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t p = 0; p < plane; ++p) sum += a[c * plane + p];
    const double mu = sum / static_cast<double>(plane);
    double ss = 0.0;
    for (std::size_t p = 0; p < plane; ++p) {
      const double d = a[c * plane + p] - mu;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(plane));
    if (!(sd > 0.0)) {
      throw DegenerateInput("spade_denorm: activation channel " + std::to_string(c) + " has zero variance");
    }
    s.mean[c] = mu;
    s.stddev[c] = sd;
  }
  return s;
}

inline void require_spade_shapes(std::size_t a_channels, std::size_t u_channels, const SpadeParams& p) {
  for (const Conv3x3* k : {&p.gamma, &p.beta}) {
    if (k->in_channels != u_channels || k->out_channels != a_channels) {
      throw ShapeMismatch("spade_denorm: transform maps " + std::to_string(k->in_channels) + "->" +
                          std::to_string(k->out_channels) + " channels, need " + std::to_string(u_channels) +
                          "->" + std::to_string(a_channels));
    }
  }
}

inline std::vector<double> spade_forward(std::size_t channels, const Extent& e, std::span<const double> a,
                                         std::span<const double> cond, const SpadeParams& p) {
  const std::size_t plane = e.area();
  const auto stats = channel_stats(channels, plane, a);
  const auto gamma = conv3x3_forward(p.gamma, e, cond);
  const auto beta = conv3x3_forward(p.beta, e, cond);
  std::vector<double> out(a.size());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t q = 0; q < plane; ++q) {
      const std::size_t i = c * plane + q;
      out[i] = gamma[i] * (a[i] - stats.mean[c]) / stats.stddev[c] + beta[i];
    }
  }
  return out;
}

struct SpadeGrad {
  std::vector<double> activation;
  std::vector<double> conditioning;
  ConvGrad gamma;
  ConvGrad beta;
};

inline SpadeGrad spade_backward(std::size_t channels, const Extent& e, std::span<const double> a,
                                std::span<const double> cond, const SpadeParams& p,
                                std::span<const double> upstream) {
  const std::size_t plane = e.area();
  const double n = static_cast<double>(plane);
  const auto stats = channel_stats(channels, plane, a);
  const auto gamma = conv3x3_forward(p.gamma, e, cond);

  std::vector<double> normalized(a.size()), g_gamma(a.size()), g_a(a.size());
  for (std::size_t c = 0; c < channels; ++c) {
    double g_mean = 0.0, g_dot = 0.0;
    for (std::size_t q = 0; q < plane; ++q) {
      const std::size_t i = c * plane + q;
      normalized[i] = (a[i] - stats.mean[c]) / stats.stddev[c];
      g_gamma[i] = upstream[i] * normalized[i];
      const double g_norm = upstream[i] * gamma[i];
      g_mean += g_norm;
      g_dot += g_norm * normalized[i];
    }
    g_mean /= n;
    g_dot /= n;
    for (std::size_t q = 0; q < plane; ++q) {
      const std::size_t i = c * plane + q;
      g_a[i] = (upstream[i] * gamma[i] - g_mean - normalized[i] * g_dot) / stats.stddev[c];
    }
  }
  SpadeGrad g;
  g.activation = std::move(g_a);
  g.gamma = conv3x3_backward(p.gamma, e, cond, g_gamma);
  g.beta = conv3x3_backward(p.beta, e, cond, upstream);
  g.conditioning = g.gamma.input;
  for (std::size_t i = 0; i < g.conditioning.size(); ++i) g.conditioning[i] += g.beta.input[i];
  return g;
}

}  // namespace kernels

inline ChannelField apply(const Conv3x3& k, const ChannelField& input) {
  if (input.channels() != k.in_channels) throw ShapeMismatch("conv3x3: input channel count mismatch");
  return ChannelField(k.out_channels, input.extent(), kernels::conv3x3_forward(k, input.extent(), input.values()));
}

// γ(U)·(a − μ_c)/σ_c + β(U), with μ_c and σ_c (population) taken per channel
// over the spatial plane.
inline ChannelField spade_denorm(const ChannelField& a, const ChannelField& cond, const SpadeParams& p) {
  require_same_extent(a.extent(), cond.extent(), "spade_denorm");
  kernels::require_spade_shapes(a.channels(), cond.channels(), p);
  return ChannelField(a.channels(), a.extent(),
                      kernels::spade_forward(a.channels(), a.extent(), a.values(), cond.values(), p));
}

}  // namespace floodbench
