#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "floodbench/core/errors.hpp"
#include "floodbench/losses/depth.hpp"
#include "floodbench/losses/mask_losses.hpp"
#include "floodbench/losses/spade.hpp"
#include "floodbench/util/parallel.hpp"

namespace floodbench {

inline constexpr double kFiniteDifferenceStep = 1e-5;

// A scalar function of a flat parameter vector together with its analytic
// gradient.
struct DifferentiableKernel {
  std::string name;
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

struct KernelInstance {
  DifferentiableKernel kernel;
  std::vector<double> point;
};

struct GradCheckReport {
  std::string kernel;
  double tolerance = 0.0;
  double max_relative_deviation = 0.0;
  std::vector<double> deviations;
  bool pass = false;
};

// Deviation of one gradient component. Components that are tiny next to the
// largest analytic component are compared against 1e-3 of that largest
// component rather than against themselves, so round-off on near-zero
// entries does not register as a failure.
inline double relative_deviation(double analytic, double numeric, double scale_floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), scale_floor, 1e-300});
  return std::abs(analytic - numeric) / denom;
}

// Central differences on every parameter against the analytic gradient.
// Parameters are split across threads; each deviation lands in its own slot
// so the report does not depend on the thread count.
inline GradCheckReport grad_check(const KernelInstance& inst, double tolerance,
                                  double step = kFiniteDifferenceStep,
                                  unsigned threads = util::default_threads()) {
  const auto analytic = inst.kernel.gradient(inst.point);
  if (analytic.size() != inst.point.size()) {
    throw InvalidValue(inst.kernel.name + ": gradient has " + std::to_string(analytic.size()) +
                       " entries for " + std::to_string(inst.point.size()) + " parameters");
  }
  double largest = 0.0;
  for (double g : analytic) largest = std::max(largest, std::abs(g));
  const double floor = 1e-3 * largest;

  GradCheckReport report;
  report.kernel = inst.kernel.name;
  report.tolerance = tolerance;
  report.deviations.assign(inst.point.size(), 0.0);
  util::parallel_chunks(inst.point.size(), 32, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> x = inst.point;
    for (std::size_t i = begin; i < end; ++i) {
      const double orig = x[i];
      x[i] = orig + step;
      const double up = inst.kernel.value(x);
      x[i] = orig - step;
      const double down = inst.kernel.value(x);
      x[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      report.deviations[i] = relative_deviation(analytic[i], numeric, floor);
    }
  });
  for (double d : report.deviations) report.max_relative_deviation = std::max(report.max_relative_deviation, d);
  report.pass = report.max_relative_deviation <= tolerance;
  return report;
}

enum class KernelId { Tv, Em, Ce, Bce, Ssimse, GradientMatching, SpadeComposite, Gi, Wgan };

inline std::string_view kernel_name(KernelId id) {
  switch (id) {
    case KernelId::Tv: return "tv";
    case KernelId::Em: return "em";
    case KernelId::Ce: return "ce";
    case KernelId::Bce: return "bce";
    case KernelId::Ssimse: return "ssimse";
    case KernelId::GradientMatching: return "gradient_matching";
    case KernelId::SpadeComposite: return "spade_denorm";
    case KernelId::Gi: return "gi";
    case KernelId::Wgan: return "wgan";
  }
  return "?";
}

inline bool is_differentiable(KernelId id) { return id != KernelId::Gi && id != KernelId::Wgan; }

inline void require_differentiable(KernelId id) {
  if (!is_differentiable(id)) {
    throw UnsupportedKernel(std::string(kernel_name(id)) +
                            " has no analytic gradient (indicator-based); it cannot be gradient-checked");
  }
}

// Typed instance builders. The fixed operands (targets, weights) are captured
// by value; the returned point is the parameter vector under test.

inline KernelInstance tv_instance(const SoftMask& m) {
  const Extent e = m.extent();
  return {{"tv", [e](std::span<const double> x) { return kernels::tv_value(e, x); },
           [e](std::span<const double> x) { return kernels::tv_gradient(e, x); }},
          std::vector<double>(m.values().begin(), m.values().end())};
}

inline KernelInstance em_instance(std::span<const double> q) {
  return {{"em", [](std::span<const double> x) { return kernels::em_value(x); },
           [](std::span<const double> x) { return kernels::em_gradient(x); }},
          std::vector<double>(q.begin(), q.end())};
}

inline KernelInstance ce_instance(const ChannelField& y, const ChannelField& s) {
  const std::size_t plane = y.plane_size();
  std::vector<double> target(y.values().begin(), y.values().end());
  return {{"ce", [plane, target](std::span<const double> x) { return kernels::ce_value(plane, target, x); },
           [plane, target](std::span<const double> x) { return kernels::ce_gradient(plane, target, x); }},
          std::vector<double>(s.values().begin(), s.values().end())};
}

inline KernelInstance bce_instance(const BinaryMask& y, const SoftMask& m) {
  std::vector<double> target(y.values().begin(), y.values().end());
  return {{"bce", [target](std::span<const double> x) { return kernels::bce_value(target, x); },
           [target](std::span<const double> x) { return kernels::bce_gradient(target, x); }},
          std::vector<double>(m.values().begin(), m.values().end())};
}

inline KernelInstance ssimse_instance(const ChannelField& d, const ChannelField& target) {
  std::vector<double> t(target.values().begin(), target.values().end());
  return {{"ssimse", [t](std::span<const double> x) { return kernels::ssimse_value(x, t); },
           [t](std::span<const double> x) { return kernels::ssimse_gradient(x, t); }},
          std::vector<double>(d.values().begin(), d.values().end())};
}

inline KernelInstance gradient_matching_instance(const ChannelField& d, const ChannelField& target) {
  const Extent e = d.extent();
  std::vector<double> t(target.values().begin(), target.values().end());
  return {{"gradient_matching", [e, t](std::span<const double> x) { return kernels::gradient_matching_value(e, x, t); },
           [e, t](std::span<const double> x) { return kernels::gradient_matching_gradient(e, x, t); }},
          std::vector<double>(d.values().begin(), d.values().end())};
}

// Scalar Σ w ⊙ spade_denorm(a, U) over the parameter vector
// [a | U | γ weights | γ bias | β weights | β bias].
inline KernelInstance spade_instance(const ChannelField& a, const ChannelField& cond, const SpadeParams& p,
                                     const std::vector<double>& readout) {
  kernels::require_spade_shapes(a.channels(), cond.channels(), p);
  if (readout.size() != a.size()) throw ShapeMismatch("spade_instance: readout weights must match activation size");
  const std::size_t channels = a.channels();
  const Extent e = a.extent();
  const std::size_t na = a.size(), nu = cond.size();
  const std::size_t nw = p.gamma.weights.size(), nb = p.gamma.bias.size();
  const std::size_t cin = cond.channels();

  auto unpack = [=](std::span<const double> x) {
    SpadeParams q;
    std::size_t at = na + nu;
    auto take = [&](std::size_t n) {
      std::vector<double> v(x.begin() + static_cast<std::ptrdiff_t>(at), x.begin() + static_cast<std::ptrdiff_t>(at + n));
      at += n;
      return v;
    };
    auto gw = take(nw);
    auto gb = take(nb);
    auto bw = take(nw);
    auto bb = take(nb);
    q.gamma = Conv3x3(channels, cin, std::move(gw), std::move(gb));
    q.beta = Conv3x3(channels, cin, std::move(bw), std::move(bb));
    return q;
  };

  std::vector<double> point(a.values().begin(), a.values().end());
  point.insert(point.end(), cond.values().begin(), cond.values().end());
  for (const Conv3x3* k : {&p.gamma, &p.beta}) {
    point.insert(point.end(), k->weights.begin(), k->weights.end());
    point.insert(point.end(), k->bias.begin(), k->bias.end());
  }

  auto value = [=](std::span<const double> x) {
    const auto q = unpack(x);
    const auto out = kernels::spade_forward(channels, e, x.subspan(0, na), x.subspan(na, nu), q);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += readout[i] * out[i];
    return s;
  };
  auto gradient = [=](std::span<const double> x) {
    const auto q = unpack(x);
    const auto g = kernels::spade_backward(channels, e, x.subspan(0, na), x.subspan(na, nu), q, readout);
    std::vector<double> flat(g.activation);
    flat.insert(flat.end(), g.conditioning.begin(), g.conditioning.end());
    for (const kernels::ConvGrad* k : {&g.gamma, &g.beta}) {
      flat.insert(flat.end(), k->weights.begin(), k->weights.end());
      flat.insert(flat.end(), k->bias.begin(), k->bias.end());
    }
    return flat;
  };
  return {{"spade_denorm", value, gradient}, std::move(point)};
}

namespace detail {

inline std::vector<double> uniform_values(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// True when no |d_i − median| (other than the odd-size median itself) is
// within `margin`: finite differences of that size then never reorder the
// central values or cross a kink of the absolute deviation.
inline bool clear_of_median_kinks(std::span<const double> d, double margin) {
  const double t = kernels::median(d);
  std::size_t exact = 0;
  for (double v : d) {
    if (v == t) {
      ++exact;
      continue;
    }
    if (std::abs(v - t) < margin) return false;
  }
  return exact <= 1;
}

inline bool clear_of_gradient_kinks(const Extent& e, std::span<const double> d, std::span<const double> t,
                                    double margin) {
  for (const auto& lv : kernels::residual_pyramid(e, d, t)) {
    const std::size_t h = lv.extent.height, w = lv.extent.width;
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double v = lv.values[r * w + c];
        if (c + 1 < w && std::abs(lv.values[r * w + c + 1] - v) < margin) return false;
        if (r + 1 < h && std::abs(lv.values[(r + 1) * w + c] - v) < margin) return false;
      }
    }
  }
  return true;
}

}  // namespace detail

// Random instance of a differentiable kernel at a point where it is
// differentiable with a margin comfortably above the finite-difference step.
inline KernelInstance random_instance(KernelId id, std::uint64_t seed) {
  require_differentiable(id);
  std::mt19937_64 rng(seed);
  switch (id) {
    case KernelId::Tv:
      return tv_instance(SoftMask({8, 8}, detail::uniform_values(rng, 64, 0.0, 1.0)));
    case KernelId::Em:
      return em_instance(detail::uniform_values(rng, 64, 0.05, 0.95));
    case KernelId::Ce: {
      constexpr std::size_t C = 9;
      const Extent e{6, 6};
      std::vector<double> y(C * e.area(), 0.0), s(C * e.area());
      std::uniform_int_distribution<std::size_t> cls(0, C - 1);
      std::uniform_real_distribution<double> u(0.1, 1.0);
      for (std::size_t p = 0; p < e.area(); ++p) {
        y[cls(rng) * e.area() + p] = 1.0;
        double total = 0.0;
        for (std::size_t c = 0; c < C; ++c) total += (s[c * e.area() + p] = u(rng));
        for (std::size_t c = 0; c < C; ++c) s[c * e.area() + p] /= total;
      }
      return ce_instance(ChannelField(C, e, std::move(y)), ChannelField(C, e, std::move(s)));
    }
    case KernelId::Bce: {
      std::bernoulli_distribution coin(0.5);
      std::vector<std::uint8_t> y(64);
      for (auto& v : y) v = coin(rng);
      return bce_instance(BinaryMask({8, 8}, std::move(y)), SoftMask({8, 8}, detail::uniform_values(rng, 64, 0.05, 0.95)));
    }
    case KernelId::Ssimse:
      for (;;) {
        auto d = detail::uniform_values(rng, 64, 0.0, 1.0);
        auto t = detail::uniform_values(rng, 64, 0.0, 1.0);
        if (!detail::clear_of_median_kinks(d, 1e-4)) continue;
        return ssimse_instance(ChannelField(1, {8, 8}, std::move(d)), ChannelField(1, {8, 8}, std::move(t)));
      }
    case KernelId::GradientMatching:
      for (;;) {
        const Extent e{16, 16};
        auto d = detail::uniform_values(rng, 256, 0.0, 1.0);
        auto t = detail::uniform_values(rng, 256, 0.0, 1.0);
        if (!detail::clear_of_median_kinks(d, 1e-4) || !detail::clear_of_gradient_kinks(e, d, t, 5e-4)) continue;
        return gradient_matching_instance(ChannelField(1, e, std::move(d)), ChannelField(1, e, std::move(t)));
      }
    case KernelId::SpadeComposite: {
      const Extent e{5, 5};
      constexpr std::size_t C = 2, U = 3;
      std::normal_distribution<double> n01(0.0, 1.0), small(0.0, 0.3);
      auto draw = [&](std::size_t n, auto& dist) {
        std::vector<double> v(n);
        for (auto& x : v) x = dist(rng);
        return v;
      };
      ChannelField a(C, e, draw(C * e.area(), n01));
      ChannelField cond(U, e, detail::uniform_values(rng, U * e.area(), 0.0, 1.0));
      SpadeParams p{Conv3x3(C, U, draw(C * U * 9, small), draw(C, small)),
                    Conv3x3(C, U, draw(C * U * 9, small), draw(C, small))};
      return spade_instance(a, cond, p, draw(C * e.area(), n01));
    }
    case KernelId::Gi:
    case KernelId::Wgan:
      break;
  }
  throw UnsupportedKernel(std::string(kernel_name(id)));
}

// Convenience: random instance for `id` checked at `tolerance`.
inline GradCheckReport grad_check(KernelId id, std::uint64_t seed, double tolerance,
                                  unsigned threads = util::default_threads()) {
  require_differentiable(id);
  return grad_check(random_instance(id, seed), tolerance, kFiniteDifferenceStep, threads);
}

}  // namespace floodbench
