#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "floodbench/losses/gradcheck.hpp"

namespace floodbench {

struct KernelSpec {
  std::string name;
  std::function<KernelInstance(std::uint64_t seed)> make;
};

inline std::vector<KernelSpec> default_kernel_suite() {
  std::vector<KernelSpec> suite;
  for (KernelId id : {KernelId::Tv, KernelId::Em, KernelId::Ce, KernelId::Bce, KernelId::Ssimse,
                      KernelId::GradientMatching, KernelId::SpadeComposite}) {
    suite.push_back({std::string(kernel_name(id)), [id](std::uint64_t seed) { return random_instance(id, seed); }});
  }
  return suite;
}

struct KernelVerdict {
  std::string name;
  std::size_t instances = 0;
  double max_relative_deviation = 0.0;
  bool pass = false;
};

struct InvariantVerdict {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerificationReport {
  double tolerance = 0.0;
  std::vector<KernelVerdict> kernels;
  std::vector<InvariantVerdict> invariants;

  bool pass() const {
    return std::all_of(kernels.begin(), kernels.end(), [](const auto& k) { return k.pass; }) &&
           std::all_of(invariants.begin(), invariants.end(), [](const auto& i) { return i.pass; });
  }
  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& k : kernels) if (!k.pass) out.push_back(k.name);
    for (const auto& i : invariants) if (!i.pass) out.push_back(i.name);
    return out;
  }
};

struct VerifyOptions {
  double tolerance = 1e-4;
  std::size_t instances = 20;
  std::uint64_t seed = 0;
  unsigned threads = util::default_threads();
};

inline KernelVerdict verify_kernel(const KernelSpec& spec, const VerifyOptions& opts) {
  KernelVerdict v{spec.name, opts.instances, 0.0, true};
  for (std::size_t i = 0; i < opts.instances; ++i) {
    const auto report = grad_check(spec.make(opts.seed * 1000003u + i), opts.tolerance, kFiniteDifferenceStep, opts.threads);
    v.max_relative_deviation = std::max(v.max_relative_deviation, report.max_relative_deviation);
    v.pass = v.pass && report.pass;
  }
  return v;
}

namespace detail {

inline InvariantVerdict verdict(std::string name, double err, double tol) {
  return {std::move(name), err, tol, err <= tol};
}

inline std::vector<InvariantVerdict> check_invariants(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto field = [&](std::size_t c, Extent e) {
    std::vector<double> v(c * e.area());
    for (auto& x : v) x = u(rng);
    return ChannelField(c, e, std::move(v));
  };
  std::vector<InvariantVerdict> out;

  {
    double worst = 0.0;
    std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-100.0, 100.0);
    for (int i = 0; i < 100; ++i) {
      const auto target = field(1, {8, 8});
      const double a = scale(rng), b = shift(rng);
      std::vector<double> d(target.size());
      for (std::size_t k = 0; k < d.size(); ++k) d[k] = a * target[k] + b;
      worst = std::max(worst, ssimse_loss(ChannelField(1, target.extent(), std::move(d)), target));
    }
    out.push_back(verdict("ssimse_scale_shift_invariance", worst, 1e-9));
  }
  {
    double worst = 0.0;
    std::normal_distribution<double> n(0.0, 3.0);
    for (int i = 0; i < 20; ++i) {
      const Extent e{7, 9};
      std::vector<double> av(4 * e.area());
      for (auto& x : av) x = n(rng) + 5.0;
      const ChannelField a(4, e, std::move(av));
      const auto cond = field(3, e);
      const SpadeParams p{Conv3x3::constant(4, 3, 1.0), Conv3x3::constant(4, 3, 0.0)};
      const auto out_field = spade_denorm(a, cond, p);
      const auto stats = kernels::channel_stats(4, e.area(), out_field.values());
      for (std::size_t c = 0; c < 4; ++c) {
        worst = std::max(worst, std::abs(stats.mean[c]));
        worst = std::max(worst, std::abs(stats.stddev[c] * stats.stddev[c] - 1.0));
      }
    }
    out.push_back(verdict("spade_identity_normalization", worst, 1e-9));
  }
  {
    std::size_t mismatches = 0;
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 100; ++i) {
      const Extent e{6, 5};
      const auto x = field(3, e);
      const auto painted = field(3, e);
      std::vector<double> mv(e.area());
      for (auto& v : mv) v = coin(rng) ? 1.0 : 0.0;
      const SoftMask m(e, mv);
      const auto y = composite_flood(x, painted, m);
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t p = 0; p < e.area(); ++p) {
          const std::size_t k = c * e.area() + p;
          const double expect = mv[p] == 1.0 ? painted[k] : x[k];
          mismatches += std::bit_cast<std::uint64_t>(y[k]) != std::bit_cast<std::uint64_t>(expect);
        }
      }
    }
    out.push_back(verdict("composite_flood_identity", static_cast<double>(mismatches), 0.0));
  }
  {
    double worst = 0.0;
    const Extent e{5, 5};
    std::uniform_int_distribution<std::size_t> cls(0, 8);
    std::vector<double> onehot(9 * e.area(), 0.0);
    for (std::size_t p = 0; p < e.area(); ++p) onehot[cls(rng) * e.area() + p] = 1.0;
    const auto zero_info = self_information(ChannelField(9, e, std::move(onehot)));
    for (double v : zero_info.values()) worst = std::max(worst, std::abs(v));
    const auto info = field(9, e);
    const auto fused = dada_fuse(info, ChannelField(1, e, 1.0));
    for (std::size_t i = 0; i < info.size(); ++i) worst = std::max(worst, std::abs(fused[i] - info[i]));
    out.push_back(verdict("self_information_and_dada_identities", worst, 0.0));
  }
  {
    double worst = tv_loss(SoftMask({6, 6}, std::vector<double>(36, 0.3)));
    std::vector<double> binary(36);
    for (std::size_t i = 0; i < binary.size(); ++i) binary[i] = static_cast<double>(i % 3 == 0);
    worst = std::max(worst, em_loss(SoftMask({6, 6}, binary)));
    out.push_back(verdict("tv_em_zero_cases", worst, 0.0));
  }
  return out;
}

}  // namespace detail

// Gradient checks for every kernel in `suite` plus the fixed invariant
// checks. The tolerance applies to the gradient checks only.
inline VerificationReport verify_kernels(const std::vector<KernelSpec>& suite, const VerifyOptions& opts = {}) {
  VerificationReport report;
  report.tolerance = opts.tolerance;
  for (const auto& spec : suite) report.kernels.push_back(verify_kernel(spec, opts));
  report.invariants = detail::check_invariants(opts.seed);
  return report;
}

}  // namespace floodbench
