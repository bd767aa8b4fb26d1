#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "floodbench/core/errors.hpp"
#include "floodbench/util/parallel.hpp"

namespace floodbench {

// Number of values removed from each tail when trimming a sample of n.
inline std::size_t trim_count(std::size_t n, double trim) {
  if (!(trim >= 0.0 && trim < 0.5)) throw InvalidValue("trim proportion must lie in [0, 0.5)");
  return static_cast<std::size_t>(std::floor(trim * static_cast<double>(n) + 1e-9));
}

// Mean of the sorted values left after dropping ⌊trim·n⌋ from each tail.
inline double trimmed_mean(std::span<const double> xs, double trim) {
  const std::size_t k = trim_count(xs.size(), trim);
  if (xs.size() <= 2 * k) throw EmptyDataset("trimmed_mean: nothing left after trimming");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (std::size_t i = k; i < v.size() - k; ++i) sum += v[i];
  return sum / static_cast<double>(v.size() - 2 * k);
}

// A location statistic that is the mean of a contiguous run of order
// statistics: the trimmed mean, or the median (one or two central values).
class CentralStatistic {
 public:
  static CentralStatistic trimmed_mean(double trim) {
    trim_count(1, trim);
    return CentralStatistic(false, trim);
  }
  static CentralStatistic median() { return CentralStatistic(true, 0.0); }

  // Sorted positions [lo, hi) averaged for a sample of size n.
  std::pair<std::size_t, std::size_t> positions(std::size_t n) const {
    if (n == 0) throw EmptyDataset("statistic of an empty sample");
    if (median_) return n % 2 ? std::pair{n / 2, n / 2 + 1} : std::pair{n / 2 - 1, n / 2 + 1};
    const std::size_t k = trim_count(n, trim_);
    if (n <= 2 * k) throw EmptyDataset("nothing left after trimming");
    return {k, n - k};
  }

  double evaluate(std::span<const double> xs) const {
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    const auto [lo, hi] = positions(v.size());
    if (v.front() == v.back()) return v.front();
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += v[i];
    return sum / static_cast<double>(hi - lo);
  }

 private:
  CentralStatistic(bool median, double trim) : median_(median), trim_(trim) {}
  bool median_;
  double trim_;
};

namespace detail {

// SplitMix64 finaliser; mixes (seed, stream) into an engine seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Unbiased draw in [0, n) from a 32-bit word (Lemire's multiply-shift with
// rejection). `next` yields fresh 32-bit words.
template <typename Next>
inline std::uint32_t bounded(std::uint32_t n, std::uint32_t word, Next&& next) {
  std::uint64_t m = static_cast<std::uint64_t>(word) * n;
  auto low = static_cast<std::uint32_t>(m);
  if (low < n) {
    const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
    while (low < threshold) {
      m = static_cast<std::uint64_t>(next()) * n;
      low = static_cast<std::uint32_t>(m);
    }
  }
  return static_cast<std::uint32_t>(m >> 32);
}

}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return detail::mix64(detail::mix64(seed) ^ detail::mix64(stream + 0x632be59bd9b4e019ull));
}

// Resamples handled by one random stream. Stream b covers resamples
// [b·kResamplesPerStream, (b+1)·kResamplesPerStream) and is seeded from
// (seed, b) alone, so the output never depends on how blocks are spread over
// threads.
inline constexpr std::size_t kResamplesPerStream = 256;

// Bootstrap distribution of `stat`: entry r is the statistic of the r-th
// resample (with replacement, same size as `data`).
inline std::vector<double> bootstrap_distribution(std::span<const double> data, std::size_t n_resamples,
                                                  const CentralStatistic& stat, std::uint64_t seed,
                                                  unsigned threads = util::default_threads()) {
  if (data.empty()) throw EmptyDataset("bootstrap of an empty sample");
  if (n_resamples == 0) throw InvalidValue("bootstrap needs at least one resample");
  if (data.size() > 0xffffffffu) throw InvalidValue("bootstrap sample too large");

  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<std::uint32_t>(sorted.size());
  const auto [lo, hi] = stat.positions(sorted.size());
  const double inv_width = 1.0 / static_cast<double>(hi - lo);

  std::vector<double> out(n_resamples);
  if (sorted.front() == sorted.back()) {
    std::fill(out.begin(), out.end(), sorted.front());
    return out;
  }
  util::parallel_chunks(n_resamples, kResamplesPerStream, threads,
                        [&](std::size_t block, std::size_t begin, std::size_t end) {
    std::mt19937_64 engine(derive_seed(seed, block));
    auto fresh32 = [&engine]() { return static_cast<std::uint32_t>(engine() >> 32); };
    std::vector<std::uint32_t> counts(n);
    const std::size_t drop_high = n - hi;
    for (std::size_t r = begin; r < end; ++r) {
      std::fill(counts.begin(), counts.end(), 0u);
      // Two indices per 64-bit word, four independent partial sums.
      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      std::uint32_t i = 0;
      for (; i + 4 <= n; i += 4) {
        const std::uint64_t w0 = engine(), w1 = engine();
        const std::uint32_t i0 = detail::bounded(n, static_cast<std::uint32_t>(w0), fresh32);
        const std::uint32_t i1 = detail::bounded(n, static_cast<std::uint32_t>(w0 >> 32), fresh32);
        const std::uint32_t i2 = detail::bounded(n, static_cast<std::uint32_t>(w1), fresh32);
        const std::uint32_t i3 = detail::bounded(n, static_cast<std::uint32_t>(w1 >> 32), fresh32);
        ++counts[i0];
        ++counts[i1];
        ++counts[i2];
        ++counts[i3];
        acc[0] += sorted[i0];
        acc[1] += sorted[i1];
        acc[2] += sorted[i2];
        acc[3] += sorted[i3];
      }
      for (; i < n; ++i) {
        const std::uint32_t idx = detail::bounded(n, fresh32(), fresh32);
        ++counts[idx];
        acc[i & 3] += sorted[idx];
      }
      const double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
      // The resample, in sorted order, is counts[i] copies of sorted[i].
      // Remove its `lo` smallest and `n - hi` largest entries from the total.
      double low = 0.0;
      for (std::size_t i = 0, left = lo; left > 0; ++i) {
        const std::size_t take = std::min<std::size_t>(counts[i], left);
        low += static_cast<double>(take) * sorted[i];
        left -= take;
      }
      double high = 0.0;
      for (std::size_t i = n, left = drop_high; left > 0;) {
        --i;
        const std::size_t take = std::min<std::size_t>(counts[i], left);
        high += static_cast<double>(take) * sorted[i];
        left -= take;
      }
      out[r] = (total - low - high) * inv_width;
    }
  });
  return out;
}

// Nearest-rank quantile of an ascending-sorted sample.
inline double nearest_rank_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw EmptyDataset("quantile of an empty sample");
  const double rank = std::ceil(q * static_cast<double>(sorted.size()) - 1e-9);
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(sorted.size()))) - 1;
  return sorted[idx];
}

struct Interval {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p = 1.0;
};

// Percentile interval and two-sided tail p-value from a bootstrap
// distribution (consumed; it is sorted in place).
inline Interval percentile_interval(double estimate, std::vector<double> boot, double conf) {
  if (!(conf > 0.0 && conf < 1.0)) throw InvalidValue("confidence level must lie in (0, 1)");
  std::sort(boot.begin(), boot.end());
  const double alpha = (1.0 - conf) / 2.0;
  Interval iv;
  iv.estimate = estimate;
  iv.ci_low = nearest_rank_quantile(boot, alpha);
  iv.ci_high = nearest_rank_quantile(boot, 1.0 - alpha);
  const auto nonpos = static_cast<double>(std::upper_bound(boot.begin(), boot.end(), 0.0) - boot.begin());
  const auto nonneg = static_cast<double>(boot.end() - std::lower_bound(boot.begin(), boot.end(), 0.0));
  const double total = static_cast<double>(boot.size());
  iv.p = std::min(1.0, 2.0 * std::min(nonpos, nonneg) / total);
  return iv;
}

// Percentile bootstrap of the trimmed mean of `diffs`.
inline Interval bootstrap_ci(std::span<const double> diffs, std::size_t n_resamples, double trim, double conf,
                             std::uint64_t seed, unsigned threads = util::default_threads()) {
  if (diffs.empty()) throw EmptyDataset("bootstrap_ci: no differences");
  const auto stat = CentralStatistic::trimmed_mean(trim);
  return percentile_interval(stat.evaluate(diffs), bootstrap_distribution(diffs, n_resamples, stat, seed, threads),
                             conf);
}

}  // namespace floodbench
