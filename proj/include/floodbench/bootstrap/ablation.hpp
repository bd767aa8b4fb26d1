#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "floodbench/bootstrap/resample.hpp"
#include "floodbench/core/errors.hpp"
#include "floodbench/metrics/dataset.hpp"
#include "floodbench/util/log.hpp"

namespace floodbench {

enum class Technique : std::uint8_t { Pseudo, Depth, Seg, Spade, DadaS, DadaM };

inline constexpr std::array<Technique, 6> kAllTechniques = {Technique::Pseudo, Technique::Depth,
                                                            Technique::Seg,    Technique::Spade,
                                                            Technique::DadaS,  Technique::DadaM};

// Column names used in study tables (CSV headers and JSON keys).
inline std::string_view technique_key(Technique t) {
  switch (t) {
    case Technique::Pseudo: return "pseudo";
    case Technique::Depth: return "depth";
    case Technique::Seg: return "seg";
    case Technique::Spade: return "spade";
    case Technique::DadaS: return "dada_s";
    case Technique::DadaM: return "dada_m";
  }
  return "?";
}

inline std::optional<Technique> parse_technique(std::string_view key) {
  for (auto t : kAllTechniques) {
    if (technique_key(t) == key) return t;
  }
  return std::nullopt;
}

class TechniqueSet {
 public:
  constexpr TechniqueSet() = default;
  constexpr TechniqueSet(std::initializer_list<Technique> ts) {
    for (auto t : ts) bits_ |= bit(t);
  }

  constexpr bool contains(Technique t) const { return bits_ & bit(t); }
  constexpr TechniqueSet with(Technique t) const { return TechniqueSet(bits_ | bit(t)); }
  constexpr TechniqueSet without(Technique t) const { return TechniqueSet(bits_ & ~bit(t)); }
  constexpr std::uint8_t bits() const { return bits_; }

  friend constexpr bool operator==(TechniqueSet, TechniqueSet) = default;

 private:
  constexpr explicit TechniqueSet(std::uint8_t bits) : bits_(bits) {}
  static constexpr std::uint8_t bit(Technique t) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t)); }
  std::uint8_t bits_ = 0;
};

struct ModelConfig {
  std::string model_id;
  TechniqueSet techniques;
};

// The 18-model ablation matrix (model ids "1".."18").
inline std::vector<ModelConfig> ablation_matrix() {
  using T = Technique;
  const std::array<TechniqueSet, 9> with_pseudo_tail = {
      TechniqueSet{},
      TechniqueSet{T::Depth},
      TechniqueSet{T::Seg},
      TechniqueSet{T::Depth, T::Seg},
      TechniqueSet{T::Depth, T::Seg, T::Spade},
      TechniqueSet{T::Depth, T::Seg, T::DadaS},
      TechniqueSet{T::Depth, T::Seg, T::Spade, T::DadaS},
      TechniqueSet{T::Depth, T::Seg, T::DadaM},
      TechniqueSet{T::Depth, T::Seg, T::DadaS, T::DadaM},
  };
  std::vector<ModelConfig> out;
  for (std::size_t i = 0; i < 9; ++i) out.push_back({std::to_string(i + 1), with_pseudo_tail[i].with(T::Pseudo)});
  for (std::size_t i = 0; i < 9; ++i) out.push_back({std::to_string(i + 10), with_pseudo_tail[i]});
  return out;
}

inline void require_unique_ids(std::span<const ModelConfig> configs) {
  std::set<std::string> seen;
  for (const auto& c : configs) {
    if (!seen.insert(c.model_id).second) throw SchemaError("duplicate model id '" + c.model_id + "'");
  }
}

struct ModelPair {
  std::string with_id;
  std::string without_id;
  friend bool operator==(const ModelPair&, const ModelPair&) = default;
};

// Every (with, without) pair whose technique sets differ by exactly `t`,
// ordered by the position of the "with" model in `configs`.
inline std::vector<ModelPair> technique_pairs(std::span<const ModelConfig> configs, Technique t) {
  require_unique_ids(configs);
  std::vector<ModelPair> out;
  for (const auto& with : configs) {
    if (!with.techniques.contains(t)) continue;
    const auto target = with.techniques.without(t);
    for (const auto& without : configs) {
      if (without.techniques == target) out.push_back({with.model_id, without.model_id});
    }
  }
  return out;
}

struct PairedDifferences {
  std::vector<double> values;
  std::size_t n_images = 0;    // distinct images contributing at least one difference
  std::size_t n_excluded = 0;  // (pair, image) cells dropped for a missing value
};

// r(with)_i − r(without)_i for every pair and every image both models were
// scored on, skipping cells where either value is missing. Order: pairs as
// given, images by id.
inline PairedDifferences paired_differences(std::span<const MetricRecord> records, std::span<const ModelPair> pairs,
                                            Metric metric) {
  std::map<std::string, std::map<std::string, std::optional<double>>> by_model;
  for (const auto& r : records) by_model[r.model_id][r.image_id] = metric_value(r, metric);

  PairedDifferences out;
  std::set<std::string> images;
  for (const auto& p : pairs) {
    const auto with = by_model.find(p.with_id);
    const auto without = by_model.find(p.without_id);
    if (with == by_model.end() || without == by_model.end()) continue;
    for (const auto& [image, value] : with->second) {
      const auto other = without->second.find(image);
      if (other == without->second.end()) continue;
      if (!value || !other->second) {
        ++out.n_excluded;
        continue;
      }
      out.values.push_back(*value - *other->second);
      images.insert(image);
    }
  }
  if (out.values.empty()) {
    throw EmptyDataset("no image has a " + std::string(metric_name(metric)) + " value for both models of any pair");
  }
  out.n_images = images.size();
  return out;
}

struct BootstrapSettings {
  std::size_t n_resamples = 1'000'000;
  double trim = 0.2;
  double conf = 0.99;
  std::uint64_t seed = 0;
  unsigned threads = util::default_threads();
};

struct BootstrapResult {
  Technique technique = Technique::Pseudo;
  Metric metric = Metric::Error;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p = 1.0;
  std::size_t n_pairs = 0;
  std::size_t n_images = 0;
  std::size_t n_diffs = 0;
  std::size_t n_excluded = 0;
};

// Lower error is better; higher F05 and edge coherence are better.
inline bool improves(const BootstrapResult& r) {
  return r.metric == Metric::Error ? r.ci_high < 0.0 : r.ci_low > 0.0;
}

inline bool worsens(const BootstrapResult& r) {
  return r.metric == Metric::Error ? r.ci_low > 0.0 : r.ci_high < 0.0;
}

// Stream seed for one (technique, metric) test so every cell of the grid
// resamples independently and reproducibly.
inline std::uint64_t cell_seed(std::uint64_t seed, Technique t, Metric m) {
  return derive_seed(seed, 0x100u * (static_cast<unsigned>(t) + 1) + static_cast<unsigned>(m));
}

// One result per (technique, metric). Techniques with no differing pair in
// `configs`, and metrics with no defined difference, are omitted with a
// warning.
inline std::vector<BootstrapResult> ablation_study(std::span<const MetricRecord> records,
                                                   std::span<const ModelConfig> configs,
                                                   const BootstrapSettings& settings) {
  std::vector<BootstrapResult> out;
  for (auto t : kAllTechniques) {
    const auto pairs = technique_pairs(configs, t);
    if (pairs.empty()) {
      util::logger().warn("technique {} has no model pair differing only by it; omitted",
                          technique_key(t));
      continue;
    }
    for (auto m : kAllMetrics) {
      PairedDifferences diffs;
      try {
        diffs = paired_differences(records, pairs, m);
      } catch (const EmptyDataset& e) {
        util::logger().warn("technique {}: {}; omitted", technique_key(t), e.what());
        continue;
      }
      const auto iv = bootstrap_ci(diffs.values, settings.n_resamples, settings.trim, settings.conf,
                                   cell_seed(settings.seed, t, m), settings.threads);
      BootstrapResult r;
      r.technique = t;
      r.metric = m;
      r.estimate = iv.estimate;
      r.ci_low = iv.ci_low;
      r.ci_high = iv.ci_high;
      r.p = iv.p;
      r.n_pairs = pairs.size();
      r.n_images = diffs.n_images;
      r.n_diffs = diffs.values.size();
      r.n_excluded = diffs.n_excluded;
      out.push_back(r);
    }
  }
  return out;
}

struct Vote {
  std::string pair_id;
  bool chose_candidate = false;
};

struct PreferenceResult {
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_votes = 0;
};

// Share of votes for the candidate with a percentile bootstrap interval.
// Individual votes are the resampling unit.
inline PreferenceResult preference_ci(std::span<const Vote> votes, double conf, std::size_t n_resamples,
                                      std::uint64_t seed, unsigned threads = util::default_threads()) {
  if (votes.empty()) throw EmptyDataset("preference_ci: no votes");
  std::vector<double> xs(votes.size());
  for (std::size_t i = 0; i < votes.size(); ++i) xs[i] = votes[i].chose_candidate ? 1.0 : 0.0;
  const auto stat = CentralStatistic::trimmed_mean(0.0);
  const double rate = stat.evaluate(xs);
  const auto iv = percentile_interval(rate, bootstrap_distribution(xs, n_resamples, stat, seed, threads), conf);
  return {rate, iv.ci_low, iv.ci_high, votes.size()};
}

}  // namespace floodbench
