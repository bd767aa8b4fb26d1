#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "floodbench/core/boundary.hpp"
#include "floodbench/core/raster.hpp"
#include "floodbench/metrics/distance_transform.hpp"

namespace floodbench {

// Fraction of the image that is a false negative (missed MUST pixel) or a
// false positive (flooded CANNOT pixel).
inline double error_rate(const BinaryMask& pred, const TernaryLabelMap& label) {
  const auto c = confusion_counts(pred, label);
  return static_cast<double>(c.fn + c.fp) / static_cast<double>(pred.size());
}

// F-beta with beta = 0.5 from raw counts. Missing when precision or recall
// is undefined; zero when both are defined but TP = 0.
inline std::optional<double> f05_from_counts(const ConfusionCounts& c) {
  if (c.tp + c.fp == 0 || c.tp + c.fn == 0) return std::nullopt;
  if (c.tp == 0) return 0.0;
  const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return 1.25 * precision * recall / (0.25 * precision + recall);
}

inline std::optional<double> f05_score(const BinaryMask& pred, const TernaryLabelMap& label) {
  return f05_from_counts(confusion_counts(pred, label));
}

// 1 − σ of the distances from each predicted-boundary pixel to the nearest
// MUST-boundary pixel, distances divided by the image height. σ is the
// population standard deviation. Missing when either boundary is empty.
inline std::optional<double> edge_coherence(const BinaryMask& pred, const TernaryLabelMap& label) {
  require_same_extent(pred.extent(), label.extent(), "edge_coherence");
  const auto predicted = sobel_boundary(pred);
  const auto reference = sobel_boundary(must_region(label));
  if (predicted.empty() || reference.empty()) return std::nullopt;

  const SquaredDistanceMap dist(reference);
  const double height = static_cast<double>(pred.height());
  const double n = static_cast<double>(predicted.size());
  double sum = 0.0;
  std::vector<double> deltas;
  deltas.reserve(predicted.size());
  for (const auto& p : predicted.pixels()) {
    const double d = std::sqrt(static_cast<double>(dist(p.row, p.col))) / height;
    deltas.push_back(d);
    sum += d;
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (double d : deltas) ss += (d - mean) * (d - mean);
  return 1.0 - std::sqrt(ss / n);
}

struct MetricRecord {
  std::string model_id;
  std::string image_id;
  double error = 0.0;
  std::optional<double> f05;
  std::optional<double> edge_coherence;

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

inline MetricRecord evaluate_image(const BinaryMask& pred, const TernaryLabelMap& label,
                                   std::string model_id = {}, std::string image_id = {}) {
  require_same_extent(pred.extent(), label.extent(), "evaluate_image");
  const auto counts = confusion_counts(pred, label);
  MetricRecord r;
  r.model_id = std::move(model_id);
  r.image_id = std::move(image_id);
  r.error = static_cast<double>(counts.fn + counts.fp) / static_cast<double>(pred.size());
  r.f05 = f05_from_counts(counts);
  r.edge_coherence = edge_coherence(pred, label);
  return r;
}

}  // namespace floodbench
