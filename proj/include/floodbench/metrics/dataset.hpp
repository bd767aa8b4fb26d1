#pragma once

#include <algorithm>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "floodbench/core/errors.hpp"
#include "floodbench/core/png_io.hpp"
#include "floodbench/metrics/metrics.hpp"
#include "floodbench/util/format.hpp"
#include "floodbench/util/log.hpp"
#include "floodbench/util/parallel.hpp"

namespace floodbench {

enum class Metric { Error, F05, EdgeCoherence };

inline constexpr Metric kAllMetrics[] = {Metric::Error, Metric::F05, Metric::EdgeCoherence};

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::Error:
      return "error";
    case Metric::F05:
      return "f05";
    case Metric::EdgeCoherence:
      return "edge_coherence";
  }
  return "?";
}

inline std::optional<double> metric_value(const MetricRecord& r, Metric m) {
  switch (m) {
    case Metric::Error:
      return r.error;
    case Metric::F05:
      return r.f05;
    case Metric::EdgeCoherence:
      return r.edge_coherence;
  }
  return std::nullopt;
}

// Sorted stems of the *.png files directly inside `dir`.
inline std::vector<std::string> list_image_ids(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw EmptyDataset("not a directory: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct EvaluateOptions {
  double threshold = 0.5;
  unsigned threads = util::default_threads();
};

struct DatasetProblems {
  std::vector<std::string> missing;     // labeled image ids with no prediction
  std::vector<std::string> mismatched;  // "<id>: <pred shape> vs <label shape>"
  std::vector<std::string> unreadable;  // "<id>: <reason>"

  bool empty() const { return missing.empty() && mismatched.empty() && unreadable.empty(); }
};

inline std::string join(const std::vector<std::string>& xs, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

// Checks presence and header shapes of every prediction against its label
// without computing any metric.
inline DatasetProblems validate_dataset(const std::filesystem::path& pred_dir,
                                        const std::filesystem::path& label_dir) {
  DatasetProblems problems;
  const auto ids = list_image_ids(label_dir);
  for (const auto& id : ids) {
    const auto pred_path = pred_dir / (id + ".png");
    if (!std::filesystem::exists(pred_path)) {
      problems.missing.push_back(id);
      continue;
    }
    try {
      const auto pred = read_png(pred_path);
      const auto label = read_png(label_dir / (id + ".png"));
      if (!(pred.extent == label.extent)) {
        problems.mismatched.push_back(id + ": " + to_string(pred.extent) + " vs " + to_string(label.extent));
      }
    } catch (const Error& e) {
      problems.unreadable.push_back(id + ": " + e.what());
    }
  }
  return problems;
}

inline void throw_if_problems(const DatasetProblems& p, const std::string& context) {
  if (!p.missing.empty()) {
    throw MissingPredictions(context + ": missing predictions for " + join(p.missing));
  }
  if (!p.mismatched.empty()) throw ShapeMismatch(context + ": shape mismatch for " + join(p.mismatched));
  if (!p.unreadable.empty()) throw DecodeError(context + ": unreadable files " + join(p.unreadable, "; "));
}

// One record per labeled image, ordered by image id. Predictions are
// `<pred_dir>/<image_id>.png`, labels `<label_dir>/<image_id>.png`.
inline std::vector<MetricRecord> evaluate_dataset(const std::filesystem::path& pred_dir,
                                                  const std::filesystem::path& label_dir,
                                                  const std::string& model_id = {},
                                                  const EvaluateOptions& opts = {}) {
  throw_if_problems(validate_dataset(pred_dir, label_dir), model_id.empty() ? pred_dir.string() : model_id);
  const auto ids = list_image_ids(label_dir);
  for (const auto& entry : std::filesystem::directory_iterator(pred_dir)) {
    if (entry.path().extension() == ".png" &&
        !std::binary_search(ids.begin(), ids.end(), entry.path().stem().string())) {
      util::logger().warn("{}: prediction {} has no label, ignored", model_id, entry.path().filename().string());
    }
  }
  std::vector<MetricRecord> records(ids.size());
  util::parallel_chunks(ids.size(), 1, opts.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto pred = load_mask(pred_dir / (ids[i] + ".png"), opts.threshold);
      const auto label = load_label_map(label_dir / (ids[i] + ".png"));
      records[i] = evaluate_image(pred.binary, label, model_id, ids[i]);
    }
  });
  return records;
}

inline constexpr std::string_view kMetricsCsvHeader = "model_id,image_id,error,f05,edge_coherence";

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricRecord>& records) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.model_id << ',' << r.image_id << ',' << util::format_double(r.error) << ','
        << util::format_optional(r.f05) << ',' << util::format_optional(r.edge_coherence) << '\n';
  }
}

inline std::vector<MetricRecord> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("metrics csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsCsvHeader) {
    throw SchemaError("metrics csv: expected header '" + std::string(kMetricsCsvHeader) + "', got '" + line + "'");
  }
  std::vector<MetricRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = util::split_csv_line(line);
    if (f.size() != 5) throw SchemaError("metrics csv line " + std::to_string(lineno) + ": expected 5 fields");
    try {
      MetricRecord r;
      r.model_id = f[0];
      r.image_id = f[1];
      const auto err = util::parse_double(f[2]);
      if (!err) throw SchemaError("metrics csv line " + std::to_string(lineno) + ": error is required");
      r.error = *err;
      r.f05 = util::parse_double(f[3]);
      r.edge_coherence = util::parse_double(f[4]);
      out.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw SchemaError("metrics csv line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace floodbench
