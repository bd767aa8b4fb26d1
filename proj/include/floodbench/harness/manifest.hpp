#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "floodbench/bootstrap/ablation.hpp"
#include "floodbench/bootstrap/study_config.hpp"
#include "floodbench/core/errors.hpp"

namespace floodbench::harness {

namespace fs = std::filesystem;

// Everything a CLI run needs. Relative paths in the JSON file are resolved
// against the manifest's directory.
//
//   {
//     "dataset": "data",                 // <dataset>/labels/<id>.png, <dataset>/<model>/<id>.png
//     "labels": "data/labels",           // optional override
//     "metrics_csv": "metrics.csv",      // optional: ablate from precomputed metrics
//     "models": [ {"model_id": "1", "pseudo": true, ...} ] | "study.csv",
//     "baselines": ["G", "I"],           // evaluated but never paired
//     "threshold": 0.5,
//     "bootstrap": {"n_resamples": 1000000, "trim": 0.2, "conf": 0.99, "seed": 0},
//     "output": "out"
//   }
struct StudyManifest {
  fs::path source;
  std::optional<fs::path> dataset;
  std::optional<fs::path> labels;
  std::optional<fs::path> metrics_csv;
  std::vector<ModelConfig> models;
  std::vector<std::string> baselines;
  double threshold = 0.5;
  BootstrapSettings bootstrap;
  fs::path output = "out";

  fs::path label_dir() const {
    if (labels) return *labels;
    if (dataset) return *dataset / "labels";
    throw SchemaError("manifest: neither 'dataset' nor 'labels' is set");
  }
  fs::path prediction_dir(const std::string& model_id) const {
    if (!dataset) throw SchemaError("manifest: 'dataset' is required to locate predictions");
    return *dataset / model_id;
  }
};

namespace detail {

template <typename T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("manifest: field '") + key + "' has the wrong type");
  }
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

inline StudyManifest parse_manifest(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw SchemaError("manifest: expected a JSON object");
  StudyManifest m;
  if (j.contains("dataset")) m.dataset = detail::resolve(base_dir, detail::field_or<std::string>(j, "dataset", ""));
  if (j.contains("labels")) m.labels = detail::resolve(base_dir, detail::field_or<std::string>(j, "labels", ""));
  if (j.contains("metrics_csv")) {
    m.metrics_csv = detail::resolve(base_dir, detail::field_or<std::string>(j, "metrics_csv", ""));
  }
  if (j.contains("models")) {
    const auto& models = j.at("models");
    if (models.is_string()) {
      m.models = load_study_config(detail::resolve(base_dir, models.get<std::string>()));
    } else {
      m.models = parse_study_json(models);
    }
  }
  m.baselines = detail::field_or<std::vector<std::string>>(j, "baselines", {});
  for (const auto& b : m.baselines) floodbench::detail::require_model_id(b, "manifest baseline");
  {
    std::vector<ModelConfig> all = m.models;
    for (const auto& b : m.baselines) all.push_back({b, {}});
    require_unique_ids(all);
  }
  m.threshold = detail::field_or<double>(j, "threshold", 0.5);
  if (!(m.threshold >= 0.0 && m.threshold <= 1.0)) throw SchemaError("manifest: threshold must lie in [0,1]");
  if (j.contains("bootstrap")) {
    const auto& b = j.at("bootstrap");
    if (!b.is_object()) throw SchemaError("manifest: 'bootstrap' must be an object");
    m.bootstrap.n_resamples = detail::field_or<std::size_t>(b, "n_resamples", m.bootstrap.n_resamples);
    m.bootstrap.trim = detail::field_or<double>(b, "trim", m.bootstrap.trim);
    m.bootstrap.conf = detail::field_or<double>(b, "conf", m.bootstrap.conf);
    m.bootstrap.seed = detail::field_or<std::uint64_t>(b, "seed", m.bootstrap.seed);
  }
  m.output = detail::resolve(base_dir, detail::field_or<std::string>(j, "output", "out"));
  return m;
}

inline StudyManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  auto m = parse_manifest(j, path.parent_path());
  m.source = path;
  return m;
}

}  // namespace floodbench::harness
