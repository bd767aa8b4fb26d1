#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "floodbench/bootstrap/ablation.hpp"
#include "floodbench/harness/manifest.hpp"
#include "floodbench/losses/verify.hpp"
#include "floodbench/metrics/dataset.hpp"
#include "floodbench/util/format.hpp"
#include "floodbench/util/log.hpp"

namespace floodbench::harness {

// Command-line overrides of manifest settings.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> resamples;
  std::optional<fs::path> out;
  unsigned threads = util::default_threads();
};

inline BootstrapSettings effective_settings(const StudyManifest& m, const RunOptions& o) {
  BootstrapSettings s = m.bootstrap;
  if (o.seed) s.seed = *o.seed;
  if (o.resamples) s.n_resamples = *o.resamples;
  s.threads = o.threads;
  return s;
}

inline fs::path effective_output(const StudyManifest& m, const RunOptions& o) { return o.out ? *o.out : m.output; }

inline void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << bytes;
  if (!out.flush()) throw Error("write failed for " + path.string());
}

inline nlohmann::json settings_json(const BootstrapSettings& s) {
  return {{"n_resamples", s.n_resamples},
          {"trim", s.trim},
          {"conf", s.conf},
          {"seed", s.seed},
          {"quantile_method", "nearest-rank"},
          {"p_value", "2*min(frac<=0, frac>=0), clamped to 1"}};
}

// Evaluates every id against the label directory. All models are validated
// before any metric is computed and every offender is reported at once.
inline std::vector<MetricRecord> evaluate_models(const StudyManifest& m, const std::vector<std::string>& ids,
                                                 unsigned threads) {
  const auto labels = m.label_dir();
  if (!fs::is_directory(labels)) throw EmptyDataset("label directory " + labels.string() + " does not exist");
  std::vector<std::string> offenders;
  for (const auto& id : ids) {
    const auto dir = m.prediction_dir(id);
    if (!fs::is_directory(dir)) {
      offenders.push_back(id + ": no prediction directory " + dir.string());
      continue;
    }
    const auto p = validate_dataset(dir, labels);
    if (!p.missing.empty()) offenders.push_back(id + ": missing " + join(p.missing));
    if (!p.mismatched.empty()) offenders.push_back(id + ": shape mismatch " + join(p.mismatched));
    if (!p.unreadable.empty()) offenders.push_back(id + ": unreadable " + join(p.unreadable, "; "));
  }
  if (!offenders.empty()) throw MissingPredictions("dataset validation failed: " + join(offenders, " | "));

  std::vector<MetricRecord> all;
  for (const auto& id : ids) {
    auto records = evaluate_dataset(m.prediction_dir(id), labels, id, {m.threshold, threads});
    all.insert(all.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
  }
  return all;
}

struct EvaluateOutput {
  std::vector<MetricRecord> records;
  nlohmann::json summary;
};

// Per-image metrics for every model and baseline, plus the median of each
// metric with a percentile bootstrap interval.
inline EvaluateOutput cmd_evaluate(const StudyManifest& m, const RunOptions& o = {}) {
  std::vector<std::string> ids;
  for (const auto& c : m.models) ids.push_back(c.model_id);
  ids.insert(ids.end(), m.baselines.begin(), m.baselines.end());
  if (ids.empty()) throw UsageError("evaluate: the manifest lists no models or baselines");

  const auto settings = effective_settings(m, o);
  EvaluateOutput out;
  out.records = evaluate_models(m, ids, o.threads);

  nlohmann::json models = nlohmann::json::array();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const bool baseline = k >= m.models.size();
    nlohmann::json metrics = nlohmann::json::object();
    for (auto metric : kAllMetrics) {
      std::vector<double> xs;
      std::size_t missing = 0;
      for (const auto& r : out.records) {
        if (r.model_id != ids[k]) continue;
        if (const auto v = metric_value(r, metric)) xs.push_back(*v);
        else ++missing;
      }
      nlohmann::json entry{{"n", xs.size()}, {"n_missing", missing}};
      if (xs.empty()) {
        entry["median"] = nullptr;
        entry["ci_low"] = nullptr;
        entry["ci_high"] = nullptr;
      } else {
        const auto stat = CentralStatistic::median();
        const double med = stat.evaluate(xs);
        const std::uint64_t seed = derive_seed(settings.seed, 0x10000u + 4 * k + static_cast<unsigned>(metric));
        const auto iv = percentile_interval(
            med, bootstrap_distribution(xs, settings.n_resamples, stat, seed, settings.threads), settings.conf);
        entry["median"] = med;
        entry["ci_low"] = iv.ci_low;
        entry["ci_high"] = iv.ci_high;
      }
      metrics[std::string(metric_name(metric))] = std::move(entry);
    }
    models.push_back({{"model_id", ids[k]}, {"role", baseline ? "baseline" : "model"}, {"metrics", std::move(metrics)}});
  }
  auto s = settings_json(settings);
  s.erase("trim");
  s.erase("p_value");
  s["statistic"] = "median";
  s["threshold"] = m.threshold;
  out.summary = {{"settings", std::move(s)}, {"models", std::move(models)}};

  const auto dir = effective_output(m, o);
  std::ostringstream csv;
  write_metrics_csv(csv, out.records);
  write_file(dir / "metrics.csv", csv.str());
  write_file(dir / "summary.json", out.summary.dump(2) + "\n");
  util::logger().info("evaluate: {} records written to {}", out.records.size(), dir.string());
  return out;
}

inline constexpr std::string_view kAblationCsvHeader = "technique,metric,estimate,ci_low,ci_high,p";

inline std::string ablation_csv(const std::vector<BootstrapResult>& results) {
  std::ostringstream out;
  out << kAblationCsvHeader << '\n';
  for (const auto& r : results) {
    out << technique_key(r.technique) << ',' << metric_name(r.metric) << ',' << util::format_double(r.estimate)
        << ',' << util::format_double(r.ci_low) << ',' << util::format_double(r.ci_high) << ','
        << util::format_double(r.p) << '\n';
  }
  return out.str();
}

inline nlohmann::json ablation_json(const std::vector<BootstrapResult>& results, const BootstrapSettings& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : results) {
    rows.push_back({{"technique", technique_key(r.technique)},
                    {"metric", metric_name(r.metric)},
                    {"estimate", r.estimate},
                    {"ci_low", r.ci_low},
                    {"ci_high", r.ci_high},
                    {"p", r.p},
                    {"n_pairs", r.n_pairs},
                    {"n_images", r.n_images},
                    {"n_diffs", r.n_diffs},
                    {"n_excluded", r.n_excluded},
                    {"improved", improves(r)},
                    {"worsened", worsens(r)}});
  }
  auto settings = settings_json(s);
  settings["difference"] = "metric(with technique) - metric(without technique), per image";
  return {{"settings", std::move(settings)}, {"results", std::move(rows)}};
}

// Metrics come from `metrics_csv` when the manifest names one, otherwise the
// model predictions are evaluated first. Baselines never enter the pairing.
inline std::vector<BootstrapResult> cmd_ablate(const StudyManifest& m, const RunOptions& o = {}) {
  if (m.models.empty()) throw UsageError("ablate: the manifest lists no models");
  std::vector<MetricRecord> records;
  if (m.metrics_csv) {
    std::ifstream in(*m.metrics_csv, std::ios::binary);
    if (!in) throw EmptyDataset("cannot open metrics csv " + m.metrics_csv->string());
    records = read_metrics_csv(in);
  } else {
    std::vector<std::string> ids;
    for (const auto& c : m.models) ids.push_back(c.model_id);
    records = evaluate_models(m, ids, o.threads);
  }
  const auto settings = effective_settings(m, o);
  const auto results = ablation_study(records, m.models, settings);

  const auto dir = effective_output(m, o);
  write_file(dir / "ablation.csv", ablation_csv(results));
  write_file(dir / "ablation.json", ablation_json(results, settings).dump(2) + "\n");
  util::logger().info("ablate: {} results written to {}", results.size(), dir.string());
  return results;
}

inline void print_report(std::ostream& out, const VerificationReport& r) {
  for (const auto& k : r.kernels) {
    out << (k.pass ? "PASS" : "FAIL") << "  grad_check " << k.name << "  max_rel_dev=" << k.max_relative_deviation
        << "  tol=" << r.tolerance << "  instances=" << k.instances << '\n';
  }
  for (const auto& i : r.invariants) {
    out << (i.pass ? "PASS" : "FAIL") << "  invariant " << i.name << "  max_err=" << i.max_error
        << "  tol=" << i.tolerance << '\n';
  }
  const auto failed = r.failures();
  if (failed.empty()) {
    out << "verify: all checks passed\n";
  } else {
    out << "verify: " << failed.size() << " failed: " << join(failed) << '\n';
  }
}

// Runs the gradient and invariant checks and prints one line per check.
inline VerificationReport cmd_verify(std::ostream& out, const VerifyOptions& opts = {},
                                     const std::vector<KernelSpec>& suite = default_kernel_suite()) {
  const auto report = verify_kernels(suite, opts);
  print_report(out, report);
  return report;
}

}  // namespace floodbench::harness
