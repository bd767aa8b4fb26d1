#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "floodbench/bootstrap/study_config.hpp"
#include "floodbench/core/png_io.hpp"
#include "floodbench/harness/commands.hpp"
#include "floodbench/harness/manifest.hpp"
#include "floodbench/harness/synthetic.hpp"
#include "floodbench/harness/vote_store.hpp"
#include "test_util.hpp"

using namespace floodbench;
using namespace floodbench::harness;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// All-MUST 4×4 labels; prediction k of a model has `wrong[k]` background pixels.
void write_model(const fs::path& root, const std::string& id, std::initializer_list<int> wrong) {
  int k = 0;
  for (int w : wrong) {
    std::vector<std::uint8_t> px(16, 255);
    for (int i = 0; i < w; ++i) px[static_cast<std::size_t>(i)] = 0;
    write_png(root / id / ("img" + std::to_string(k++) + ".png"), PngImage{{4, 4}, 1, px});
  }
}

void write_labels(const fs::path& root, int n) {
  for (int k = 0; k < n; ++k) {
    write_png(root / "labels" / ("img" + std::to_string(k) + ".png"),
              PngImage{{4, 4}, 1, std::vector<std::uint8_t>(16, 2)});
  }
}

StudyManifest manifest_from(const fs::path& dir, const std::string& text) {
  write_file(dir / "manifest.json", text);
  return load_manifest(dir / "manifest.json");
}

}  // namespace

TEST(Manifest, ResolvesPathsRelativeToItsDirectory) {
  TempDir dir;
  const auto m = manifest_from(dir.path(), R"({
    "dataset": "data",
    "models": [{"model_id": "a", "pseudo": true, "depth": false, "seg": false, "spade": false,
                "dada_s": false, "dada_m": false},
               {"model_id": "b", "pseudo": false, "depth": false, "seg": false, "spade": false,
                "dada_s": false, "dada_m": false}],
    "baselines": ["base"],
    "bootstrap": {"n_resamples": 500, "seed": 9},
    "output": "results"})");
  EXPECT_EQ(m.label_dir(), dir / "data" / "labels");
  EXPECT_EQ(m.prediction_dir("a"), dir / "data" / "a");
  EXPECT_EQ(m.output, dir / "results");
  ASSERT_EQ(m.models.size(), 2u);
  EXPECT_TRUE(m.models[0].techniques.contains(Technique::Pseudo));
  EXPECT_EQ(m.baselines, std::vector<std::string>{"base"});
  EXPECT_EQ(m.bootstrap.n_resamples, 500u);
  EXPECT_EQ(m.bootstrap.seed, 9u);
  EXPECT_EQ(m.bootstrap.trim, 0.2);
  EXPECT_EQ(m.bootstrap.conf, 0.99);
}

TEST(Manifest, RejectsBadInput) {
  TempDir dir;
  EXPECT_THROW(manifest_from(dir.path(), "[1, 2]"), SchemaError);
  EXPECT_THROW(manifest_from(dir.path(), R"({"threshold": 2})"), SchemaError);
  EXPECT_THROW(manifest_from(dir.path(), R"({"baselines": ["a", "a"]})"), SchemaError);
  EXPECT_THROW(load_manifest(dir / "absent.json"), UsageError);
}

TEST(StudyConfig, CsvColumnsInAnyOrder) {
  std::istringstream in("dada_m,model_id,seg,depth,pseudo,spade,dada_s\n1,m1,x,,yes,0,false\n0,m2,0,1,0,0,0\n");
  const auto cfg = parse_study_csv(in);
  ASSERT_EQ(cfg.size(), 2u);
  EXPECT_EQ(cfg[0].model_id, "m1");
  EXPECT_EQ(cfg[0].techniques, (TechniqueSet{Technique::DadaM, Technique::Seg, Technique::Pseudo}));
  EXPECT_EQ(cfg[1].techniques, (TechniqueSet{Technique::Depth}));

  std::ostringstream out;
  write_study_csv(out, ablation_matrix());
  std::istringstream back(out.str());
  const auto round = parse_study_csv(back);
  const auto matrix = ablation_matrix();
  ASSERT_EQ(round.size(), matrix.size());
  for (std::size_t i = 0; i < round.size(); ++i) {
    EXPECT_EQ(round[i].model_id, matrix[i].model_id);
    EXPECT_EQ(round[i].techniques, matrix[i].techniques);
  }
}

TEST(StudyConfig, MissingFlagColumnIsSchemaError) {
  std::istringstream in("model_id,pseudo,depth,seg,spade,dada_s\nm1,1,0,0,0,0\n");
  try {
    parse_study_csv(in);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("dada_m"), std::string::npos) << e.what();
  }
  std::istringstream bad("model_id,pseudo,depth,seg,spade,dada_s,dada_m\nm1,maybe,0,0,0,0,0\n");
  EXPECT_THROW(parse_study_csv(bad), SchemaError);
  EXPECT_THROW(parse_study_json(nlohmann::json::parse(R"([{"model_id": "a", "pseudo": 1}])")), SchemaError);
}

class EvaluateFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    write_labels(dir.path(), 3);
    write_model(dir.path(), "a", {1, 2, 3});
    write_model(dir.path(), "b", {0, 4, 8});
    write_model(dir.path(), "base", {16, 16, 16});
  }
  StudyManifest manifest(const std::string& models, const std::string& baselines = "[]") {
    return manifest_from(dir.path(), R"({"dataset": ".", "models": )" + models + R"(, "baselines": )" + baselines +
                                         R"(, "bootstrap": {"n_resamples": 2000}})");
  }
  static std::string two_models() {
    return R"([{"model_id": "a", "pseudo": true, "depth": false, "seg": false, "spade": false, "dada_s": false,
                "dada_m": false},
               {"model_id": "b", "pseudo": false, "depth": false, "seg": false, "spade": false, "dada_s": false,
                "dada_m": false}])";
  }
  TempDir dir;
};

TEST_F(EvaluateFixture, WritesPerImageRowsAndMedians) {
  const auto out = cmd_evaluate(manifest(two_models()), {.threads = 2});
  ASSERT_EQ(out.records.size(), 6u);
  EXPECT_EQ(out.records[0].model_id, "a");
  EXPECT_EQ(out.records[0].image_id, "img0");
  EXPECT_DOUBLE_EQ(out.records[0].error, 1.0 / 16);
  const auto& models = out.summary.at("models");
  ASSERT_EQ(models.size(), 2u);
  EXPECT_DOUBLE_EQ(models[0]["metrics"]["error"]["median"].get<double>(), 2.0 / 16);
  EXPECT_DOUBLE_EQ(models[1]["metrics"]["error"]["median"].get<double>(), 4.0 / 16);
  EXPECT_EQ(models[1]["role"], "model");
  // All-MUST labels have no boundary, so edge coherence is missing everywhere.
  EXPECT_TRUE(models[0]["metrics"]["edge_coherence"]["median"].is_null());
  EXPECT_EQ(models[0]["metrics"]["edge_coherence"]["n_missing"], 3);

  std::ifstream csv(dir / "out" / "metrics.csv");
  EXPECT_EQ(read_metrics_csv(csv), out.records);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
}

TEST_F(EvaluateFixture, BaselinesAreEvaluatedButFlagged) {
  const auto out = cmd_evaluate(manifest(two_models(), R"(["base"])"), {.threads = 1});
  EXPECT_EQ(out.records.size(), 9u);
  EXPECT_EQ(out.summary["models"][2]["role"], "baseline");
  EXPECT_DOUBLE_EQ(out.summary["models"][2]["metrics"]["error"]["median"].get<double>(), 1.0);
  EXPECT_TRUE(out.summary["models"][2]["metrics"]["f05"]["median"].is_null());
}

TEST_F(EvaluateFixture, EmptyModelListIsUsageError) {
  EXPECT_THROW(cmd_evaluate(manifest("[]")), UsageError);
  EXPECT_THROW(cmd_ablate(manifest("[]")), UsageError);
}

TEST_F(EvaluateFixture, MissingModelDirectoryIsReported) {
  const auto m = manifest_from(dir.path(), R"({"dataset": ".", "models": [], "baselines": ["ghost", "b"]})");
  try {
    cmd_evaluate(m);
    FAIL() << "expected MissingPredictions";
  } catch (const MissingPredictions& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST_F(EvaluateFixture, AblateWithSinglePair) {
  // Edge coherence is undefined on every image, so only two metrics remain.
  const auto results = cmd_ablate(manifest(two_models()), {.seed = 1, .threads = 2});
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[1].metric, Metric::F05);
  EXPECT_EQ(results[0].technique, Technique::Pseudo);
  EXPECT_EQ(results[0].n_diffs, 3u);
  const auto csv = slurp(dir / "out" / "ablation.csv");
  EXPECT_EQ(csv.substr(0, kAblationCsvHeader.size()), kAblationCsvHeader);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "ablation.json"));
  EXPECT_EQ(j["settings"]["seed"], 1);
  EXPECT_EQ(j["results"].size(), 2u);
}

TEST(Ablate, OutputsAreByteIdenticalAcrossRunsAndThreads) {
  TempDir dir;
  SyntheticStudyOptions o;
  o.images = 12;
  o.extent = {24, 24};
  o.bootstrap.n_resamples = 3000;
  const auto study = write_synthetic_study(dir.path(), o);
  const auto m = load_manifest(study.manifest);
  std::string csv, json;
  for (unsigned threads : {1u, 4u, 1u}) {
    const auto out = dir / ("run" + std::to_string(threads));
    cmd_ablate(m, {.out = out, .threads = threads});
    const auto c = slurp(out / "ablation.csv"), j = slurp(out / "ablation.json");
    if (csv.empty()) {
      csv = c;
      json = j;
    }
    EXPECT_EQ(c, csv);
    EXPECT_EQ(j, json);
  }
  const auto other = dir / "seed7";
  cmd_ablate(m, {.seed = 7, .out = other, .threads = 2});
  EXPECT_NE(slurp(other / "ablation.csv"), csv);
}

TEST(Ablate, ReadsPrecomputedMetrics) {
  TempDir dir;
  std::vector<MetricRecord> records;
  for (int i = 0; i < 20; ++i) {
    records.push_back({"x", "i" + std::to_string(i), 0.2, 0.5, 0.9});
    records.push_back({"y", "i" + std::to_string(i), 0.25, 0.5, 0.9});
  }
  std::ostringstream csv;
  write_metrics_csv(csv, records);
  write_file(dir / "m.csv", csv.str());
  const auto m = manifest_from(dir.path(), R"({"metrics_csv": "m.csv", "bootstrap": {"n_resamples": 200},
    "models": [{"model_id": "x", "pseudo": false, "depth": false, "seg": true, "spade": false, "dada_s": false,
                "dada_m": false},
               {"model_id": "y", "pseudo": false, "depth": false, "seg": false, "spade": false, "dada_s": false,
                "dada_m": false}]})");
  const auto r = cmd_ablate(m);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].technique, Technique::Seg);
  EXPECT_NEAR(r[0].estimate, -0.05, 1e-15);
  EXPECT_TRUE(improves(r[0]));
  EXPECT_EQ(r[1].p, 1.0);
}

TEST(Verify, PrintsOneLinePerCheck) {
  std::ostringstream out;
  const auto report = cmd_verify(out, {1e-4, 2, 0, 2});
  EXPECT_TRUE(report.pass());
  const auto text = out.str();
  EXPECT_NE(text.find("PASS  grad_check tv"), std::string::npos);
  EXPECT_NE(text.find("PASS  grad_check spade_denorm"), std::string::npos);
  EXPECT_NE(text.find("verify: all checks passed"), std::string::npos);
}

namespace {

VoteRecord vote(std::string pair, std::string rater, Choice c, std::string nonce = {}) {
  return {std::move(pair), "A", "B", c, std::move(rater), "2026-01-01T00:00:00.000Z", std::move(nonce)};
}

}  // namespace

TEST(VoteLog, AppendAndReplay) {
  TempDir dir;
  const auto path = dir / "votes.jsonl";
  {
    VoteLog log(path);
    log.append(vote("p1", "r1", Choice::Left, "n1"));
    log.append(vote("p1", "r2", Choice::Right));
  }
  VoteLog again(path);
  ASSERT_EQ(again.records().size(), 2u);
  EXPECT_EQ(again.records()[0], vote("p1", "r1", Choice::Left, "n1"));
  EXPECT_EQ(again.records()[1].chosen_model(), "B");
  EXPECT_EQ(again.quarantined_bytes(), 0u);
}

TEST(VoteLog, TruncatedTailIsQuarantined) {
  TempDir dir;
  const auto path = dir / "votes.jsonl";
  {
    VoteLog log(path);
    log.append(vote("p1", "r1", Choice::Left));
  }
  const auto good = fs::file_size(path);
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"({"pair_id": "p1", "left_mo)";
  }
  VoteLog log(path);
  EXPECT_EQ(log.records().size(), 1u);
  EXPECT_GT(log.quarantined_bytes(), 0u);
  EXPECT_EQ(fs::file_size(path), good);
  auto q = path;
  q += ".quarantine";
  EXPECT_NE(slurp(q).find("left_mo"), std::string::npos);
  log.append(vote("p2", "r1", Choice::Right));
  VoteLog reread(path);
  EXPECT_EQ(reread.records().size(), 2u);
}

TEST(VoteLog, CorruptMiddleLineIsAnError) {
  TempDir dir;
  const auto path = dir / "votes.jsonl";
  write_file(path, "not json\n" + to_json(vote("p1", "r1", Choice::Left)).dump() + "\n");
  EXPECT_THROW(VoteLog{path}, SchemaError);
}
