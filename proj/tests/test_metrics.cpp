#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "floodbench/core/png_io.hpp"
#include "floodbench/metrics/dataset.hpp"
#include "floodbench/metrics/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace floodbench;

namespace {

TernaryLabelMap horizontal_front(Extent e, std::size_t first_must_row) {
  std::vector<std::uint8_t> codes(e.area(), 0);
  for (std::size_t r = first_must_row; r < e.height; ++r)
    for (std::size_t c = 0; c < e.width; ++c) codes[r * e.width + c] = 2;
  return TernaryLabelMap::from_codes(e, codes);
}

BinaryMask rows_from(Extent e, std::size_t first_row) {
  std::vector<std::uint8_t> px(e.area(), 0);
  for (std::size_t r = first_row; r < e.height; ++r)
    for (std::size_t c = 0; c < e.width; ++c) px[r * e.width + c] = 1;
  return BinaryMask(e, px);
}

}  // namespace

TEST(ErrorRate, Examples) {
  const auto label = horizontal_front({6, 5}, 3);
  EXPECT_EQ(error_rate(must_region(label), label), 0.0);

  // 4×4: 6 MUST, 4 CANNOT, 6 MAY; one FP and two FN.
  const auto grid = TernaryLabelMap::from_codes({4, 4}, std::vector<std::uint8_t>{2, 2, 2, 2, 2, 2, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1});
  const BinaryMask pred({4, 4}, {1, 1, 1, 1, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1});
  EXPECT_DOUBLE_EQ(error_rate(pred, grid), 0.1875);

  const auto cannot = TernaryLabelMap::from_codes({3, 3}, std::vector<std::uint8_t>(9, 0));
  EXPECT_EQ(error_rate(BinaryMask({3, 3}, std::vector<std::uint8_t>(9, 1)), cannot), 1.0);
}

TEST(ErrorRate, EachExtraWrongPixelAddsOneOverArea) {
  std::mt19937_64 rng(7);
  const auto [pred, label] = oracle::random_pair(rng, {10, 13});
  std::vector<std::uint8_t> px(pred.values().begin(), pred.values().end());
  double prev = error_rate(pred, label);
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (label[i] == Label::May) continue;
    const bool correct = (px[i] == 1) == (label[i] == Label::Must);
    if (!correct) continue;
    px[i] ^= 1;
    const double now = error_rate(BinaryMask(pred.extent(), px), label);
    EXPECT_NEAR(now - prev, 1.0 / 130.0, 1e-15);
    prev = now;
  }
}

TEST(F05, Examples) {
  EXPECT_DOUBLE_EQ(*f05_from_counts({3, 1, 2, 0}), 0.5625 / 0.7875);
  EXPECT_NEAR(*f05_from_counts({3, 1, 2, 0}), 0.714285714285714, 1e-12);
  const auto label = horizontal_front({5, 5}, 2);
  EXPECT_DOUBLE_EQ(*f05_score(must_region(label), label), 1.0);
  EXPECT_FALSE(f05_score(BinaryMask({5, 5}, std::vector<std::uint8_t>(25, 0)), label).has_value());
  // Precision and recall both defined but no hit.
  EXPECT_EQ(*f05_from_counts({0, 2, 3, 0}), 0.0);
}

TEST(EdgeCoherence, IdenticalAndParallelFronts) {
  const Extent e{16, 12};
  const auto label = horizontal_front(e, 8);
  EXPECT_EQ(*edge_coherence(must_region(label), label), 1.0);
  // Sobel marks two rows per front: rows 4,5 against 7,8 give distances 3 and 2.
  EXPECT_DOUBLE_EQ(*edge_coherence(rows_from(e, 5), label), 1.0 - 0.5 / 16.0);
  EXPECT_FALSE(edge_coherence(BinaryMask(e, std::vector<std::uint8_t>(e.area(), 0)), label).has_value());
  const auto all_cannot = TernaryLabelMap::from_codes(e, std::vector<std::uint8_t>(e.area(), 0));
  EXPECT_FALSE(edge_coherence(rows_from(e, 5), all_cannot).has_value());
}

TEST(EdgeCoherence, NormalisedByHeightOnNonSquareImages) {
  // Predicted boundary: a vertical front (distances vary along it).
  const Extent e{10, 30};
  const auto label = horizontal_front(e, 5);
  std::vector<std::uint8_t> px(e.area(), 0);
  for (std::size_t r = 0; r < e.height; ++r)
    for (std::size_t c = 10; c < e.width; ++c) px[r * e.width + c] = 1;
  const BinaryMask pred(e, px);
  EXPECT_NEAR(*edge_coherence(pred, label), *oracle::edge_coherence(pred, label), 1e-12);
  EXPECT_LT(*edge_coherence(pred, label), 1.0);
}

TEST(EdgeCoherence, TranslationInvariant) {
  const Extent e{24, 24};
  std::vector<std::uint8_t> codes(e.area(), 0), px(e.area(), 0);
  auto place = [&](std::size_t dr, std::size_t dc) {
    std::fill(codes.begin(), codes.end(), 0);
    std::fill(px.begin(), px.end(), 0);
    for (std::size_t r = 6; r < 12; ++r)
      for (std::size_t c = 5; c < 13; ++c) codes[(r + dr) * e.width + c + dc] = 2;
    for (std::size_t r = 7; r < 14; ++r)
      for (std::size_t c = 4; c < 10; ++c) px[(r + dr) * e.width + c + dc] = 1;
    return *edge_coherence(BinaryMask(e, px), TernaryLabelMap::from_codes(e, codes));
  };
  const double base = place(0, 0);
  EXPECT_LT(base, 1.0);
  EXPECT_NEAR(place(3, 5), base, 1e-15);
  EXPECT_NEAR(place(7, 2), base, 1e-15);
}

TEST(Metrics, MatchBruteForceOnRandomPairs) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const Extent e{4 + rng() % 20, 4 + rng() % 20};
    const auto [pred, label] = oracle::random_pair(rng, e);
    EXPECT_NEAR(error_rate(pred, label), oracle::error(pred, label), 1e-15);
    const auto f = f05_score(pred, label), fo = oracle::f05(pred, label);
    ASSERT_EQ(f.has_value(), fo.has_value());
    if (f) {
      EXPECT_NEAR(*f, *fo, 1e-12);
    }
    const auto ec = edge_coherence(pred, label), eo = oracle::edge_coherence(pred, label);
    ASSERT_EQ(ec.has_value(), eo.has_value());
    if (ec) {
      EXPECT_NEAR(*ec, *eo, 1e-9);
      EXPECT_LE(*ec, 1.0);
    }
  }
}

TEST(Metrics, MayPixelsOnlyMatterThroughEdges) {
  std::mt19937_64 rng(31);
  const auto [pred, label] = oracle::random_pair(rng, {12, 12});
  std::vector<std::uint8_t> px(pred.values().begin(), pred.values().end());
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (label[i] == Label::May) px[i] ^= 1;
  }
  const BinaryMask flipped(pred.extent(), px);
  EXPECT_EQ(error_rate(flipped, label), error_rate(pred, label));
  EXPECT_EQ(f05_score(flipped, label), f05_score(pred, label));
}

TEST(EvaluateImage, PerfectAndEmptyPredictions) {
  const auto label = horizontal_front({8, 8}, 4);
  const auto perfect = evaluate_image(must_region(label), label, "m", "i");
  EXPECT_EQ(perfect.error, 0.0);
  EXPECT_EQ(perfect.f05, 1.0);
  EXPECT_EQ(perfect.edge_coherence, 1.0);
  const auto empty = evaluate_image(BinaryMask({8, 8}, std::vector<std::uint8_t>(64, 0)), label);
  EXPECT_GT(empty.error, 0.0);
  EXPECT_FALSE(empty.f05);
  EXPECT_FALSE(empty.edge_coherence);
  EXPECT_THROW(evaluate_image(BinaryMask({8, 7}, std::vector<std::uint8_t>(56, 0)), label), ShapeMismatch);
}

class DatasetTest : public ::testing::Test {
 protected:
  void write(std::size_t n, std::size_t skip = static_cast<std::size_t>(-1)) {
    std::filesystem::create_directories(dir / "labels");
    std::filesystem::create_directories(dir / "model");
    std::mt19937_64 rng(9);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [pred, label] = oracle::random_pair(rng, {16, 16});
      char id[32];
      std::snprintf(id, sizeof id, "%03zu", i);
      write_png(dir / "labels" / (std::string(id) + ".png"), to_png(label));
      if (i != skip) write_png(dir / "model" / (std::string(id) + ".png"), to_png(pred));
      expected.push_back(evaluate_image(pred, label, "model", id));
    }
  }
  TempDir dir;
  std::vector<MetricRecord> expected;
};

TEST_F(DatasetTest, OneRecordPerImageInIdOrder) {
  write(180);
  const auto records = evaluate_dataset(dir / "model", dir / "labels", "model", {0.5, 4});
  ASSERT_EQ(records.size(), 180u);
  EXPECT_EQ(records, expected);
  EXPECT_EQ(evaluate_dataset(dir / "model", dir / "labels", "model", {0.5, 1}), records);
}

TEST_F(DatasetTest, EmptyDirectoriesGiveNoRecords) {
  write(0);
  EXPECT_TRUE(evaluate_dataset(dir / "model", dir / "labels").empty());
}

TEST_F(DatasetTest, MissingPredictionIsNamed) {
  write(180, 42);
  try {
    evaluate_dataset(dir / "model", dir / "labels", "model");
    FAIL() << "expected MissingPredictions";
  } catch (const MissingPredictions& e) {
    EXPECT_NE(std::string(e.what()).find("042"), std::string::npos) << e.what();
  }
}

TEST_F(DatasetTest, ShapeMismatchesAreListed) {
  write(3);
  write_png(dir / "model" / "001.png", PngImage{{5, 5}, 1, std::vector<std::uint8_t>(25, 0)});
  write_png(dir / "model" / "002.png", PngImage{{16, 15}, 1, std::vector<std::uint8_t>(240, 0)});
  try {
    evaluate_dataset(dir / "model", dir / "labels", "model");
    FAIL() << "expected ShapeMismatch";
  } catch (const ShapeMismatch& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("001"), std::string::npos);
    EXPECT_NE(msg.find("002"), std::string::npos);
  }
}

TEST(MetricsCsv, RoundTripWithMissingValues) {
  const std::vector<MetricRecord> rs = {{"a", "1", 0.125, 0.5, std::nullopt},
                                        {"a", "2", 0.1, std::nullopt, 0.98765432109876},
                                        {"b", "1", 0.0, 1.0, 1.0}};
  std::stringstream ss;
  write_metrics_csv(ss, rs);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "model_id,image_id,error,f05,edge_coherence");
  EXPECT_NE(ss.str().find("a,1,0.125,0.5,\n"), std::string::npos);
  EXPECT_EQ(read_metrics_csv(ss), rs);

  std::stringstream bad_header("model,image,error\n");
  EXPECT_THROW(read_metrics_csv(bad_header), SchemaError);
  std::stringstream bad_value("model_id,image_id,error,f05,edge_coherence\na,1,x,,\n");
  EXPECT_THROW(read_metrics_csv(bad_value), SchemaError);
}
