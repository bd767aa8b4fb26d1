#include <gtest/gtest.h>

#include <random>
#include <set>

#include "floodbench/core/boundary.hpp"
#include "floodbench/core/fbrt.hpp"
#include "floodbench/core/png_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace floodbench;

namespace {

TernaryLabelMap label_from(Extent e, std::vector<std::uint8_t> codes) { return TernaryLabelMap::from_codes(e, codes); }

std::set<std::pair<std::size_t, std::size_t>> as_set(const BoundarySet& b) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& p : b.pixels()) out.insert({p.row, p.col});
  return out;
}

}  // namespace

TEST(LabelMap, ConstantMustPng) {
  TempDir dir;
  write_png(dir / "l.png", PngImage{{4, 4}, 1, std::vector<std::uint8_t>(16, 2)});
  const auto m = load_label_map(dir / "l.png");
  EXPECT_EQ(m.extent(), (Extent{4, 4}));
  EXPECT_EQ(m.count(Label::Must), 16u);
}

TEST(LabelMap, MalformedCodeNamesValueAndLocation) {
  TempDir dir;
  std::vector<std::uint8_t> px(12, 0);
  px[1 * 4 + 3] = 7;
  write_png(dir / "bad.png", PngImage{{3, 4}, 1, px});
  try {
    load_label_map(dir / "bad.png");
    FAIL() << "expected MalformedLabel";
  } catch (const MalformedLabel& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('7'), std::string::npos) << msg;
    EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("col 3"), std::string::npos) << msg;
  }
}

TEST(LabelMap, DirectoryOfMapsKeepsHeaderSizes) {
  TempDir dir;
  for (std::size_t i = 0; i < 12; ++i) {
    const Extent e{3 + i, 5 + 2 * i};
    write_png(dir / (std::to_string(i) + ".png"), PngImage{e, 1, std::vector<std::uint8_t>(e.area(), i % 3)});
  }
  for (std::size_t i = 0; i < 12; ++i) {
    const auto m = load_label_map(dir / (std::to_string(i) + ".png"));
    EXPECT_EQ(m.extent(), (Extent{3 + i, 5 + 2 * i}));
  }
}

TEST(Png, RejectsGarbageAndRgbLabels) {
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
  EXPECT_THROW(decode_png(junk), DecodeError);
  const auto rgb = encode_png(PngImage{{2, 2}, 3, std::vector<std::uint8_t>(12, 1)});
  EXPECT_THROW(label_map_from_png(decode_png(rgb)), DecodeError);
}

TEST(Mask, EncodingExamples) {
  const auto m = mask_from_png(PngImage{{1, 3}, 1, {255, 0, 128}}, 0.5);
  EXPECT_EQ(m.soft[0], 1.0);
  EXPECT_EQ(m.binary[0], 1);
  EXPECT_EQ(m.soft[1], 0.0);
  EXPECT_EQ(m.binary[1], 0);
  EXPECT_NEAR(m.soft[2], 0.50196, 1e-5);
  EXPECT_EQ(m.binary[2], 1);
  EXPECT_THROW(mask_from_png(PngImage{{1, 1}, 1, {0}}, 1.5), InvalidValue);
}

TEST(Mask, PngRoundTripIsByteIdentical) {
  std::mt19937_64 rng(3);
  std::vector<std::uint8_t> px(37 * 23);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng());
  const auto bytes = encode_png(PngImage{{37, 23}, 1, px});
  const auto loaded = mask_from_png(decode_png(bytes), 0.5);
  EXPECT_EQ(encode_png(to_png(loaded.soft)), bytes);
}

TEST(Field, RejectsNonFiniteAndBadShapes) {
  EXPECT_THROW(ChannelField(1, {1, 2}, std::vector<double>{0.0, std::nan("")}), InvalidValue);
  EXPECT_THROW(ChannelField(2, {1, 2}, std::vector<double>{0.0, 1.0}), ShapeMismatch);
  EXPECT_THROW(SoftMask({1, 1}, {1.5}), InvalidValue);
  EXPECT_THROW(BinaryMask({1, 1}, {2}), InvalidValue);
  EXPECT_THROW(LossWeights({1, 1, 1, 1, -1, 1, 1, 1, 1, 1}), InvalidValue);
}

TEST(Fbrt, RoundTripAndHeaderChecks) {
  std::vector<double> v(2 * 3 * 4);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i) - 1.0;
  const ChannelField f(2, {3, 4}, v);
  auto bytes = fbrt::encode(f);
  ASSERT_EQ(bytes.size(), 16 + 8 * v.size());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FBRT");
  const auto back = fbrt::decode(bytes);
  EXPECT_EQ(back.channels(), 2u);
  EXPECT_EQ(back.extent(), (Extent{3, 4}));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(back[i], v[i]);

  TempDir dir;
  fbrt::write(dir / "f.fbrt", f);
  EXPECT_EQ(fbrt::read(dir / "f.fbrt").values()[5], v[5]);

  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(fbrt::decode(truncated), DecodeError);
  bytes[0] = 'X';
  EXPECT_THROW(fbrt::decode(bytes), DecodeError);
}

TEST(Sobel, ConstantMasksHaveNoBoundary) {
  EXPECT_TRUE(sobel_boundary(BinaryMask({5, 6}, std::vector<std::uint8_t>(30, 0))).empty());
  EXPECT_TRUE(sobel_boundary(BinaryMask({5, 6}, std::vector<std::uint8_t>(30, 1))).empty());
}

TEST(Sobel, HorizontalFrontGivesTwoRowBand) {
  std::vector<std::uint8_t> px(64, 0);
  for (std::size_t r = 4; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) px[r * 8 + c] = 1;
  const auto b = sobel_boundary(BinaryMask({8, 8}, px));
  EXPECT_EQ(b.size(), 16u);
  for (const auto& p : b.pixels()) EXPECT_TRUE(p.row == 3 || p.row == 4);
}

TEST(Sobel, MatchesBruteForceAndIsComplementInvariant) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Extent e{1 + rng() % 12, 1 + rng() % 12};
    const auto [pred, label] = oracle::random_pair(rng, e);
    std::vector<int> ints(pred.values().begin(), pred.values().end());
    EXPECT_EQ(as_set(sobel_boundary(pred)), oracle::sobel(ints, e.height, e.width));
    EXPECT_EQ(as_set(sobel_boundary(pred.complement())), as_set(sobel_boundary(pred)));
  }
}

TEST(Confusion, HandCountedGrid) {
  // Rows: MUST MUST MUST MUST / MUST MUST CANNOT CANNOT / CANNOT CANNOT MAY MAY / MAY MAY MAY MAY
  const auto label = label_from({4, 4}, {2, 2, 2, 2, 2, 2, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1});
  const BinaryMask pred({4, 4}, {1, 1, 1, 1, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1});
  const auto c = confusion_counts(pred, label);
  EXPECT_EQ(c.tp, 4u);
  EXPECT_EQ(c.fn, 2u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 3u);
}

TEST(Confusion, PerfectAndAllOnes) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [pred, label] = oracle::random_pair(rng, {9, 7});
    const auto perfect = confusion_counts(must_region(label), label);
    EXPECT_EQ(perfect.fp, 0u);
    EXPECT_EQ(perfect.fn, 0u);
    const auto ones = confusion_counts(BinaryMask({9, 7}, std::vector<std::uint8_t>(63, 1)), label);
    EXPECT_EQ(ones.fn, 0u);
    EXPECT_EQ(ones.fp, label.count(Label::Cannot));
    const auto c = confusion_counts(pred, label);
    EXPECT_EQ(c.tp + c.fn, label.count(Label::Must));
    EXPECT_EQ(c.fp + c.tn, label.count(Label::Cannot));
  }
  EXPECT_THROW(confusion_counts(BinaryMask({2, 2}, {0, 0, 0, 0}), label_from({2, 3}, {0, 0, 0, 0, 0, 0})),
               ShapeMismatch);
}
