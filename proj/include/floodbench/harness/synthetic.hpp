#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "floodbench/bootstrap/ablation.hpp"
#include "floodbench/bootstrap/study_config.hpp"
#include "floodbench/core/png_io.hpp"
#include "floodbench/harness/commands.hpp"

namespace floodbench::harness {

// Synthetic ablation study with known per-technique effects on the error
// rate. Every image has a base prediction; each technique owns a disjoint set
// of pixels that it flips whenever a model has that technique. A negative
// effect flips wrong pixels (fewer errors), a positive one flips correct
// pixels. Per-model noise flips come from the remaining pixels.
struct SyntheticStudyOptions {
  std::size_t images = 180;
  Extent extent{64, 64};
  // Mean number of pixels each technique flips per image; the sign says
  // whether the flips fix (−) or introduce (+) errors.
  std::array<double, 6> effect_pixels = {-3.0, -2.0, -2.0, -2.0, -2.0, 6.0};
  std::size_t max_noise_flips = 4;
  std::uint64_t seed = 0;
  BootstrapSettings bootstrap{};
};

struct SyntheticStudy {
  fs::path root;
  fs::path manifest;
  std::vector<ModelConfig> models;
  std::array<int, 6> planted_error_sign{};
};

namespace detail {

inline std::string image_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%03zu", i);
  return buf;
}

struct SyntheticImage {
  std::vector<std::uint8_t> label;  // codes 0/1/2
  std::vector<std::uint8_t> base;   // 0/1
  std::array<std::vector<std::size_t>, 6> owned;
  std::vector<std::size_t> free_pixels;
};

inline SyntheticImage make_image(const SyntheticStudyOptions& o, std::mt19937_64& rng) {
  const auto h = o.extent.height, w = o.extent.width;
  SyntheticImage img;
  img.label.resize(h * w);
  img.base.resize(h * w);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double horizon = static_cast<double>(h) * (0.35 + 0.3 * u(rng));
  const double amp = 2.0 + 4.0 * u(rng);
  const double freq = 0.05 + 0.2 * u(rng);
  const double phase = 6.283185307179586 * u(rng);
  const double offset = std::round(-3.0 + 6.0 * u(rng));
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double line = horizon + amp * std::sin(freq * static_cast<double>(c) + phase);
      const double y = static_cast<double>(r);
      const auto i = r * w + c;
      img.label[i] = std::abs(y - line) <= 1.0 ? 1 : (y > line ? 2 : 0);
      img.base[i] = y > line + offset ? 1 : 0;
    }
  }
  // Two wrong blocks guarantee a pool of errors for the fixing techniques.
  std::uniform_int_distribution<std::size_t> col(0, w - 6);
  for (int blob = 0; blob < 2; ++blob) {
    const std::uint8_t want = blob == 0 ? 0 : 2;
    for (int attempt = 0; attempt < 50; ++attempt) {
      const std::size_t r0 = std::uniform_int_distribution<std::size_t>(0, h - 6)(rng), c0 = col(rng);
      bool ok = true;
      for (std::size_t r = r0; r < r0 + 5 && ok; ++r)
        for (std::size_t c = c0; c < c0 + 5 && ok; ++c) ok = img.label[r * w + c] == want;
      if (!ok) continue;
      for (std::size_t r = r0; r < r0 + 5; ++r)
        for (std::size_t c = c0; c < c0 + 5; ++c) img.base[r * w + c] = want == 0 ? 1 : 0;
      break;
    }
  }

  std::vector<std::size_t> wrong, right;
  for (std::size_t i = 0; i < h * w; ++i) {
    if (img.label[i] == 1) continue;
    const bool correct = (img.label[i] == 2) == (img.base[i] == 1);
    (correct ? right : wrong).push_back(i);
  }
  std::shuffle(wrong.begin(), wrong.end(), rng);
  std::shuffle(right.begin(), right.end(), rng);
  std::size_t wi = 0, ri = 0;
  for (std::size_t t = 0; t < 6; ++t) {
    const double mean = std::abs(o.effect_pixels[t]);
    const auto count = std::uniform_int_distribution<std::size_t>(0, static_cast<std::size_t>(std::lround(2 * mean)))(rng);
    auto& pool = o.effect_pixels[t] < 0 ? wrong : right;
    auto& next = o.effect_pixels[t] < 0 ? wi : ri;
    for (std::size_t k = 0; k < count && next < pool.size(); ++k) img.owned[t].push_back(pool[next++]);
  }
  img.free_pixels.assign(wrong.begin() + static_cast<std::ptrdiff_t>(wi), wrong.end());
  img.free_pixels.insert(img.free_pixels.end(), right.begin() + static_cast<std::ptrdiff_t>(ri), right.end());
  std::sort(img.free_pixels.begin(), img.free_pixels.end());
  return img;
}

}  // namespace detail

// Writes `<root>/labels`, one prediction directory per model, study.csv and
// manifest.json (output `<root>/out`).
inline SyntheticStudy write_synthetic_study(const fs::path& root, const SyntheticStudyOptions& o = {}) {
  SyntheticStudy study;
  study.root = root;
  study.models = ablation_matrix();
  for (std::size_t t = 0; t < 6; ++t) study.planted_error_sign[t] = o.effect_pixels[t] < 0 ? -1 : (o.effect_pixels[t] > 0 ? 1 : 0);

  fs::create_directories(root / "labels");
  for (const auto& m : study.models) fs::create_directories(root / m.model_id);
  for (std::size_t i = 0; i < o.images; ++i) {
    std::mt19937_64 rng(derive_seed(o.seed, i));
    const auto img = detail::make_image(o, rng);
    const auto id = detail::image_id(i);
    write_png(root / "labels" / (id + ".png"), PngImage{o.extent, 1, img.label});
    for (std::size_t k = 0; k < study.models.size(); ++k) {
      const auto& m = study.models[k];
      std::vector<std::uint8_t> pred = img.base;
      for (std::size_t t = 0; t < 6; ++t) {
        if (!m.techniques.contains(kAllTechniques[t])) continue;
        for (auto p : img.owned[t]) pred[p] ^= 1;
      }
      std::mt19937_64 noise(derive_seed(o.seed ^ 0x5eedull, i * 64 + k));
      const auto flips = std::uniform_int_distribution<std::size_t>(0, o.max_noise_flips)(noise);
      std::uniform_int_distribution<std::size_t> pick(0, img.free_pixels.size() - 1);
      for (std::size_t f = 0; f < flips; ++f) pred[img.free_pixels[pick(noise)]] ^= 1;
      for (auto& v : pred) v = v ? 255 : 0;
      write_png(root / m.model_id / (id + ".png"), PngImage{o.extent, 1, std::move(pred)});
    }
  }

  std::ostringstream csv;
  write_study_csv(csv, study.models);
  write_file(root / "study.csv", csv.str());
  const nlohmann::json manifest{{"dataset", "."},
                                {"models", "study.csv"},
                                {"threshold", 0.5},
                                {"bootstrap",
                                 {{"n_resamples", o.bootstrap.n_resamples},
                                  {"trim", o.bootstrap.trim},
                                  {"conf", o.bootstrap.conf},
                                  {"seed", o.bootstrap.seed}}},
                                {"output", "out"}};
  study.manifest = root / "manifest.json";
  write_file(study.manifest, manifest.dump(2) + "\n");
  return study;
}

}  // namespace floodbench::harness
