#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "softmatch/handcrafted.hpp"

using namespace softmatch;

namespace {

constexpr std::size_t kRgb = 0, kHue = 3, kOrient = 11, kPos = 19;

RgbImage filled(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img(w, h);
  for (std::size_t i = 0; i < w * h; ++i) {
    img.rgb[3 * i] = r;
    img.rgb[3 * i + 1] = g;
    img.rgb[3 * i + 2] = b;
  }
  return img;
}

double block_norm(std::span<const float> cell, std::size_t first, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = first; i < first + n; ++i) s += double(cell[i]) * cell[i];
  return std::sqrt(s);
}

}  // namespace

TEST(Handcrafted, GridShapeAndChannelCount) {
  const FeatureMap f = extract_handcrafted(filled(50, 33, 1, 2, 3));
  EXPECT_EQ(f.width(), 7u);
  EXPECT_EQ(f.height(), 5u);
  EXPECT_EQ(f.channels(), 21u);
  EXPECT_EQ(f.stride(), 8u);
  EXPECT_EQ(extract_handcrafted(filled(16, 16, 0, 0, 0), {8, 8, false}).channels(), 19u);
}

TEST(Handcrafted, UniformGreyHasOnlyTheColourBlock) {
  const FeatureMap f = extract_handcrafted(filled(32, 24, 120, 120, 120));
  for (std::size_t i = 0; i < f.cells(); ++i) {
    const auto cell = f.cell(i);
    for (std::size_t k = kHue; k < kPos; ++k) EXPECT_EQ(cell[k], 0.0f);
    for (std::size_t k = kRgb; k < kHue; ++k) EXPECT_NEAR(cell[k], 1.0 / std::sqrt(3.0), 1e-6);
  }
}

TEST(Handcrafted, VerticalStepEdgeFillsTheHorizontalGradientBin) {
  RgbImage img = filled(16, 8, 0, 0, 0);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 4; x < 16; ++x) std::fill_n(img.pixel(x, y), 3, 255);
  const FeatureMap f = extract_handcrafted(img);
  const auto cell = f.cell(0);
  EXPECT_NEAR(cell[kOrient + 0], 1.0, 1e-6);
  for (std::size_t b = 1; b < 8; ++b) EXPECT_EQ(cell[kOrient + b], 0.0f);
}

TEST(Handcrafted, BrightnessScalingKeepsHueBlock) {
  std::mt19937 rng(1);
  RgbImage dark(24, 16), bright(24, 16);
  for (std::size_t i = 0; i < dark.rgb.size(); ++i) {
    dark.rgb[i] = static_cast<std::uint8_t>(rng() % 128);
    bright.rgb[i] = static_cast<std::uint8_t>(2 * dark.rgb[i]);
  }
  const FeatureMap a = extract_handcrafted(dark), b = extract_handcrafted(bright);
  for (std::size_t i = 0; i < a.cells(); ++i)
    for (std::size_t k = kHue; k < kOrient; ++k) EXPECT_NEAR(a.cell(i)[k], b.cell(i)[k], 1e-6);
}

TEST(Handcrafted, TranslationByOneStrideShiftsTheGrid) {
  std::mt19937 rng(2);
  const std::size_t W = 64, H = 40, s = 8;
  RgbImage base(W, H), moved(W, H);
  for (auto& v : base.rgb) v = static_cast<std::uint8_t>(rng());
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = s; x < W; ++x) std::copy_n(base.pixel(x - s, y), 3, moved.pixel(x, y));
  const FeatureMap a = extract_handcrafted(base, {s, s, false});
  const FeatureMap b = extract_handcrafted(moved, {s, s, false});
  // Interior: away from the left seam and the right/bottom image border.
  for (std::size_t r = 1; r + 1 < a.height(); ++r)
    for (std::size_t c = 1; c + 2 < a.width(); ++c)
      for (std::size_t k = 0; k < a.channels(); ++k)
        EXPECT_EQ(a.cell(r * a.width() + c)[k], b.cell(r * b.width() + c + 1)[k]);
}

TEST(Handcrafted, BlocksAreUnitOrZeroNormAndFinite) {
  std::mt19937 rng(3);
  RgbImage img(40, 40);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng());
  const FeatureMap f = extract_handcrafted(img);
  for (std::size_t i = 0; i < f.cells(); ++i) {
    const auto cell = f.cell(i);
    for (auto [first, n] : {std::pair<std::size_t, std::size_t>{kRgb, 3}, {kHue, 8}, {kOrient, 8}, {kPos, 2}}) {
      const double norm = block_norm(cell, first, n);
      EXPECT_LE(norm, 1.0 + 1e-6);
      EXPECT_TRUE(norm == 0.0 || std::abs(norm - 1.0) < 1e-6);
    }
  }
}

TEST(Handcrafted, DeterministicAndDistinguishesColours) {
  RgbImage img = filled(16, 8, 200, 40, 40);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 8; x < 16; ++x) {
      auto* p = img.pixel(x, y);
      p[0] = 40, p[1] = 60, p[2] = 200;
    }
  const FeatureMap a = extract_handcrafted(img), b = extract_handcrafted(img);
  EXPECT_EQ(a, b);
  double dot = 0.0;
  for (std::size_t k = kHue; k < kOrient; ++k) dot += a.cell(0)[k] * a.cell(1)[k];
  EXPECT_EQ(dot, 0.0);
}

TEST(Handcrafted, RejectsMalformedInput) {
  RgbImage bad(4, 4);
  bad.rgb.resize(5);
  EXPECT_THROW(extract_handcrafted(bad), FormatError);
  EXPECT_THROW(extract_handcrafted(filled(4, 4, 0, 0, 0)), ContractViolation);
}
