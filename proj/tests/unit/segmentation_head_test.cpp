#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "softmatch/segmentation_head.hpp"

using namespace softmatch;

namespace {

ScoreImage image_of(std::size_t w, std::size_t h, std::vector<float> v) { return {w, h, std::move(v)}; }

// Hand-written bilinear evaluation with cell centres at c*s + (s-1)/2.
double bilinear(const ScoreMap& s, double px, double py, std::size_t stride) {
  auto coord = [stride](double p, std::size_t cells) {
    const double u = (p - (double(stride) - 1) / 2) / double(stride);
    return std::clamp(u, 0.0, double(cells - 1));
  };
  const double u = coord(px, s.width), v = coord(py, s.height);
  const auto x0 = static_cast<std::size_t>(std::floor(u)), y0 = static_cast<std::size_t>(std::floor(v));
  const std::size_t x1 = std::min(x0 + 1, s.width - 1), y1 = std::min(y0 + 1, s.height - 1);
  const double fx = u - double(x0), fy = v - double(y0);
  return (1 - fx) * (1 - fy) * s.at(y0, x0) + fx * (1 - fy) * s.at(y0, x1) + (1 - fx) * fy * s.at(y1, x0) +
         fx * fy * s.at(y1, x1);
}

}  // namespace

TEST(Upsample, ConstantMapStaysConstant) {
  const ScoreMap s = ScoreMap::constant(3, 4, 0.25f);
  const ScoreImage u = upsample(s, 37, 29, 8);
  for (float v : u.values) EXPECT_EQ(v, 0.25f);
}

TEST(Upsample, RowIsMonotone) {
  const ScoreMap s{1, 2, {0.0f, 1.0f}};
  const ScoreImage u = upsample(s, 4, 1, 2);
  for (std::size_t x = 1; x < 4; ++x) EXPECT_GE(u.at(x, 0), u.at(x - 1, 0));
  EXPECT_EQ(u.at(0, 0), 0.0f);
  EXPECT_EQ(u.at(3, 0), 1.0f);
}

TEST(Upsample, CheckerboardCentreValues) {
  const ScoreMap s{2, 2, {0.0f, 1.0f, 1.0f, 0.0f}};
  const ScoreImage u = upsample(s, 4, 4, 2);
  EXPECT_NEAR(u.at(1, 1), 0.375, 1e-7);
  EXPECT_NEAR(u.at(2, 1), 0.625, 1e-7);
  EXPECT_NEAR(u.at(1, 2), 0.625, 1e-7);
  EXPECT_NEAR(u.at(2, 2), 0.375, 1e-7);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(u.at(x, y), bilinear(s, double(x), double(y), 2), 1e-6);
}

TEST(Upsample, ExactAtCellCentresAndWithinBounds) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  ScoreMap s{5, 7, std::vector<float>(35)};
  for (float& v : s.scores) v = d(rng);
  const std::size_t stride = 5;
  const ScoreImage u = upsample(s, 7 * stride + 3, 5 * stride, stride);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 7; ++c) EXPECT_EQ(u.at(c * stride + 2, r * stride + 2), s.at(r, c));
  const auto [lo, hi] = std::minmax_element(s.scores.begin(), s.scores.end());
  for (std::size_t y = 0; y < u.height; ++y) {
    for (std::size_t x = 0; x < u.width; ++x) {
      EXPECT_GE(u.at(x, y), *lo);
      EXPECT_LE(u.at(x, y), *hi);
      EXPECT_NEAR(u.at(x, y), bilinear(s, double(x), double(y), stride), 1e-6);
    }
  }
}

TEST(Upsample, RejectsTargetsSmallerThanGrid) {
  EXPECT_THROW(upsample(ScoreMap::constant(2, 2, 0.0f), 1, 2, 1), ContractViolation);
}

TEST(FgProbability, EqualScoresGiveOneHalf) {
  const auto p = fg_probability(image_of(2, 1, {0.3f, -0.7f}), image_of(2, 1, {0.3f, -0.7f}));
  EXPECT_EQ(p[0], 0.5f);
  EXPECT_EQ(p[1], 0.5f);
}

TEST(FgProbability, OppositeUnitScores) {
  const auto p = fg_probability(image_of(1, 1, {1.0f}), image_of(1, 1, {-1.0f}));
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-2.0)), 1e-7);
  EXPECT_NEAR(p[0], 0.8808, 1e-4);
}

TEST(FgProbability, SwappingScoresComplements) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> a(50), b(50);
  for (std::size_t i = 0; i < 50; ++i) a[i] = d(rng), b[i] = d(rng);
  const auto p = fg_probability(image_of(50, 1, a), image_of(50, 1, b));
  const auto q = fg_probability(image_of(50, 1, b), image_of(50, 1, a));
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(p[i] + q[i], 1.0, 1e-6);
}

TEST(FgProbability, ShiftInvariantAndMonotone) {
  const auto base = fg_probability(image_of(1, 1, {0.2f}), image_of(1, 1, {0.1f}));
  const auto shifted = fg_probability(image_of(1, 1, {0.7f}), image_of(1, 1, {0.6f}));
  EXPECT_NEAR(base[0], shifted[0], 1e-6);
  const auto more_fg = fg_probability(image_of(1, 1, {0.3f}), image_of(1, 1, {0.1f}));
  const auto more_bg = fg_probability(image_of(1, 1, {0.2f}), image_of(1, 1, {0.2f}));
  EXPECT_GT(more_fg[0], base[0]);
  EXPECT_LT(more_bg[0], base[0]);
}

TEST(FgProbability, TemperatureSharpensAndLargeLogitsDoNotOverflow) {
  const auto soft = fg_probability(image_of(1, 1, {0.6f}), image_of(1, 1, {0.4f}));
  const auto sharp = fg_probability(image_of(1, 1, {0.6f}), image_of(1, 1, {0.4f}), {1, 1, 0.1});
  EXPECT_GT(sharp[0], soft[0]);
  EXPECT_NEAR(sharp[0], 1.0 / (1.0 + std::exp(-2.0)), 1e-6);
  const auto extreme = fg_probability(image_of(2, 1, {1.0f, -1.0f}), image_of(2, 1, {-1.0f, 1.0f}), {1, 1, 1e-4});
  EXPECT_EQ(extreme[0], 1.0f);
  EXPECT_EQ(extreme[1], 0.0f);
  EXPECT_THROW(fg_probability(image_of(1, 1, {0}), image_of(1, 1, {0}), {1, 1, 0.0}), ContractViolation);
}

TEST(FgProbability, WeightsScaleTheLogits) {
  const auto p = fg_probability(image_of(1, 1, {0.5f}), image_of(1, 1, {0.5f}), {2.0, 1.0, 1.0});
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-0.5)), 1e-7);
}

TEST(Threshold, StrictInequality) {
  const ProbabilityMap above(3, 2, 0.6f), at(3, 2, 0.5f);
  EXPECT_EQ(threshold(above, 0.5).foreground_count(), 6u);
  EXPECT_EQ(threshold(at, 0.5).foreground_count(), 0u);
}

TEST(Threshold, MatchesElementwiseComparison) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(200);
  for (float& x : v) x = d(rng);
  const ProbabilityMap p(20, 10, v);
  const LabelMask m = threshold(p, 0.37);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(m[i] != 0, v[i] > 0.37f);
}
