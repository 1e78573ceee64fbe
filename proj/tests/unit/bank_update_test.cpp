#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "softmatch/bank_update.hpp"

using namespace softmatch;

namespace {

// 4x4 grid at stride 2 over an 8x8 image; cell i has the single feature i.
FeatureMap grid_features(float offset = 0.0f) {
  std::vector<float> v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = offset + static_cast<float>(i);
  return FeatureMap(4, 4, 1, 2, v);
}

// Cells whose 2x2 block has at least two foreground pixels.
std::vector<std::size_t> cells_of(const LabelMask& m) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      int n = 0;
      for (std::size_t y = 2 * r; y < 2 * r + 2; ++y)
        for (std::size_t x = 2 * c; x < 2 * c + 2; ++x) n += m.at(x, y) != 0;
      if (2 * n >= 4) out.push_back(r * 4 + c);
    }
  }
  return out;
}

LabelMask square(std::size_t x0, std::size_t x1) {
  return oracle::from_predicate(8, 8, [=](std::size_t x, std::size_t y) {
    return x >= x0 && x < x1 && y >= x0 && y < x1;
  });
}

ObjectBanks fresh_banks() {
  ObjectBanks b{FeatureBank(1), FeatureBank(1)};
  const float a = 100.0f, z = -100.0f;
  b.fg.append({&a, 1}, {EntryKind::template_frame, 1, 0});
  b.bg.append({&z, 1}, {EntryKind::template_frame, 1, 1});
  return b;
}

}  // namespace

TEST(UpdateBanks, SpuriousCellFeedsBackgroundConfidentCoreFeedsForeground) {
  const LabelMask y_t = square(0, 6);
  LabelMask y_init = y_t;
  for (std::size_t y = 6; y < 8; ++y)
    for (std::size_t x = 6; x < 8; ++x) y_init.set(x, y, 1);
  std::vector<float> p(64, 0.99f);
  p[1 * 8 + 3] = 0.9f;  // centre pixel of cell 1 at stride 2 is (3, 1)
  const ProbabilityMap p_t(8, 8, p);

  Config cfg;
  cfg.erosion_radius = 1.0;
  ObjectBanks banks = fresh_banks();
  const UpdateReport rep = update_banks(grid_features(), y_init, y_t, p_t, banks, cfg, 2);

  // Exhaustive rule application.
  std::vector<std::size_t> init_cells = cells_of(y_init), final_cells = cells_of(y_t), b_t;
  std::set_difference(init_cells.begin(), init_cells.end(), final_cells.begin(), final_cells.end(),
                      std::back_inserter(b_t));
  std::vector<std::size_t> fg;
  for (std::size_t i : cells_of(oracle::erode(y_t, 1.0))) {
    const std::size_t cx = (i % 4) * 2 + 1, cy = (i / 4) * 2 + 1;
    if (p_t.at(cx, cy) > cfg.c1 && std::find(b_t.begin(), b_t.end(), i) == b_t.end()) fg.push_back(i);
  }
  EXPECT_EQ(b_t, std::vector<std::size_t>{15});
  EXPECT_EQ(fg, (std::vector<std::size_t>{0, 2, 4, 5, 6, 8, 9}));
  EXPECT_EQ(rep.b_t, b_t);
  EXPECT_EQ(rep.fg_indices, fg);

  ASSERT_EQ(banks.bg.size(), 2u);
  EXPECT_EQ(banks.bg.entry(1)[0], 15.0f);
  EXPECT_EQ(banks.bg.origin(1), (EntryOrigin{EntryKind::online_update, 2, 15}));
  ASSERT_EQ(banks.fg.size(), 1u + fg.size());
  for (std::size_t j = 0; j < fg.size(); ++j) EXPECT_EQ(banks.fg.entry(1 + j)[0], static_cast<float>(fg[j]));
  EXPECT_EQ(rep.bg_added, 1u);
  EXPECT_EQ(rep.fg_added, fg.size());
}

TEST(UpdateBanks, IdenticalMasksLeaveBackgroundUnchanged) {
  const LabelMask y = square(2, 8);
  ObjectBanks banks = fresh_banks();
  const auto rep = update_banks(grid_features(), y, y, ProbabilityMap(8, 8, 0.99f), banks, Config{}, 2);
  EXPECT_TRUE(rep.b_t.empty());
  EXPECT_EQ(banks.bg.size(), 1u);
}

TEST(UpdateBanks, EmptyPredictionAddsNoForeground) {
  ObjectBanks banks = fresh_banks();
  const auto rep =
      update_banks(grid_features(), square(0, 4), LabelMask(8, 8), ProbabilityMap(8, 8, 1.0f), banks, Config{}, 2);
  EXPECT_TRUE(rep.fg_indices.empty());
  EXPECT_EQ(banks.fg.size(), 1u);
  EXPECT_EQ(rep.b_t, (std::vector<std::size_t>{0, 1, 4, 5}));
}

TEST(UpdateBanks, DisabledAppendsStillReportCandidates) {
  Config cfg;
  cfg.erosion_radius = 0.0;
  cfg.bg_update = false;
  cfg.fg_update = false;
  ObjectBanks banks = fresh_banks();
  const ObjectBanks before = banks;
  const auto rep = update_banks(grid_features(), square(0, 8), square(0, 4), ProbabilityMap(8, 8, 0.99f), banks, cfg, 3);
  EXPECT_FALSE(rep.b_t.empty());
  EXPECT_FALSE(rep.fg_indices.empty());
  EXPECT_EQ(rep.bg_added, 0u);
  EXPECT_EQ(rep.fg_added, 0u);
  EXPECT_EQ(banks.fg, before.fg);
  EXPECT_EQ(banks.bg, before.bg);
}

TEST(UpdateBanks, NoCellFeedsBothBanks) {
  std::mt19937 rng(3);
  Config cfg;
  cfg.erosion_radius = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const LabelMask y_init = oracle::random_mask(rng, 8, 8, 0.6);
    const LabelMask y_t = remove_outliers(y_init, oracle::random_mask(rng, 8, 8, 0.05), 2.0);
    ObjectBanks banks = fresh_banks();
    const auto rep = update_banks(grid_features(), y_init, y_t, ProbabilityMap(8, 8, 0.99f), banks, cfg, 2);
    const auto final_cells = downsample_mask(y_t, {4, 4, 2}, 1);
    for (std::size_t i : rep.fg_indices) {
      EXPECT_TRUE(std::find(rep.b_t.begin(), rep.b_t.end(), i) == rep.b_t.end());
      EXPECT_TRUE(std::find(final_cells.begin(), final_cells.end(), i) != final_cells.end());
    }
    for (std::size_t i : rep.b_t)
      EXPECT_TRUE(std::find(final_cells.begin(), final_cells.end(), i) == final_cells.end());
  }
}

TEST(UpdateBanks, CapacityEvictsOldestOnlineEntriesOnly) {
  Config cfg;
  cfg.erosion_radius = 0.0;
  cfg.bank_capacity = 4;
  ObjectBanks banks = fresh_banks();
  update_banks(grid_features(0.0f), square(0, 8), square(0, 4), ProbabilityMap(8, 8, 0.99f), banks, cfg, 2);
  // Frame 2: four FG candidates (cells 0,1,4,5) on top of one template entry.
  EXPECT_EQ(banks.fg.size(), 4u);
  EXPECT_EQ(banks.fg.count(EntryKind::template_frame), 1u);
  const auto rep =
      update_banks(grid_features(50.0f), square(0, 8), square(0, 4), ProbabilityMap(8, 8, 0.99f), banks, cfg, 3);
  EXPECT_EQ(rep.fg_evicted, 4u);
  EXPECT_EQ(banks.fg.size(), 4u);
  EXPECT_EQ(banks.fg.origin(0).kind, EntryKind::template_frame);
  for (std::size_t j = 1; j < 4; ++j) EXPECT_EQ(banks.fg.origin(j).frame, 3u);
}

TEST(UpdateBanks, RejectsChannelMismatch) {
  ObjectBanks banks{FeatureBank(2), FeatureBank(2)};
  EXPECT_THROW(update_banks(grid_features(), square(0, 4), square(0, 4), ProbabilityMap(8, 8, 0.5f), banks, Config{}, 2),
               ContractViolation);
}
