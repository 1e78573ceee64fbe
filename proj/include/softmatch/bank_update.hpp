#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "softmatch/bank_builder.hpp"
#include "softmatch/config.hpp"
#include "softmatch/core.hpp"
#include "softmatch/temporal_filter.hpp"

namespace softmatch {

/// What one online update did. Index sets are grid cells; they are recorded
/// even when the corresponding append is disabled.
struct UpdateReport {
  std::size_t frame = 0;
  std::size_t bg_added = 0;
  std::size_t fg_added = 0;
  std::size_t bg_evicted = 0;
  std::size_t fg_evicted = 0;
  std::vector<std::size_t> b_t;
  std::vector<std::size_t> fg_indices;
};

namespace detail {

// Full-resolution pixel at the centre of grid cell (row, col), clamped.
inline std::size_t cell_center_pixel(std::size_t row, std::size_t col, const GridShape& grid,
                                     std::size_t width, std::size_t height) {
  const std::size_t x = std::min(col * grid.stride + grid.stride / 2, width - 1);
  const std::size_t y = std::min(row * grid.stride + grid.stride / 2, height - 1);
  return y * width + x;
}

inline std::size_t enforce_capacity(FeatureBank& bank, const std::optional<std::size_t>& cap) {
  if (!cap || bank.size() <= *cap) return 0;
  return bank.evict_oldest_online(bank.size() - *cap);
}

}  // namespace detail

/// Online bank growth after frame t.
///   b_t = g(y_init) \ g(y_t)                          -> appended to BG
///   g(erode(y_t, r_e)) with p_t(cell centre) > c1, minus b_t -> appended to FG
/// g() is the majority-vote projection onto the feature grid.
inline UpdateReport update_banks(const FeatureMap& frame, const LabelMask& y_init,
                                 const LabelMask& y_t, const ProbabilityMap& p_t,
                                 ObjectBanks& banks, const Config& cfg, std::size_t t) {
  detail::require(banks.fg.channels() == frame.channels() && banks.bg.channels() == frame.channels(),
                  "update_banks: channel mismatch");
  detail::require(y_init.same_shape(y_t), "update_banks: mask shapes differ");
  detail::require(p_t.width() == y_t.width() && p_t.height() == y_t.height(),
                  "update_banks: probability map shape differs from mask");

  const GridShape grid = frame.grid();
  const LabelMask init_cells = downsample_labels(y_init.binary(1), grid);
  const LabelMask final_cells = downsample_labels(y_t.binary(1), grid);
  const LabelMask core_cells = downsample_labels(erode(y_t.binary(1), cfg.erosion_radius), grid);

  UpdateReport report;
  report.frame = t;
  std::vector<char> in_bt(grid.cells(), 0);
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    if (init_cells[i] != 0 && final_cells[i] == 0) {
      report.b_t.push_back(i);
      in_bt[i] = 1;
    }
  }
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) {
      const std::size_t i = r * grid.width + c;
      if (core_cells[i] == 0 || in_bt[i]) continue;
      const float p = p_t[detail::cell_center_pixel(r, c, grid, p_t.width(), p_t.height())];
      if (p > cfg.c1) report.fg_indices.push_back(i);
    }
  }

  if (cfg.bg_update) {
    for (std::size_t i : report.b_t)
      banks.bg.append(frame.cell(i), {EntryKind::online_update, t, i});
    report.bg_added = report.b_t.size();
    report.bg_evicted = detail::enforce_capacity(banks.bg, cfg.bank_capacity);
  }
  if (cfg.fg_update) {
    for (std::size_t i : report.fg_indices)
      banks.fg.append(frame.cell(i), {EntryKind::online_update, t, i});
    report.fg_added = report.fg_indices.size();
    report.fg_evicted = detail::enforce_capacity(banks.fg, cfg.bank_capacity);
  }
  return report;
}

}  // namespace softmatch
