#pragma once

#include <vector>

#include "softmatch/core.hpp"

namespace softmatch {

struct ObjectBanks {
  FeatureBank fg;
  FeatureBank bg;
};

/// Initial per-object banks from the template frame: for object k the FG bank
/// holds the cells whose downsampled label is k and the BG bank holds every
/// other cell, including cells of other objects. Entries are appended in
/// row-major cell order.
///
/// Throws DegenerateTemplateError if an object keeps no cell after
/// downsampling. An empty BG bank (object fills the frame) is allowed.
inline std::vector<ObjectBanks> build_banks(const FeatureMap& frame, const LabelMask& tmpl) {
  detail::require(tmpl.object_count() >= 1, "build_banks: template has no objects");
  const LabelMask cells = downsample_labels(tmpl, frame.grid());

  std::vector<ObjectBanks> banks;
  banks.reserve(static_cast<std::size_t>(tmpl.object_count()));
  for (int k = 1; k <= tmpl.object_count(); ++k) {
    ObjectBanks b{FeatureBank(frame.channels()), FeatureBank(frame.channels())};
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const EntryOrigin origin{EntryKind::template_frame, 1, i};
      if (cells[i] == k)
        b.fg.append(frame.cell(i), origin);
      else
        b.bg.append(frame.cell(i), origin);
    }
    if (b.fg.empty()) throw DegenerateTemplateError(k);
    banks.push_back(std::move(b));
  }
  return banks;
}

}  // namespace softmatch
