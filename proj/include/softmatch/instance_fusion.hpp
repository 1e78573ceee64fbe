#pragma once

#include <cstddef>
#include <vector>

#include "softmatch/core.hpp"

namespace softmatch {

/// Per-pixel argmax over object probability maps; a pixel whose best
/// probability is below c2 is background. Ties go to the smaller object index.
inline LabelMask fuse(const std::vector<ProbabilityMap>& maps, double c2) {
  detail::require(!maps.empty(), "fuse: no probability maps");
  detail::require(maps.size() <= 255, "fuse: at most 255 objects");
  detail::require(c2 > 0.0 && c2 < 1.0, "fuse: c2 must lie in (0,1)");
  for (const auto& m : maps) detail::require(m.same_shape(maps.front()), "fuse: map shapes differ");

  const std::size_t n = maps.front().size();
  std::vector<LabelMask::Label> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    float best_p = maps[0][i];
    for (std::size_t k = 1; k < maps.size(); ++k) {
      if (maps[k][i] > best_p) {
        best = k;
        best_p = maps[k][i];
      }
    }
    if (best_p >= c2) out[i] = static_cast<LabelMask::Label>(best + 1);
  }
  return LabelMask(maps.front().width(), maps.front().height(), static_cast<int>(maps.size()),
                   std::move(out));
}

}  // namespace softmatch
