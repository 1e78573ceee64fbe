#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "softmatch/errors.hpp"

namespace softmatch {

enum class KernelStrategy { naive, blocked };

inline std::string_view to_string(KernelStrategy s) {
  return s == KernelStrategy::naive ? "naive" : "blocked";
}

inline KernelStrategy parse_kernel_strategy(std::string_view s) {
  if (s == "naive") return KernelStrategy::naive;
  if (s == "blocked") return KernelStrategy::blocked;
  throw ContractViolation("unknown kernel strategy '" + std::string(s) + "'");
}

// How an initial prediction is reconciled with the extruded previous mask.
enum class OutlierMode {
  pixel,      // per-pixel intersection
  component,  // keep whole connected components that touch the extruded mask
};

inline std::string_view to_string(OutlierMode m) {
  return m == OutlierMode::pixel ? "pixel" : "component";
}

inline OutlierMode parse_outlier_mode(std::string_view s) {
  if (s == "pixel") return OutlierMode::pixel;
  if (s == "component") return OutlierMode::component;
  throw ContractViolation("unknown outlier mode '" + std::string(s) + "'");
}

struct Config {
  std::size_t k = 20;               // top-K matches averaged per pixel
  double dc = 100.0;                // extrusion distance, full-resolution px
  double c1 = 0.95;                 // FG-update confidence threshold
  double c2 = 0.4;                  // multi-object background threshold
  double erosion_radius = 5.0;      // FG-update erosion, full-resolution px
  double w_fg = 1.0;                // softmax weights
  double w_bg = 1.0;
  double softmax_temperature = 1.0;
  double single_object_threshold = 0.5;

  bool outlier_removal = true;
  bool bg_update = true;
  bool fg_update = true;
  OutlierMode outlier_mode = OutlierMode::pixel;

  // Ablation: score against the FG bank only; BG score is this constant.
  bool bg_matching = true;
  double fg_only_bg_score = 0.0;

  std::optional<std::size_t> bank_capacity;

  KernelStrategy kernel = KernelStrategy::blocked;
  int threads = 1;

  void validate() const {
    detail::require(k >= 1, "K must be >= 1");
    detail::require(c1 > 0.0 && c1 < 1.0, "c1 must lie in (0,1)");
    detail::require(c2 > 0.0 && c2 < 1.0, "c2 must lie in (0,1)");
    detail::require(dc >= 0.0, "dc must be >= 0");
    detail::require(erosion_radius >= 0.0, "erosion radius must be >= 0");
    detail::require(w_fg > 0.0 && w_bg > 0.0, "softmax weights must be positive");
    detail::require(softmax_temperature > 0.0, "softmax temperature must be positive");
    detail::require(single_object_threshold > 0.0 && single_object_threshold < 1.0,
                    "single-object threshold must lie in (0,1)");
    detail::require(!bank_capacity || *bank_capacity > 0, "bank capacity must be positive");
    detail::require(threads >= 1, "threads must be >= 1");
  }
};

}  // namespace softmatch
