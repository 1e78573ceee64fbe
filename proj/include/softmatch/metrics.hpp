#pragma once

// Segmentation quality measures: region similarity (Jaccard / mIoU), contour
// accuracy F, and the keyframe-transfer error rate used for JumpCut.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "softmatch/core.hpp"
#include "softmatch/temporal_filter.hpp"

namespace softmatch {

struct SequenceScore {
  std::vector<double> per_frame;
  double mean = 0.0;

  static SequenceScore of(std::vector<double> values) {
    SequenceScore s{std::move(values), 0.0};
    if (!s.per_frame.empty())
      s.mean = std::accumulate(s.per_frame.begin(), s.per_frame.end(), 0.0) /
               static_cast<double>(s.per_frame.size());
    return s;
  }
};

/// |pred AND gt| / |pred OR gt| over non-zero pixels; 1 when both are empty.
inline double jaccard(const LabelMask& pred, const LabelMask& gt) {
  detail::require(pred.same_shape(gt), "jaccard: mask shapes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] != 0, b = gt[i] != 0;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Boundary pixels: foreground pixels with a 4-neighbour that is background or
/// outside the image.
inline LabelMask contour(const LabelMask& mask) {
  const std::size_t w = mask.width(), h = mask.height();
  std::vector<LabelMask::Label> out(mask.size(), 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (mask.at(x, y) == 0) continue;
      const bool edge = x == 0 || y == 0 || x + 1 == w || y + 1 == h || mask.at(x - 1, y) == 0 ||
                        mask.at(x + 1, y) == 0 || mask.at(x, y - 1) == 0 || mask.at(x, y + 1) == 0;
      out[y * w + x] = edge;
    }
  }
  return LabelMask(w, h, 1, std::move(out));
}

/// Default contour matching radius: 0.5% of the image diagonal, rounded up.
inline double default_contour_tolerance(std::size_t width, std::size_t height) {
  const double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
  return std::ceil(0.005 * diag);
}

/// Contour accuracy: F1 of boundary precision/recall where a boundary point
/// counts as matched if the other contour has a point within `tol` pixels.
inline double contour_f(const LabelMask& pred, const LabelMask& gt, double tol) {
  detail::require(pred.same_shape(gt), "contour_f: mask shapes differ");
  detail::require(tol >= 0.0, "contour_f: tolerance must be >= 0");
  const LabelMask cp = contour(pred), cg = contour(gt);
  const std::size_t np = cp.foreground_count(), ng = cg.foreground_count();
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;

  const DistanceField to_gt = distance_transform(cg);
  const DistanceField to_pred = distance_transform(cp);
  std::size_t hit_p = 0, hit_r = 0;
  for (std::size_t i = 0; i < cp.size(); ++i) {
    if (cp[i] != 0 && to_gt.distance(i) <= tol) ++hit_p;
    if (cg[i] != 0 && to_pred.distance(i) <= tol) ++hit_r;
  }
  const double precision = static_cast<double>(hit_p) / static_cast<double>(np);
  const double recall = static_cast<double>(hit_r) / static_cast<double>(ng);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

/// Mislabeled pixels (FP + FN) divided by the predicted foreground size.
/// Throws UndefinedMetricError on an empty prediction.
inline double jumpcut_error(const LabelMask& pred, const LabelMask& gt) {
  detail::require(pred.same_shape(gt), "jumpcut_error: mask shapes differ");
  std::size_t fp = 0, fn = 0, positives = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] != 0, b = gt[i] != 0;
    positives += a;
    fp += a && !b;
    fn += !a && b;
  }
  if (positives == 0) throw UndefinedMetricError("jumpcut_error: prediction has no foreground pixel");
  return static_cast<double>(fp + fn) / static_cast<double>(positives);
}

struct KeyframeOutcome {
  std::size_t keyframe = 0;
  std::size_t target = 0;
  std::optional<double> error;  // empty when skipped or undefined
  std::string note;
};

struct JumpCutResult {
  std::optional<double> error_rate;  // mean over scored keyframes
  std::vector<KeyframeOutcome> per_keyframe;
};

inline std::vector<std::size_t> default_keyframes() { return {0, 16, 32, 48, 64, 80, 96}; }

/// For every keyframe i: transfer(i, i + d) must return the prediction at
/// frame i + d given ground truth at frame i as the only template. Keyframes
/// whose target lies past the sequence are skipped; empty predictions are
/// excluded from the average. Both cases are noted per keyframe.
inline JumpCutResult jumpcut_protocol(
    std::size_t frame_count, const std::function<LabelMask(std::size_t, std::size_t)>& transfer,
    const std::function<LabelMask(std::size_t)>& ground_truth,
    const std::vector<std::size_t>& keyframes = default_keyframes(), std::size_t d = 16) {
  detail::require(d >= 1, "jumpcut_protocol: transfer distance must be >= 1");
  JumpCutResult result;
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t key : keyframes) {
    KeyframeOutcome o{key, key + d, std::nullopt, {}};
    if (key + d >= frame_count) {
      o.note = "skipped: sequence has " + std::to_string(frame_count) + " frames, target frame " +
               std::to_string(key + d) + " unavailable";
    } else {
      const LabelMask pred = transfer(key, key + d);
      try {
        o.error = jumpcut_error(pred, ground_truth(key + d));
        sum += *o.error;
        ++scored;
      } catch (const UndefinedMetricError&) {
        o.note = "excluded: empty prediction at target frame";
      }
    }
    result.per_keyframe.push_back(std::move(o));
  }
  if (scored > 0) result.error_rate = sum / static_cast<double>(scored);
  return result;
}

}  // namespace softmatch
