#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "softmatch/core.hpp"
#include "softmatch/similarity.hpp"

namespace softmatch {

/// Full-resolution W x H grid of real values (upsampled scores).
struct ScoreImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> values;

  float at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

namespace detail {

// Source coordinate along one axis: cell c is centred on full-resolution
// position c*s + (s-1)/2; positions outside the first/last centre clamp.
struct AxisSample {
  std::size_t lo;
  std::size_t hi;
  double t;
};

inline AxisSample axis_sample(std::size_t pixel, std::size_t cells, std::size_t stride) {
  const double src =
      (static_cast<double>(pixel) - (static_cast<double>(stride) - 1.0) / 2.0) /
      static_cast<double>(stride);
  if (src <= 0.0) return {0, 0, 0.0};
  const double last = static_cast<double>(cells - 1);
  if (src >= last) return {cells - 1, cells - 1, 0.0};
  const auto lo = static_cast<std::size_t>(std::floor(src));
  return {lo, lo + 1, src - static_cast<double>(lo)};
}

}  // namespace detail

/// Bilinear upsampling of a cell score map to W x H pixels with cell centres
/// at stride offsets. Values stay within the input's [min, max].
inline ScoreImage upsample(const ScoreMap& scores, std::size_t width, std::size_t height,
                           std::size_t stride) {
  detail::require(scores.height > 0 && scores.width > 0, "upsample: empty score map");
  detail::require(stride >= 1, "upsample: stride must be >= 1");
  detail::require(width >= scores.width && height >= scores.height,
                  "upsample: target smaller than score map");

  std::vector<detail::AxisSample> xs(width), ys(height);
  for (std::size_t x = 0; x < width; ++x) xs[x] = detail::axis_sample(x, scores.width, stride);
  for (std::size_t y = 0; y < height; ++y) ys[y] = detail::axis_sample(y, scores.height, stride);

  ScoreImage out{width, height, std::vector<float>(width * height)};
  for (std::size_t y = 0; y < height; ++y) {
    const auto& sy = ys[y];
    for (std::size_t x = 0; x < width; ++x) {
      const auto& sx = xs[x];
      const double v00 = scores.at(sy.lo, sx.lo), v01 = scores.at(sy.lo, sx.hi);
      const double v10 = scores.at(sy.hi, sx.lo), v11 = scores.at(sy.hi, sx.hi);
      const double top = v00 + (v01 - v00) * sx.t;
      const double bottom = v10 + (v11 - v10) * sx.t;
      double v = top + (bottom - top) * sy.t;
      // Guard against rounding just outside the four corner values.
      const double lo = std::min({v00, v01, v10, v11}), hi = std::max({v00, v01, v10, v11});
      out.values[y * width + x] = static_cast<float>(std::clamp(v, lo, hi));
    }
  }
  return out;
}

struct SoftmaxParams {
  double w_fg = 1.0;
  double w_bg = 1.0;
  double temperature = 1.0;
};

/// Two-way weighted softmax:
///   p = exp(w_F S_F / tau) / (exp(w_F S_F / tau) + exp(w_B S_B / tau)).
inline ProbabilityMap fg_probability(const ScoreImage& fg, const ScoreImage& bg,
                                     const SoftmaxParams& params = {}) {
  detail::require(fg.width == bg.width && fg.height == bg.height,
                  "fg_probability: score grids differ in shape");
  detail::require(params.temperature > 0.0, "fg_probability: temperature must be positive");
  std::vector<float> p(fg.values.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = params.w_fg * fg.values[i] / params.temperature;
    const double b = params.w_bg * bg.values[i] / params.temperature;
    const double m = std::max(a, b);
    const double ea = std::exp(a - m), eb = std::exp(b - m);
    p[i] = static_cast<float>(std::clamp(ea / (ea + eb), 0.0, 1.0));
  }
  return ProbabilityMap(fg.width, fg.height, std::move(p));
}

/// Binary mask: label 1 where p > theta (strict).
inline LabelMask threshold(const ProbabilityMap& p, double theta) {
  detail::require(theta > 0.0 && theta < 1.0, "threshold: theta must lie in (0,1)");
  std::vector<LabelMask::Label> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] > theta ? 1 : 0;
  return LabelMask(p.width(), p.height(), 1, std::move(out));
}

}  // namespace softmatch
