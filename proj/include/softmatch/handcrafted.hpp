#pragma once

// Handcrafted per-cell features, a stand-in for a deep backbone:
//   mean RGB (3) | hue histogram (8) | gradient orientation histogram (8) |
//   cell position (2, optional)
// Each block is L2-normalized on its own; all-zero blocks stay zero.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "softmatch/core.hpp"
#include "softmatch/image_io.hpp"

namespace softmatch {

struct HandcraftedOptions {
  std::size_t stride = 8;
  std::size_t cell = 8;
  bool positional = true;
};

inline constexpr std::size_t kHueBins = 8;
inline constexpr std::size_t kOrientationBins = 8;

inline std::size_t handcrafted_channels(const HandcraftedOptions& opt) {
  return 3 + kHueBins + kOrientationBins + (opt.positional ? 2 : 0);
}

namespace detail {

inline void l2_normalize(std::span<double> block) {
  double ss = 0.0;
  for (double v : block) ss += v * v;
  if (ss <= 0.0) return;
  const double inv = 1.0 / std::sqrt(ss);
  for (double& v : block) v *= inv;
}

// Hue in degrees [0, 360) and saturation (chroma / max); saturation 0 for greys.
inline void hue_saturation(double r, double g, double b, double& hue, double& sat) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double chroma = mx - mn;
  if (chroma <= 0.0 || mx <= 0.0) {
    hue = 0.0;
    sat = 0.0;
    return;
  }
  sat = chroma / mx;
  double h;
  if (mx == r)
    h = (g - b) / chroma;
  else if (mx == g)
    h = 2.0 + (b - r) / chroma;
  else
    h = 4.0 + (r - g) / chroma;
  h *= 60.0;
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  hue = h;
}

}  // namespace detail

/// Feature map with one cell per `stride` pixels (ceil division), each cell
/// summarizing a `cell` x `cell` window anchored at its top-left corner.
inline FeatureMap extract_handcrafted(const RgbImage& image, const HandcraftedOptions& opt = {}) {
  if (image.rgb.size() != image.width * image.height * 3 || image.width == 0 || image.height == 0)
    throw FormatError(FormatError::Kind::unsupported_image, "extract_handcrafted: not an RGB image");
  detail::require(opt.stride >= 1 && opt.cell >= 1, "extract_handcrafted: stride and cell must be >= 1");
  detail::require(image.width >= opt.cell && image.height >= opt.cell,
                  "extract_handcrafted: image smaller than one cell");

  const std::size_t W = image.width, H = image.height, s = opt.stride;
  const std::size_t gw = (W + s - 1) / s, gh = (H + s - 1) / s;
  const std::size_t channels = handcrafted_channels(opt);

  std::vector<double> gray(W * H);
  for (std::size_t i = 0; i < W * H; ++i) {
    const auto* p = image.rgb.data() + 3 * i;
    gray[i] = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
  }
  auto g = [&](std::size_t x, std::size_t y) { return gray[y * W + x]; };

  std::vector<float> data(gh * gw * channels, 0.0f);
  std::vector<double> f(channels);
  for (std::size_t r = 0; r < gh; ++r) {
    for (std::size_t c = 0; c < gw; ++c) {
      std::fill(f.begin(), f.end(), 0.0);
      std::span<double> rgb(f.data(), 3);
      std::span<double> hue(f.data() + 3, kHueBins);
      std::span<double> orient(f.data() + 3 + kHueBins, kOrientationBins);

      const std::size_t x0 = c * s, y0 = r * s;
      const std::size_t x1 = std::min(x0 + opt.cell, W), y1 = std::min(y0 + opt.cell, H);
      std::size_t count = 0;
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          const auto* p = image.pixel(x, y);
          const double R = p[0] / 255.0, G = p[1] / 255.0, B = p[2] / 255.0;
          rgb[0] += R;
          rgb[1] += G;
          rgb[2] += B;
          ++count;

          double h, sat;
          detail::hue_saturation(p[0], p[1], p[2], h, sat);
          if (sat > 0.0)
            hue[std::min(kHueBins - 1, static_cast<std::size_t>(h / (360.0 / kHueBins)))] += sat;

          const double gx = g(std::min(x + 1, W - 1), y) - g(x > 0 ? x - 1 : 0, y);
          const double gy = g(x, std::min(y + 1, H - 1)) - g(x, y > 0 ? y - 1 : 0);
          const double mag = std::hypot(gx, gy);
          if (mag > 0.0) {
            const double step = 2.0 * std::numbers::pi / kOrientationBins;
            const double a = std::atan2(gy, gx);  // (-pi, pi]
            const auto bin = static_cast<long>(std::lround(a / step));
            orient[static_cast<std::size_t>((bin % static_cast<long>(kOrientationBins) +
                                             static_cast<long>(kOrientationBins)) %
                                            static_cast<long>(kOrientationBins))] += mag;
          }
        }
      }
      for (double& v : rgb) v /= static_cast<double>(count);
      detail::l2_normalize(rgb);
      detail::l2_normalize(hue);
      detail::l2_normalize(orient);
      if (opt.positional) {
        std::span<double> pos(f.data() + 3 + kHueBins + kOrientationBins, 2);
        pos[0] = (static_cast<double>(c) + 0.5) / static_cast<double>(gw);
        pos[1] = (static_cast<double>(r) + 0.5) / static_cast<double>(gh);
        detail::l2_normalize(pos);
      }
      float* dst = data.data() + (r * gw + c) * channels;
      for (std::size_t k = 0; k < channels; ++k) dst[k] = static_cast<float>(f[k]);
    }
  }
  return FeatureMap(gh, gw, channels, s, std::move(data));
}

}  // namespace softmatch
