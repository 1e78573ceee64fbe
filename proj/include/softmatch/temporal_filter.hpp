#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "softmatch/config.hpp"
#include "softmatch/core.hpp"

namespace softmatch {

/// Exact Euclidean distance (in pixels) to the nearest source pixel, stored
/// as integer squared distances. Pixels with no source anywhere hold kInfinite.
class DistanceField {
 public:
  static constexpr std::int64_t kInfinite = std::int64_t{1} << 50;

  DistanceField(std::size_t width, std::size_t height, std::vector<std::int64_t> squared)
      : width_(width), height_(height), squared_(std::move(squared)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::int64_t squared(std::size_t x, std::size_t y) const { return squared_[y * width_ + x]; }
  std::int64_t squared(std::size_t i) const { return squared_[i]; }

  double distance(std::size_t i) const {
    const std::int64_t s = squared_[i];
    return s >= kInfinite ? std::numeric_limits<double>::infinity()
                          : std::sqrt(static_cast<double>(s));
  }
  double distance(std::size_t x, std::size_t y) const { return distance(y * width_ + x); }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::int64_t> squared_;
};

namespace detail {

// One-dimensional squared-distance lower envelope of parabolas over f
// (Felzenszwalb & Huttenlocher). f and d may not alias.
inline void squared_edt_1d(const std::int64_t* f, std::size_t n, std::size_t step,
                           std::int64_t* d, std::vector<std::size_t>& v, std::vector<double>& z) {
  const double inf = std::numeric_limits<double>::infinity();
  v.resize(n);
  z.resize(n + 1);
  auto fv = [&](std::size_t q) { return static_cast<double>(f[q * step]); };
  auto intersect = [&](std::size_t q, std::size_t p) {
    const double dq = static_cast<double>(q), dp = static_cast<double>(p);
    return ((fv(q) + dq * dq) - (fv(p) + dp * dp)) / (2.0 * dq - 2.0 * dp);
  };

  std::size_t k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (std::size_t q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const auto dq = static_cast<std::int64_t>(q) - static_cast<std::int64_t>(v[k]);
    const std::int64_t val = dq * dq + f[v[k] * step];
    d[q * step] = val >= DistanceField::kInfinite ? DistanceField::kInfinite : val;
  }
}

template <typename IsSource>
DistanceField squared_edt(std::size_t width, std::size_t height, IsSource&& is_source) {
  std::vector<std::int64_t> f(width * height), g(width * height);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = is_source(i) ? 0 : DistanceField::kInfinite;

  std::vector<std::size_t> v;
  std::vector<double> z;
  for (std::size_t x = 0; x < width; ++x)
    squared_edt_1d(f.data() + x, height, width, g.data() + x, v, z);
  for (std::size_t y = 0; y < height; ++y)
    squared_edt_1d(g.data() + y * width, width, 1, f.data() + y * width, v, z);
  return DistanceField(width, height, std::move(f));
}

}  // namespace detail

/// Distance from every pixel to the nearest foreground (non-zero) pixel.
inline DistanceField distance_transform(const LabelMask& mask) {
  return detail::squared_edt(mask.width(), mask.height(),
                             [&](std::size_t i) { return mask[i] != 0; });
}

/// Extrusion: foreground where the distance to the mask is < dc, plus the
/// mask itself.
inline LabelMask extrude(const LabelMask& mask, double dc) {
  detail::require(dc >= 0.0, "extrude: dc must be >= 0");
  std::vector<LabelMask::Label> out(mask.size());
  if (dc == 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] != 0;
    return LabelMask(mask.width(), mask.height(), 1, std::move(out));
  }
  const DistanceField df = distance_transform(mask);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (mask[i] != 0 || df.distance(i) < dc);
  return LabelMask(mask.width(), mask.height(), 1, std::move(out));
}

/// Erosion: keeps foreground pixels whose distance to the nearest background
/// pixel exceeds r. Pixels outside the image do not count as background.
inline LabelMask erode(const LabelMask& mask, double r) {
  detail::require(r >= 0.0, "erode: radius must be >= 0");
  const DistanceField to_bg =
      detail::squared_edt(mask.width(), mask.height(), [&](std::size_t i) { return mask[i] == 0; });
  std::vector<LabelMask::Label> out(mask.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (mask[i] != 0 && to_bg.distance(i) > r);
  return LabelMask(mask.width(), mask.height(), 1, std::move(out));
}

/// 8-connected component ids of the foreground (0 = background, 1..n).
inline std::vector<std::uint32_t> connected_components(const LabelMask& mask,
                                                       std::uint32_t* count = nullptr) {
  const std::size_t w = mask.width(), h = mask.height();
  std::vector<std::uint32_t> ids(mask.size(), 0);
  std::vector<std::size_t> stack;
  std::uint32_t next = 0;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (mask[start] == 0 || ids[start] != 0) continue;
    ids[start] = ++next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t px = p % w, py = p / w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const auto nx = static_cast<std::ptrdiff_t>(px) + dx;
          const auto ny = static_cast<std::ptrdiff_t>(py) + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(w) ||
              ny >= static_cast<std::ptrdiff_t>(h))
            continue;
          const std::size_t q = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (mask[q] != 0 && ids[q] == 0) {
            ids[q] = next;
            stack.push_back(q);
          }
        }
      }
    }
  }
  if (count) *count = next;
  return ids;
}

/// Outlier removal. Pixel mode: y_init AND extrude(prev, dc). Component mode:
/// keeps each 8-connected component of y_init that touches extrude(prev, dc).
/// An empty previous mask disables the filter for that frame.
inline LabelMask remove_outliers(const LabelMask& y_init, const LabelMask& prev, double dc,
                                 OutlierMode mode = OutlierMode::pixel) {
  detail::require(y_init.same_shape(prev), "remove_outliers: mask shapes differ");
  std::vector<LabelMask::Label> out(y_init.size());
  if (prev.empty_foreground()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = y_init[i] != 0;
    return LabelMask(y_init.width(), y_init.height(), 1, std::move(out));
  }
  const LabelMask ext = extrude(prev, dc);
  if (mode == OutlierMode::pixel) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (y_init[i] != 0 && ext[i] != 0);
  } else {
    std::uint32_t n = 0;
    const auto ids = connected_components(y_init, &n);
    std::vector<char> keep(n + 1, 0);
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] != 0 && ext[i] != 0) keep[ids[i]] = 1;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ids[i] != 0 && keep[ids[i]];
  }
  return LabelMask(y_init.width(), y_init.height(), 1, std::move(out));
}

}  // namespace softmatch
