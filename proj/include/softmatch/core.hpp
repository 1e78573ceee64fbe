#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softmatch/errors.hpp"

namespace softmatch {

// Feature-grid geometry: rows x cols cells, each covering stride x stride
// full-resolution pixels.
struct GridShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t stride = 1;

  std::size_t cells() const noexcept { return height * width; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Dense h x w x c grid of per-cell feature vectors, row-major by
/// (row, col, channel).
class FeatureMap {
 public:
  FeatureMap() = default;

  FeatureMap(std::size_t height, std::size_t width, std::size_t channels,
             std::size_t stride, std::vector<float> data)
      : height_(height), width_(width), channels_(channels), stride_(stride),
        data_(std::move(data)) {
    detail::require(height_ > 0 && width_ > 0 && channels_ > 0,
                    "FeatureMap dimensions must be positive");
    detail::require(stride_ >= 1, "FeatureMap stride must be >= 1");
    detail::require(data_.size() == height_ * width_ * channels_,
                    "FeatureMap data length must equal h*w*c");
    for (float v : data_) {
      detail::require(std::isfinite(v), "FeatureMap scalars must be finite");
    }
  }

  FeatureMap(std::size_t height, std::size_t width, std::size_t channels,
             std::size_t stride)
      : FeatureMap(height, width, channels, stride,
                   std::vector<float>(height * width * channels, 0.0f)) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t cells() const noexcept { return height_ * width_; }
  GridShape grid() const noexcept { return {height_, width_, stride_}; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> mutable_data() noexcept { return data_; }

  std::span<const float> cell(std::size_t index) const {
    return std::span<const float>(data_).subspan(index * channels_, channels_);
  }
  std::span<float> mutable_cell(std::size_t index) {
    return std::span<float>(data_).subspan(index * channels_, channels_);
  }
  std::span<const float> cell(std::size_t row, std::size_t col) const {
    return cell(row * width_ + col);
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::size_t stride_ = 1;
  std::vector<float> data_;
};

/// W x H integer label image: 0 is background, k in 1..N is object k.
class LabelMask {
 public:
  using Label = std::uint8_t;

  LabelMask() = default;

  LabelMask(std::size_t width, std::size_t height, int object_count,
            std::vector<Label> labels)
      : width_(width), height_(height), object_count_(object_count),
        labels_(std::move(labels)) {
    detail::require(width_ > 0 && height_ > 0, "LabelMask dimensions must be positive");
    detail::require(object_count_ >= 0 && object_count_ <= 255,
                    "LabelMask object count must be in [0, 255]");
    detail::require(labels_.size() == width_ * height_,
                    "LabelMask label count must equal W*H");
    for (Label l : labels_) {
      detail::require(l <= object_count_, "LabelMask label exceeds object count");
    }
  }

  // All-background mask.
  LabelMask(std::size_t width, std::size_t height, int object_count = 1)
      : LabelMask(width, height, object_count,
                  std::vector<Label>(width * height, 0)) {}

  // Object count taken as the largest label present.
  static LabelMask from_labels(std::size_t width, std::size_t height,
                               std::vector<Label> labels) {
    int n = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    return LabelMask(width, height, n, std::move(labels));
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return labels_.size(); }
  int object_count() const noexcept { return object_count_; }

  Label operator[](std::size_t i) const { return labels_[i]; }
  Label at(std::size_t x, std::size_t y) const { return labels_[y * width_ + x]; }
  void set(std::size_t x, std::size_t y, Label l) {
    detail::require(l <= object_count_, "label exceeds object count");
    labels_[y * width_ + x] = l;
  }
  void set(std::size_t i, Label l) {
    detail::require(l <= object_count_, "label exceeds object count");
    labels_[i] = l;
  }

  std::span<const Label> labels() const noexcept { return labels_; }

  bool same_shape(const LabelMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), l));
  }
  std::size_t foreground_count() const { return size() - count(0); }
  bool empty_foreground() const { return foreground_count() == 0; }

  // Binary (N = 1) mask of pixels carrying label k.
  LabelMask binary(Label k) const {
    std::vector<Label> out(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) out[i] = labels_[i] == k ? 1 : 0;
    return LabelMask(width_, height_, 1, std::move(out));
  }

  friend bool operator==(const LabelMask&, const LabelMask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  int object_count_ = 0;
  std::vector<Label> labels_;
};

/// W x H per-pixel foreground probability for one object.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;

  ProbabilityMap(std::size_t width, std::size_t height, std::vector<float> values)
      : width_(width), height_(height), values_(std::move(values)) {
    detail::require(width_ > 0 && height_ > 0, "ProbabilityMap dimensions must be positive");
    detail::require(values_.size() == width_ * height_,
                    "ProbabilityMap value count must equal W*H");
    for (float v : values_) {
      detail::require(v >= 0.0f && v <= 1.0f, "probability outside [0,1]");
    }
  }

  ProbabilityMap(std::size_t width, std::size_t height, float fill)
      : ProbabilityMap(width, height, std::vector<float>(width * height, fill)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  float operator[](std::size_t i) const { return values_[i]; }
  float at(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }
  std::span<const float> values() const noexcept { return values_; }

  bool same_shape(const ProbabilityMap& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<float> values_;
};

enum class EntryKind : std::uint8_t { template_frame, online_update };

struct EntryOrigin {
  EntryKind kind = EntryKind::template_frame;
  std::size_t frame = 1;  // 1-based frame index
  std::size_t cell = 0;   // grid index within that frame

  friend bool operator==(const EntryOrigin&, const EntryOrigin&) = default;
};

/// Growable set of c-dimensional feature vectors with provenance.
/// Append-only except for capacity eviction of online entries.
class FeatureBank {
 public:
  FeatureBank() = default;
  explicit FeatureBank(std::size_t channels) : channels_(channels) {
    detail::require(channels_ > 0, "FeatureBank channels must be positive");
  }

  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return origins_.size(); }
  bool empty() const noexcept { return origins_.empty(); }

  std::span<const float> entry(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * channels_, channels_);
  }
  const EntryOrigin& origin(std::size_t i) const { return origins_[i]; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const EntryOrigin> origins() const noexcept { return origins_; }

  void append(std::span<const float> v, EntryOrigin origin) {
    detail::require(v.size() == channels_, "bank entry dimension mismatch");
    for (float x : v) detail::require(std::isfinite(x), "bank entry must be finite");
    data_.insert(data_.end(), v.begin(), v.end());
    origins_.push_back(origin);
  }

  std::size_t count(EntryKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        origins_.begin(), origins_.end(), [kind](const EntryOrigin& o) { return o.kind == kind; }));
  }

  // Removes up to n oldest online-update entries; template entries are kept.
  std::size_t evict_oldest_online(std::size_t n) {
    std::size_t removed = 0;
    std::vector<float> data;
    std::vector<EntryOrigin> origins;
    data.reserve(data_.size());
    origins.reserve(origins_.size());
    for (std::size_t i = 0; i < origins_.size(); ++i) {
      if (removed < n && origins_[i].kind == EntryKind::online_update) {
        ++removed;
        continue;
      }
      auto e = entry(i);
      data.insert(data.end(), e.begin(), e.end());
      origins.push_back(origins_[i]);
    }
    data_ = std::move(data);
    origins_ = std::move(origins);
    return removed;
  }

  friend bool operator==(const FeatureBank&, const FeatureBank&) = default;

 private:
  std::size_t channels_ = 0;
  std::vector<float> data_;
  std::vector<EntryOrigin> origins_;
};

// ---------------------------------------------------------------------------
// Mask <-> feature grid projection
// ---------------------------------------------------------------------------

namespace detail {

inline void check_grid_compatible(std::size_t full, std::size_t cells, std::size_t stride,
                                  const char* axis) {
  const auto covered = static_cast<long long>(cells * stride);
  const auto diff = static_cast<long long>(full) - covered;
  if (cells == 0 || stride == 0 || diff <= -static_cast<long long>(stride) ||
      diff >= static_cast<long long>(stride)) {
    throw FormatError(FormatError::Kind::dimension_mismatch,
                      std::string("mask ") + axis + " of " + std::to_string(full) +
                          " px is incompatible with " + std::to_string(cells) +
                          " cells at stride " + std::to_string(stride));
  }
}

// Full-resolution pixel range [first, second) covered by cell `c` along an axis.
// The last cell absorbs any remainder when the image overhangs the grid.
inline std::pair<std::size_t, std::size_t> cell_span(std::size_t c, std::size_t cells,
                                                     std::size_t stride, std::size_t full) {
  std::size_t lo = std::min(c * stride, full);
  std::size_t hi = c + 1 == cells ? full : std::min((c + 1) * stride, full);
  return {lo, hi};
}

}  // namespace detail

/// Projects a full-resolution label mask onto the feature grid. Each cell takes
/// the plurality label of its covered pixels; ties prefer an object over
/// background and then the smaller object index.
inline LabelMask downsample_labels(const LabelMask& mask, const GridShape& grid) {
  detail::check_grid_compatible(mask.width(), grid.width, grid.stride, "width");
  detail::check_grid_compatible(mask.height(), grid.height, grid.stride, "height");

  std::vector<LabelMask::Label> out(grid.cells(), 0);
  std::array<std::size_t, 256> counts{};
  for (std::size_t r = 0; r < grid.height; ++r) {
    auto [y0, y1] = detail::cell_span(r, grid.height, grid.stride, mask.height());
    for (std::size_t c = 0; c < grid.width; ++c) {
      auto [x0, x1] = detail::cell_span(c, grid.width, grid.stride, mask.width());
      counts.fill(0);
      for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x) ++counts[mask.at(x, y)];

      // Objects first so that a tie with background resolves to the object.
      int best = 0;
      std::size_t best_count = 0;
      for (int k = 1; k <= mask.object_count(); ++k) {
        if (counts[k] > best_count) {
          best = k;
          best_count = counts[k];
        }
      }
      if (counts[0] > best_count) best = 0;
      out[r * grid.width + c] = static_cast<LabelMask::Label>(best);
    }
  }
  return LabelMask(grid.width, grid.height, mask.object_count(), std::move(out));
}

/// Grid indices (row-major) of cells assigned to object k.
inline std::vector<std::size_t> downsample_mask(const LabelMask& mask, const GridShape& grid,
                                                int k) {
  LabelMask cells = downsample_labels(mask, grid);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i] == k) idx.push_back(i);
  return idx;
}

}  // namespace softmatch
