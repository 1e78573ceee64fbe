#pragma once

// Soft matching: cosine similarity of every frame cell against a feature bank,
// reduced per cell to the mean of its top-K similarities.
//
// The blocked strategy normalizes both sides once, packs frame rows into
// MR-row tiles and bank entries into NR-column panels, and runs a register-
// blocked inner-product microkernel whose results stream straight into a
// per-row bounded heap. Each similarity is produced by the same instruction
// sequence regardless of tile position or thread, so output is bit-identical
// for any thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "softmatch/config.hpp"
#include "softmatch/core.hpp"
#include "softmatch/detail/parallel.hpp"
#include "softmatch/detail/topk.hpp"

namespace softmatch {

/// h x w matching scores, one per feature cell, in [-1, 1].
struct ScoreMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> scores;

  float at(std::size_t row, std::size_t col) const { return scores[row * width + col]; }
  std::size_t size() const noexcept { return scores.size(); }

  static ScoreMap constant(std::size_t height, std::size_t width, float value) {
    return {height, width, std::vector<float>(height * width, value)};
  }

  friend bool operator==(const ScoreMap&, const ScoreMap&) = default;
};

struct KernelOptions {
  KernelStrategy strategy = KernelStrategy::blocked;
  int threads = 1;
};

inline constexpr double kZeroNorm = 1e-12;

/// Cosine similarity; 0 when either vector has (near) zero norm.
inline double cosine(std::span<const float> u, std::span<const float> v) {
  detail::require(u.size() == v.size(), "cosine: dimension mismatch");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += double{u[i]} * v[i];
    uu += double{u[i]} * u[i];
    vv += double{v[i]} * v[i];
  }
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  if (nu < kZeroNorm || nv < kZeroNorm) return 0.0;
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

namespace detail {

#if defined(__AVX512F__)
inline constexpr int kVecWidth = 16;
inline constexpr int kTileRows = 12;
#elif defined(__AVX__)
inline constexpr int kVecWidth = 8;
inline constexpr int kTileRows = 6;
#else
inline constexpr int kVecWidth = 4;
inline constexpr int kTileRows = 4;
#endif
inline constexpr int kPanelVecs = 2;
inline constexpr int kPanelCols = kVecWidth * kPanelVecs;
// Rows per parallel task; the frame block (kBlockRows x c floats) stays in L2
// while bank panels stream through L1.
inline constexpr int kTilesPerBlock = 16;
inline constexpr std::size_t kBlockRows = kTileRows * kTilesPerBlock;

typedef float vfloat __attribute__((vector_size(kVecWidth * sizeof(float))));

inline vfloat load_vec(const float* p) {
  vfloat v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store_vec(float* p, vfloat v) { std::memcpy(p, &v, sizeof(v)); }

// out[MR][NR] = clamp(a_tile . b_panel, -1, 1). a: [c][MR], b: [c][NR].
inline void microkernel(const float* a, const float* b, std::size_t c, float* out) {
  vfloat acc[kTileRows][kPanelVecs];
#pragma GCC unroll 16
  for (int i = 0; i < kTileRows; ++i)
#pragma GCC unroll 4
    for (int v = 0; v < kPanelVecs; ++v) acc[i][v] = vfloat{};
  for (std::size_t k = 0; k < c; ++k) {
    vfloat bv[kPanelVecs];
#pragma GCC unroll 4
    for (int v = 0; v < kPanelVecs; ++v) bv[v] = load_vec(b + k * kPanelCols + v * kVecWidth);
#pragma GCC unroll 16
    for (int i = 0; i < kTileRows; ++i) {
      const vfloat ai = a[k * kTileRows + i] - vfloat{};
#pragma GCC unroll 4
      for (int v = 0; v < kPanelVecs; ++v) acc[i][v] += ai * bv[v];
    }
  }
  const vfloat lo = vfloat{} - 1.0f, hi = vfloat{} + 1.0f;
#pragma GCC unroll 16
  for (int i = 0; i < kTileRows; ++i)
#pragma GCC unroll 4
    for (int v = 0; v < kPanelVecs; ++v) {
      vfloat x = acc[i][v];
      x = x < lo ? lo : x;
      x = x > hi ? hi : x;
      store_vec(out + i * kPanelCols + v * kVecWidth, x);
    }
}

// Unit-normalized copy of `rows` vectors of dimension c; near-zero vectors
// become all zeros.
inline std::vector<float> normalize_rows(std::span<const float> data, std::size_t rows,
                                         std::size_t c) {
  std::vector<float> out(rows * c, 0.0f);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* src = data.data() + r * c;
    double ss = 0.0;
    for (std::size_t k = 0; k < c; ++k) ss += double{src[k]} * src[k];
    const double norm = std::sqrt(ss);
    if (norm < kZeroNorm) continue;
    const double inv = 1.0 / norm;
    for (std::size_t k = 0; k < c; ++k) out[r * c + k] = static_cast<float>(src[k] * inv);
  }
  return out;
}

// Frame rows packed per tile as [tile][c][MR], zero-padded to whole tiles.
inline std::vector<float> pack_tiles(const std::vector<float>& rows, std::size_t n,
                                     std::size_t c, std::size_t tiles) {
  std::vector<float> packed(tiles * c * kTileRows, 0.0f);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t t = r / kTileRows, i = r % kTileRows;
    float* dst = packed.data() + t * c * kTileRows;
    for (std::size_t k = 0; k < c; ++k) dst[k * kTileRows + i] = rows[r * c + k];
  }
  return packed;
}

// Bank entries packed per panel as [panel][c][NR], zero-padded.
inline std::vector<float> pack_panels(const std::vector<float>& rows, std::size_t m,
                                      std::size_t c, std::size_t panels) {
  std::vector<float> packed(panels * c * kPanelCols, 0.0f);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t p = j / kPanelCols, col = j % kPanelCols;
    float* dst = packed.data() + p * c * kPanelCols;
    for (std::size_t k = 0; k < c; ++k) dst[k * kPanelCols + col] = rows[j * c + k];
  }
  return packed;
}

inline void check_match_inputs(const FeatureMap& frame, const FeatureBank& bank, std::size_t k) {
  require(!bank.empty(), "soft_match: feature bank is empty");
  require(bank.channels() == frame.channels(), "soft_match: channel mismatch between frame and bank");
  require(k >= 1, "soft_match: K must be >= 1");
  require(bank.size() <= std::numeric_limits<std::uint32_t>::max(), "soft_match: bank too large");
}

// Visits every similarity of a blocked-strategy evaluation: for each row
// block (one parallel task) and each bank panel, sink(block, first_row,
// rows_in_tile, first_col, cols_in_panel, tile) is called with a
// [MR][NR] result tile.
template <typename Sink>
void blocked_sweep(const FeatureMap& frame, const FeatureBank& bank, int threads, Sink&& sink) {
  const std::size_t n = frame.cells(), m = bank.size(), c = frame.channels();
  const std::size_t tiles = (n + kTileRows - 1) / kTileRows;
  const std::size_t panels = (m + kPanelCols - 1) / kPanelCols;
  const std::size_t blocks = (tiles + kTilesPerBlock - 1) / kTilesPerBlock;

  const auto a = pack_tiles(normalize_rows(frame.data(), n, c), n, c, tiles);
  const auto b = pack_panels(normalize_rows(bank.data(), m, c), m, c, panels);

  parallel_for(blocks, threads, [&](std::size_t block) {
    alignas(64) float tile[kTileRows * kPanelCols];
    const std::size_t t0 = block * kTilesPerBlock;
    const std::size_t t1 = std::min(tiles, t0 + kTilesPerBlock);
    for (std::size_t p = 0; p < panels; ++p) {
      const float* bp = b.data() + p * c * kPanelCols;
      const std::size_t j0 = p * kPanelCols;
      const std::size_t cols = std::min<std::size_t>(kPanelCols, m - j0);
      for (std::size_t t = t0; t < t1; ++t) {
        microkernel(a.data() + t * c * kTileRows, bp, c, tile);
        const std::size_t r0 = t * kTileRows;
        const std::size_t rows = std::min<std::size_t>(kTileRows, n - r0);
        sink(block, r0, rows, j0, cols, static_cast<const float*>(tile));
      }
    }
  });
}

inline ScoreMap soft_match_blocked(const FeatureMap& frame, const FeatureBank& bank, std::size_t k,
                                   int threads) {
  const std::size_t n = frame.cells();
  std::vector<TopK> heaps(n, TopK(std::min(k, bank.size())));
  blocked_sweep(frame, bank, threads,
                [&](std::size_t, std::size_t r0, std::size_t rows, std::size_t j0,
                    std::size_t cols, const float* tile) {
                  for (std::size_t i = 0; i < rows; ++i) {
                    TopK& heap = heaps[r0 + i];
                    float thr = heap.threshold();
                    const float* row = tile + i * kPanelCols;
                    for (std::size_t j = 0; j < cols; ++j) {
                      if (row[j] > thr) {
                        heap.push(row[j], static_cast<std::uint32_t>(j0 + j));
                        thr = heap.threshold();
                      }
                    }
                  }
                });
  ScoreMap out{frame.height(), frame.width(), std::vector<float>(n)};
  for (std::size_t i = 0; i < n; ++i) out.scores[i] = static_cast<float>(heaps[i].mean());
  return out;
}

inline float naive_dot(const float* x, const float* y, std::size_t c) {
  float s = 0.0f;
  for (std::size_t k = 0; k < c; ++k) s += x[k] * y[k];
  return std::clamp(s, -1.0f, 1.0f);
}

inline ScoreMap soft_match_naive(const FeatureMap& frame, const FeatureBank& bank, std::size_t k,
                                 int threads) {
  const std::size_t n = frame.cells(), m = bank.size(), c = frame.channels();
  const auto q = normalize_rows(frame.data(), n, c);
  const auto b = normalize_rows(bank.data(), m, c);
  ScoreMap out{frame.height(), frame.width(), std::vector<float>(n)};
  constexpr std::size_t kRowsPerTask = 64;
  parallel_for((n + kRowsPerTask - 1) / kRowsPerTask, threads, [&](std::size_t task) {
    TopK heap;
    const std::size_t end = std::min(n, (task + 1) * kRowsPerTask);
    for (std::size_t i = task * kRowsPerTask; i < end; ++i) {
      heap.reset(std::min(k, m));
      for (std::size_t j = 0; j < m; ++j)
        heap.push(naive_dot(q.data() + i * c, b.data() + j * c, c), static_cast<std::uint32_t>(j));
      out.scores[i] = static_cast<float>(heap.mean());
    }
  });
  return out;
}

}  // namespace detail

/// Top-K mean cosine score of every frame cell against `bank`. The effective
/// K is min(K, |bank|).
inline ScoreMap soft_match(const FeatureMap& frame, const FeatureBank& bank, std::size_t k,
                           const KernelOptions& options = {}) {
  detail::check_match_inputs(frame, bank, k);
  detail::require(options.threads >= 1, "soft_match: threads must be >= 1");
  if (options.strategy == KernelStrategy::naive)
    return detail::soft_match_naive(frame, bank, k, options.threads);
  return detail::soft_match_blocked(frame, bank, k, options.threads);
}

/// Reference implementation: double-precision cosine matrix, full sort per row.
inline ScoreMap soft_match_oracle(const FeatureMap& frame, const FeatureBank& bank, std::size_t k) {
  detail::check_match_inputs(frame, bank, k);
  const std::size_t n = frame.cells(), m = bank.size();
  const std::size_t keff = std::min(k, m);
  ScoreMap out{frame.height(), frame.width(), std::vector<float>(n)};
  std::vector<double> row(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) row[j] = cosine(frame.cell(i), bank.entry(j));
    std::sort(row.begin(), row.end(), std::greater<>());
    double sum = 0.0;
    for (std::size_t j = 0; j < keff; ++j) sum += row[j];
    out.scores[i] = static_cast<float>(sum / static_cast<double>(keff));
  }
  return out;
}

/// Materialized (cells x |bank|) similarity matrix, row-major, computed by
/// the same arithmetic path that `soft_match` uses for the given strategy.
inline std::vector<float> similarity_matrix(const FeatureMap& frame, const FeatureBank& bank,
                                            const KernelOptions& options = {}) {
  detail::check_match_inputs(frame, bank, 1);
  const std::size_t n = frame.cells(), m = bank.size(), c = frame.channels();
  std::vector<float> out(n * m);
  if (options.strategy == KernelStrategy::naive) {
    const auto q = detail::normalize_rows(frame.data(), n, c);
    const auto b = detail::normalize_rows(bank.data(), m, c);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        out[i * m + j] = detail::naive_dot(q.data() + i * c, b.data() + j * c, c);
    return out;
  }
  detail::blocked_sweep(frame, bank, options.threads,
                        [&](std::size_t, std::size_t r0, std::size_t rows, std::size_t j0,
                            std::size_t cols, const float* tile) {
                          for (std::size_t i = 0; i < rows; ++i)
                            std::copy_n(tile + i * detail::kPanelCols, cols,
                                        out.begin() + static_cast<std::ptrdiff_t>((r0 + i) * m + j0));
                        });
  return out;
}

/// Indices of the top-K bank entries for one frame cell, best first.
inline std::vector<std::uint32_t> top_k_indices(std::span<const float> similarity_row,
                                                std::size_t k) {
  detail::TopK heap(std::min(k, similarity_row.size()));
  for (std::size_t j = 0; j < similarity_row.size(); ++j)
    heap.push(similarity_row[j], static_cast<std::uint32_t>(j));
  std::vector<std::uint32_t> idx;
  for (const auto& e : heap.sorted()) idx.push_back(e.index);
  return idx;
}

}  // namespace softmatch
