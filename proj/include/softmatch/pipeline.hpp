#pragma once

// Sequence propagation: template banks from frame 1, then for every later
// frame soft matching against each object's FG/BG banks, two-way softmax,
// binarization/fusion, outlier removal against the previous mask, and online
// bank growth.

#include <chrono>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "softmatch/bank_builder.hpp"
#include "softmatch/bank_update.hpp"
#include "softmatch/config.hpp"
#include "softmatch/core.hpp"
#include "softmatch/detail/parallel.hpp"
#include "softmatch/instance_fusion.hpp"
#include "softmatch/segmentation_head.hpp"
#include "softmatch/similarity.hpp"
#include "softmatch/temporal_filter.hpp"

namespace softmatch {

// ---------------------------------------------------------------------------
// Config <-> JSON. Keys mirror the CLI flags.
// ---------------------------------------------------------------------------

inline nlohmann::json config_to_json(const Config& c, bool include_threads = true) {
  nlohmann::json j = {
      {"k", c.k},
      {"dc", c.dc},
      {"c1", c.c1},
      {"c2", c.c2},
      {"erosion", c.erosion_radius},
      {"w_fg", c.w_fg},
      {"w_bg", c.w_bg},
      {"softmax_temp", c.softmax_temperature},
      {"single_threshold", c.single_object_threshold},
      {"outlier_removal", c.outlier_removal},
      {"outlier_mode", std::string(to_string(c.outlier_mode))},
      {"bg_update", c.bg_update},
      {"fg_update", c.fg_update},
      {"bg_matching", c.bg_matching},
      {"fg_only_bg_score", c.fg_only_bg_score},
      {"bank_capacity", c.bank_capacity ? nlohmann::json(*c.bank_capacity) : nlohmann::json(nullptr)},
      {"kernel", std::string(to_string(c.kernel))},
  };
  if (include_threads) j["threads"] = c.threads;
  return j;
}

/// Applies the keys present in `j` on top of `base`; unknown keys are rejected.
inline Config config_from_json(const nlohmann::json& j, Config base = {}) {
  detail::require(j.is_object(), "config JSON must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "k") base.k = value.get<std::size_t>();
    else if (key == "dc") base.dc = value.get<double>();
    else if (key == "c1") base.c1 = value.get<double>();
    else if (key == "c2") base.c2 = value.get<double>();
    else if (key == "erosion") base.erosion_radius = value.get<double>();
    else if (key == "w_fg") base.w_fg = value.get<double>();
    else if (key == "w_bg") base.w_bg = value.get<double>();
    else if (key == "softmax_temp") base.softmax_temperature = value.get<double>();
    else if (key == "single_threshold") base.single_object_threshold = value.get<double>();
    else if (key == "outlier_removal") base.outlier_removal = value.get<bool>();
    else if (key == "outlier_mode") base.outlier_mode = parse_outlier_mode(value.get<std::string>());
    else if (key == "bg_update") base.bg_update = value.get<bool>();
    else if (key == "fg_update") base.fg_update = value.get<bool>();
    else if (key == "bg_matching") base.bg_matching = value.get<bool>();
    else if (key == "fg_only_bg_score") base.fg_only_bg_score = value.get<double>();
    else if (key == "bank_capacity") {
      if (value.is_null()) base.bank_capacity.reset();
      else base.bank_capacity = value.get<std::size_t>();
    } else if (key == "kernel") base.kernel = parse_kernel_strategy(value.get<std::string>());
    else if (key == "threads") base.threads = value.get<int>();
    else throw ContractViolation("unknown config key '" + key + "'");
  }
  base.validate();
  return base;
}

// ---------------------------------------------------------------------------
// Per-frame records
// ---------------------------------------------------------------------------

struct ObjectFrameRecord {
  int object = 0;
  std::size_t fg_bank = 0;  // sizes after this frame's update
  std::size_t bg_bank = 0;
  std::size_t initial_pixels = 0;
  std::size_t final_pixels = 0;
  UpdateReport update;
};

struct FrameRecord {
  std::size_t frame = 0;  // 1-based
  bool outlier_removal = false;
  bool bg_update = false;
  bool fg_update = false;
  bool bg_matching = false;
  std::vector<ObjectFrameRecord> objects;
};

struct FrameTiming {
  std::size_t frame = 0;
  double match_ms = 0.0;
  double total_ms = 0.0;
};

struct FrameOutput {
  LabelMask mask;
  LabelMask initial;                         // before outlier removal
  std::vector<ProbabilityMap> probabilities;  // one per object
  FrameRecord record;
  FrameTiming timing;
};

/// Stateful single-sequence tracker. Frames must be fed in order.
class Propagator {
 public:
  explicit Propagator(Config cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  void initialize(const FeatureMap& first, const LabelMask& tmpl) {
    detail::require(tmpl.object_count() >= 1, "propagate: template has no objects");
    banks_ = build_banks(first, tmpl);
    grid_ = first.grid();
    channels_ = first.channels();
    previous_ = tmpl;
    frame_index_ = 1;
  }

  const std::vector<ObjectBanks>& banks() const noexcept { return banks_; }
  const Config& config() const noexcept { return cfg_; }
  std::size_t frame_index() const noexcept { return frame_index_; }
  const LabelMask& previous() const noexcept { return previous_; }

  FrameOutput step(const FeatureMap& frame) {
    detail::require(frame_index_ >= 1, "propagate: step() before initialize()");
    detail::require(frame.grid() == grid_ && frame.channels() == channels_,
                    "propagate: frame feature shape differs from the template frame");
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();
    const std::size_t t = ++frame_index_;
    const std::size_t W = previous_.width(), H = previous_.height();
    const std::size_t n_obj = banks_.size();
    const int n = static_cast<int>(n_obj);

    // Per-object matching; objects run in parallel, splitting the thread budget.
    const int outer = std::min<int>(cfg_.threads, n);
    const KernelOptions kopt{cfg_.kernel, std::max(1, cfg_.threads / std::max(outer, 1))};
    const SoftmaxParams sp{cfg_.w_fg, cfg_.w_bg, cfg_.softmax_temperature};
    std::vector<ProbabilityMap> probs(n_obj);
    detail::parallel_for(n_obj, outer, [&](std::size_t k) {
      const ObjectBanks& b = banks_[k];
      const ScoreMap fg = soft_match(frame, b.fg, cfg_.k, kopt);
      ScoreMap bg;
      if (!cfg_.bg_matching)
        bg = ScoreMap::constant(frame.height(), frame.width(), static_cast<float>(cfg_.fg_only_bg_score));
      else if (b.bg.empty())
        bg = ScoreMap::constant(frame.height(), frame.width(), -1.0f);
      else
        bg = soft_match(frame, b.bg, cfg_.k, kopt);
      probs[k] = fg_probability(upsample(fg, W, H, grid_.stride), upsample(bg, W, H, grid_.stride), sp);
    });
    const auto t_matched = clock::now();

    const LabelMask initial =
        n == 1 ? threshold(probs[0], cfg_.single_object_threshold) : fuse(probs, cfg_.c2);

    std::vector<LabelMask::Label> labels(W * H, 0);
    std::vector<LabelMask> kept(n_obj);
    for (int k = 1; k <= n; ++k) {
      const LabelMask init_k = initial.binary(static_cast<LabelMask::Label>(k));
      kept[k - 1] = cfg_.outlier_removal
                        ? remove_outliers(init_k, previous_.binary(static_cast<LabelMask::Label>(k)),
                                          cfg_.dc, cfg_.outlier_mode)
                        : init_k;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (kept[k - 1][i] != 0) labels[i] = static_cast<LabelMask::Label>(k);
    }
    LabelMask result(W, H, n, std::move(labels));

    FrameRecord record{t, cfg_.outlier_removal, cfg_.bg_update, cfg_.fg_update, cfg_.bg_matching, {}};
    std::vector<UpdateReport> reports(n_obj);
    detail::parallel_for(n_obj, outer, [&](std::size_t k) {
      reports[k] = update_banks(frame, initial.binary(static_cast<LabelMask::Label>(k + 1)), kept[k],
                                probs[k], banks_[k], cfg_, t);
    });
    for (std::size_t k = 0; k < n_obj; ++k) {
      const auto label = static_cast<LabelMask::Label>(k + 1);
      record.objects.push_back({static_cast<int>(k + 1), banks_[k].fg.size(), banks_[k].bg.size(),
                                initial.count(label), result.count(label), std::move(reports[k])});
    }

    previous_ = result;
    const auto t_end = clock::now();
    FrameTiming timing{t, std::chrono::duration<double, std::milli>(t_matched - t_start).count(),
                       std::chrono::duration<double, std::milli>(t_end - t_start).count()};
    return {std::move(result), initial, std::move(probs), std::move(record), timing};
  }

 private:
  Config cfg_;
  std::vector<ObjectBanks> banks_;
  GridShape grid_;
  std::size_t channels_ = 0;
  LabelMask previous_;
  std::size_t frame_index_ = 0;
};

// ---------------------------------------------------------------------------
// Whole-sequence runs
// ---------------------------------------------------------------------------

/// Feature map of frame `index` (0-based).
using FeatureSource = std::function<FeatureMap(std::size_t)>;

struct PropagationResult {
  std::vector<LabelMask> masks;  // masks[0] is the template
  std::vector<FrameRecord> records;
  std::vector<FrameTiming> timings;
  std::vector<std::vector<ProbabilityMap>> probabilities;  // filled when requested; [t-2][k]
};

struct PropagateOptions {
  bool keep_probabilities = false;
  // Called after every processed frame (t >= 2) with its output.
  std::function<void(std::size_t, const FrameOutput&)> on_frame;
};

inline PropagationResult propagate(std::size_t frame_count, const FeatureSource& source,
                                   const LabelMask& tmpl, const Config& cfg,
                                   const PropagateOptions& options = {}) {
  detail::require(frame_count >= 2, "propagate: need at least two frames");
  Propagator prop(cfg);
  prop.initialize(source(0), tmpl);

  PropagationResult out;
  out.masks.push_back(tmpl);
  for (std::size_t i = 1; i < frame_count; ++i) {
    FrameOutput f = prop.step(source(i));
    if (options.on_frame) options.on_frame(i + 1, f);
    out.masks.push_back(std::move(f.mask));
    out.records.push_back(std::move(f.record));
    out.timings.push_back(f.timing);
    if (options.keep_probabilities) out.probabilities.push_back(std::move(f.probabilities));
  }
  return out;
}

/// Deterministic run log: configuration (without the thread count), bank
/// sizes and update reports per frame. Timings are kept out of it.
inline nlohmann::json run_log(const PropagationResult& r, const Config& cfg, const LabelMask& tmpl) {
  nlohmann::json frames = nlohmann::json::array();
  for (const FrameRecord& f : r.records) {
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : f.objects) {
      objects.push_back({
          {"object", o.object},
          {"fg_bank", o.fg_bank},
          {"bg_bank", o.bg_bank},
          {"initial_pixels", o.initial_pixels},
          {"final_pixels", o.final_pixels},
          {"update",
           {{"bg_added", o.update.bg_added},
            {"fg_added", o.update.fg_added},
            {"bg_evicted", o.update.bg_evicted},
            {"fg_evicted", o.update.fg_evicted},
            {"b_t", o.update.b_t},
            {"fg_indices", o.update.fg_indices}}},
      });
    }
    frames.push_back({{"frame", f.frame},
                      {"modules",
                       {{"outlier_removal", f.outlier_removal},
                        {"bg_update", f.bg_update},
                        {"fg_update", f.fg_update},
                        {"bg_matching", f.bg_matching}}},
                      {"objects", objects}});
  }
  return {{"config", config_to_json(cfg, false)},
          {"objects", tmpl.object_count()},
          {"width", tmpl.width()},
          {"height", tmpl.height()},
          {"frame_count", r.masks.size()},
          {"frames", frames}};
}

inline nlohmann::json timing_log(const PropagationResult& r) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& t : r.timings)
    frames.push_back({{"frame", t.frame}, {"match_ms", t.match_ms}, {"total_ms", t.total_ms}});
  return {{"frames", frames}};
}

}  // namespace softmatch
