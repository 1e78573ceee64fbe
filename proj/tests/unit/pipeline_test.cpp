#include <gtest/gtest.h>

#include "softmatch/handcrafted.hpp"
#include "softmatch/metrics.hpp"
#include "softmatch/pipeline.hpp"
#include "softmatch/synthetic.hpp"

using namespace softmatch;

namespace {

synthetic::SceneSpec small_scene(int objects = 1) {
  synthetic::SceneSpec s;
  s.name = "small";
  s.width = 128;
  s.height = 96;
  s.frames = 8;
  s.seed = 5;
  s.objects = {{{16, 24, 40, 40}, 3, 1, {200, 40, 40}}};
  if (objects == 2) s.objects.push_back({{80, 40, 32, 32}, -2, 0, {230, 200, 40}});
  return s;
}

FeatureSource source_of(const synthetic::Sequence& seq) {
  return [&seq](std::size_t i) { return extract_handcrafted(seq.frames.at(i)); };
}

double mean_jaccard(const PropagationResult& r, const synthetic::Sequence& seq, int k) {
  double s = 0.0;
  for (std::size_t t = 1; t < r.masks.size(); ++t)
    s += jaccard(r.masks[t].binary(static_cast<LabelMask::Label>(k)),
                 seq.ground_truth[t].binary(static_cast<LabelMask::Label>(k)));
  return s / double(r.masks.size() - 1);
}

}  // namespace

TEST(Propagate, TwoIdenticalFramesReproduceTheTemplate) {
  synthetic::SceneSpec spec = small_scene();
  spec.frames = 1;
  spec.objects[0].start = {32, 16, 64, 64};
  const auto seq = synthetic::render(spec);
  const FeatureMap f = extract_handcrafted(seq.frames[0]);
  const auto r = propagate(2, [&](std::size_t) { return f; }, seq.ground_truth[0], Config{});
  EXPECT_GE(jaccard(r.masks[1], seq.ground_truth[0]), 0.95);
}

TEST(Propagate, FirstOutputIsTheTemplateVerbatim) {
  const auto seq = synthetic::render(small_scene());
  const auto r = propagate(3, source_of(seq), seq.ground_truth[0], Config{});
  ASSERT_EQ(r.masks.size(), 3u);
  EXPECT_EQ(r.masks[0], seq.ground_truth[0]);
  EXPECT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].frame, 2u);
}

TEST(Propagate, TracksAMovingSquare) {
  const auto seq = synthetic::render(small_scene());
  const auto r = propagate(seq.frames.size(), source_of(seq), seq.ground_truth[0], synthetic::benchmark_config());
  EXPECT_GE(mean_jaccard(r, seq, 1), 0.9);
}

TEST(Propagate, TwoObjectsKeepTheirLabels) {
  const auto seq = synthetic::render(small_scene(2));
  const auto r = propagate(seq.frames.size(), source_of(seq), seq.ground_truth[0], synthetic::benchmark_config());
  EXPECT_EQ(r.masks.back().object_count(), 2);
  EXPECT_GE(mean_jaccard(r, seq, 1), 0.85);
  EXPECT_GE(mean_jaccard(r, seq, 2), 0.85);
}

TEST(Propagate, PrefixRunsGivePrefixOutputs) {
  const auto seq = synthetic::render(small_scene(2));
  const Config cfg = synthetic::benchmark_config();
  const auto full = propagate(seq.frames.size(), source_of(seq), seq.ground_truth[0], cfg);
  const auto prefix = propagate(4, source_of(seq), seq.ground_truth[0], cfg);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(prefix.masks[t], full.masks[t]);
  const auto full_frames = run_log(full, cfg, seq.ground_truth[0])["frames"];
  const auto prefix_frames = run_log(prefix, cfg, seq.ground_truth[0])["frames"];
  ASSERT_EQ(prefix_frames.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(prefix_frames[i], full_frames[i]);
}

TEST(Propagate, ThreadCountDoesNotChangeResults) {
  const auto seq = synthetic::render(small_scene(2));
  Config cfg = synthetic::benchmark_config();
  const auto one = propagate(seq.frames.size(), source_of(seq), seq.ground_truth[0], cfg);
  cfg.threads = 5;
  const auto five = propagate(seq.frames.size(), source_of(seq), seq.ground_truth[0], cfg);
  EXPECT_EQ(one.masks, five.masks);
  EXPECT_EQ(run_log(one, cfg, seq.ground_truth[0]).dump(), run_log(five, cfg, seq.ground_truth[0]).dump());
  cfg.kernel = KernelStrategy::naive;
  const auto naive = propagate(seq.frames.size(), source_of(seq), seq.ground_truth[0], cfg);
  EXPECT_GE(mean_jaccard(naive, seq, 1), mean_jaccard(one, seq, 1) - 0.01);
}

TEST(Propagate, DisabledUpdatesKeepFirstFrameBanks) {
  const auto seq = synthetic::render(small_scene());
  Config cfg = synthetic::benchmark_config();
  cfg.bg_update = false;
  cfg.fg_update = false;
  Propagator prop(cfg);
  prop.initialize(extract_handcrafted(seq.frames[0]), seq.ground_truth[0]);
  const auto initial = prop.banks();
  for (std::size_t i = 1; i < seq.frames.size(); ++i) prop.step(extract_handcrafted(seq.frames[i]));
  ASSERT_EQ(prop.banks().size(), 1u);
  EXPECT_EQ(prop.banks()[0].fg, initial[0].fg);
  EXPECT_EQ(prop.banks()[0].bg, initial[0].bg);
}

TEST(Propagate, BanksNeverShrinkWithUnboundedCapacity) {
  const auto seq = synthetic::render(small_scene());
  const auto r = propagate(seq.frames.size(), source_of(seq), seq.ground_truth[0], synthetic::benchmark_config());
  std::size_t fg = 0, bg = 0;
  for (const auto& rec : r.records) {
    EXPECT_GE(rec.objects[0].fg_bank, fg);
    EXPECT_GE(rec.objects[0].bg_bank, bg);
    fg = rec.objects[0].fg_bank;
    bg = rec.objects[0].bg_bank;
  }
  EXPECT_GT(fg, r.records.front().objects[0].fg_bank - r.records.front().objects[0].update.fg_added);
}

TEST(Propagate, AblationFlagsAppearInTheLog) {
  const auto seq = synthetic::render(small_scene());
  Config cfg = synthetic::benchmark_config();
  cfg.outlier_removal = false;
  cfg.fg_update = false;
  const auto r = propagate(4, source_of(seq), seq.ground_truth[0], cfg);
  const auto log = run_log(r, cfg, seq.ground_truth[0]);
  EXPECT_FALSE(log["config"].contains("threads"));
  for (const auto& f : log["frames"]) {
    EXPECT_FALSE(f["modules"]["outlier_removal"].get<bool>());
    EXPECT_TRUE(f["modules"]["bg_update"].get<bool>());
    EXPECT_FALSE(f["modules"]["fg_update"].get<bool>());
    EXPECT_EQ(f["objects"][0]["update"]["fg_added"], 0);
    // Without the filter the final mask is the initial prediction.
    EXPECT_EQ(f["objects"][0]["initial_pixels"], f["objects"][0]["final_pixels"]);
  }
}

TEST(Propagate, ForegroundOnlyScoringUsesConstantBackground) {
  const auto seq = synthetic::render(small_scene());
  Config cfg = synthetic::benchmark_config();
  cfg.bg_matching = false;
  const auto fg_only = propagate(seq.frames.size(), source_of(seq), seq.ground_truth[0], cfg);
  const auto both = propagate(seq.frames.size(), source_of(seq), seq.ground_truth[0], synthetic::benchmark_config());
  EXPECT_GT(mean_jaccard(both, seq, 1), mean_jaccard(fg_only, seq, 1));
  EXPECT_FALSE(run_log(fg_only, cfg, seq.ground_truth[0])["frames"][0]["modules"]["bg_matching"].get<bool>());
}

TEST(Propagate, ContractChecks) {
  const auto seq = synthetic::render(small_scene());
  EXPECT_THROW(propagate(1, source_of(seq), seq.ground_truth[0], Config{}), ContractViolation);
  EXPECT_THROW(propagate(2, source_of(seq), LabelMask(128, 96), Config{}), DegenerateTemplateError);
  EXPECT_THROW(propagate(2, source_of(seq), LabelMask(128, 96 + 8, 1), Config{}), FormatError);
  Propagator p(Config{});
  EXPECT_THROW(p.step(extract_handcrafted(seq.frames[0])), ContractViolation);
}

TEST(ConfigJson, RoundTripsAndRejectsUnknownKeys) {
  Config c;
  c.k = 7;
  c.dc = 42.5;
  c.softmax_temperature = 0.2;
  c.outlier_mode = OutlierMode::component;
  c.bank_capacity = 1000;
  c.kernel = KernelStrategy::naive;
  c.threads = 3;
  const Config back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_THROW(config_from_json({{"kay", 3}}), ContractViolation);
  EXPECT_THROW(config_from_json({{"c1", 1.5}}), ContractViolation);
  EXPECT_THROW(config_from_json({{"kernel", "fast"}}), ContractViolation);
  const Config partial = config_from_json({{"k", 3}}, c);
  EXPECT_EQ(partial.k, 3u);
  EXPECT_EQ(partial.dc, 42.5);
}

TEST(ConfigJson, DefaultsMatchThePublishedSettings) {
  const Config c;
  EXPECT_EQ(c.k, 20u);
  EXPECT_EQ(c.dc, 100.0);
  EXPECT_EQ(c.c1, 0.95);
  EXPECT_EQ(c.c2, 0.4);
  EXPECT_EQ(c.erosion_radius, 5.0);
  EXPECT_EQ(c.softmax_temperature, 1.0);
  EXPECT_TRUE(c.outlier_removal && c.bg_update && c.fg_update && c.bg_matching);
  EXPECT_FALSE(c.bank_capacity.has_value());
}
