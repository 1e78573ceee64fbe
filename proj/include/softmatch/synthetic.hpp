#pragma once

// Deterministic synthetic videos with known ground truth: solid-coloured
// rectangles moving over a textured background, optionally with an occluding
// bar and a same-coloured distractor far from the object.

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "softmatch/config.hpp"
#include "softmatch/core.hpp"
#include "softmatch/image_io.hpp"

namespace softmatch::synthetic {

using Color = std::array<std::uint8_t, 3>;

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
};

struct MovingObject {
  Rect start;
  int dx = 0;  // px per frame
  int dy = 0;
  Color color{};
};

// Painted on top of the scene but never part of any object's ground truth.
struct Occluder {
  Rect rect;
  Color color{};
  int first_frame = 0;  // 0-based, inclusive
  int last_frame = 1 << 30;
};

struct SceneSpec {
  std::string name;
  int width = 320;
  int height = 240;
  int frames = 20;
  Color background_a{40, 60, 110};
  Color background_b{70, 95, 60};
  int texture_period = 48;  // background check pattern period (px)
  int noise = 6;            // +- uniform per-pixel noise amplitude
  std::uint32_t seed = 1;
  std::vector<MovingObject> objects;
  std::vector<Occluder> occluders;   // drawn over objects
  std::vector<Occluder> distractors; // drawn under objects, not ground truth
};

struct Sequence {
  std::string name;
  std::vector<RgbImage> frames;
  std::vector<LabelMask> ground_truth;
};

inline Rect at_frame(const MovingObject& o, int t) {
  return {o.start.x + o.dx * t, o.start.y + o.dy * t, o.start.w, o.start.h};
}

inline Sequence render(const SceneSpec& spec) {
  Sequence seq{spec.name, {}, {}};
  std::mt19937 rng(spec.seed);
  const int n_obj = static_cast<int>(spec.objects.size());
  for (int t = 0; t < spec.frames; ++t) {
    RgbImage img(static_cast<std::size_t>(spec.width), static_cast<std::size_t>(spec.height));
    LabelMask gt(static_cast<std::size_t>(spec.width), static_cast<std::size_t>(spec.height), n_obj);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const bool check = ((x / spec.texture_period) + (y / spec.texture_period)) % 2 == 0;
        Color c = check ? spec.background_a : spec.background_b;
        for (const auto& d : spec.distractors)
          if (t >= d.first_frame && t <= d.last_frame && d.rect.contains(x, y)) c = d.color;
        int label = 0;
        for (int k = 0; k < n_obj; ++k) {
          if (at_frame(spec.objects[k], t).contains(x, y)) {
            c = spec.objects[k].color;
            label = k + 1;
          }
        }
        for (const auto& o : spec.occluders) {
          if (t >= o.first_frame && t <= o.last_frame && o.rect.contains(x, y)) {
            c = o.color;
            label = 0;
          }
        }
        auto* p = img.pixel(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
        for (int ch = 0; ch < 3; ++ch) {
          const int jitter = spec.noise > 0
                                 ? static_cast<int>(rng() % static_cast<std::uint32_t>(2 * spec.noise + 1)) -
                                       spec.noise
                                 : 0;
          p[ch] = static_cast<std::uint8_t>(std::clamp(c[ch] + jitter, 0, 255));
        }
        if (label) gt.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                          static_cast<LabelMask::Label>(label));
      }
    }
    seq.frames.push_back(std::move(img));
    seq.ground_truth.push_back(std::move(gt));
  }
  return seq;
}

/// Single squares translating 3 px/frame over contrasting textured backgrounds.
inline std::vector<SceneSpec> moving_square_specs() {
  std::vector<SceneSpec> specs;
  {
    SceneSpec s;
    s.name = "square_right";
    s.seed = 11;
    s.objects = {{{48, 72, 96, 96}, 3, 0, {200, 40, 40}}};
    specs.push_back(s);
  }
  {
    SceneSpec s;
    s.name = "square_diagonal";
    s.seed = 12;
    s.objects = {{{40, 32, 88, 88}, 3, 2, {230, 200, 40}}};
    specs.push_back(s);
  }
  {
    SceneSpec s;
    s.name = "square_left";
    s.seed = 13;
    s.background_a = {60, 120, 60};
    s.background_b = {70, 80, 130};
    s.objects = {{{200, 80, 80, 80}, -3, 0, {170, 60, 200}}};
    specs.push_back(s);
  }
  return specs;
}

/// A square passing under a partial occluder while a same-coloured distractor
/// appears far away (beyond the default 100 px extrusion distance).
inline SceneSpec occlusion_spec() {
  SceneSpec s;
  s.name = "square_occlusion";
  s.width = 512;
  s.height = 288;
  s.seed = 21;
  s.objects = {{{32, 96, 96, 96}, 3, 0, {200, 40, 40}}};
  s.occluders = {{{120, 80, 28, 128}, {20, 20, 20}, 0, 1 << 30}};
  s.distractors = {{{400, 112, 80, 80}, {200, 40, 40}, 6, 1 << 30}};
  return s;
}

/// Two objects of different colours moving apart.
inline SceneSpec two_object_spec() {
  SceneSpec s;
  s.name = "two_objects";
  s.width = 384;
  s.height = 256;
  s.seed = 31;
  s.objects = {{{48, 48, 80, 80}, 3, 1, {200, 40, 40}}, {{240, 128, 80, 80}, -2, -1, {230, 200, 40}}};
  return s;
}

/// Defaults with a sharper softmax (tau = 0.1). At tau = 1 the two-way
/// softmax never exceeds 0.881, so the c1 = 0.95 foreground update cannot fire
/// and two-object fusion at c2 = 0.4 keeps most background.
inline Config benchmark_config() {
  Config cfg;
  cfg.softmax_temperature = 0.1;
  return cfg;
}

/// Every committed fixture: the moving-square suite, then occlusion, then two objects.
inline std::vector<SceneSpec> all_specs() {
  std::vector<SceneSpec> specs = moving_square_specs();
  specs.push_back(occlusion_spec());
  specs.push_back(two_object_spec());
  return specs;
}

}  // namespace softmatch::synthetic
