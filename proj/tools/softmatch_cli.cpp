// softmatch command-line front end.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "softmatch/softmatch.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace softmatch;

namespace {

std::string frame_name(std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu%s", index, ext);
  return buf;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::vector<std::string>& exts) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (std::find(exts.begin(), exts.end(), ext) != exts.end()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  return list_files(dir, {".png", ".ppm", ".pgm", ".pnm"});
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open");
  return json::parse(in);
}

// Config flags shared by propagate and jumpcut-eval. Unset flags leave the
// file / default value alone.
struct ConfigFlags {
  std::string config_file;
  std::optional<std::size_t> k;
  std::optional<double> dc, c1, c2, erosion, softmax_temp, w_fg, w_bg;
  std::optional<std::size_t> bank_capacity;
  std::optional<std::string> kernel, outlier_mode;
  std::optional<int> threads;
  bool no_outlier_removal = false, no_bg_update = false, no_fg_update = false, fg_only = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file (CLI flags override it)");
    app->add_option("--k", k, "top-K matches averaged per pixel");
    app->add_option("--dc", dc, "extrusion distance for outlier removal (px)");
    app->add_option("--c1", c1, "confidence threshold for foreground updates");
    app->add_option("--c2", c2, "background threshold for multi-object fusion");
    app->add_option("--erosion", erosion, "erosion radius before foreground updates (px)");
    app->add_option("--softmax-temp", softmax_temp, "softmax temperature");
    app->add_option("--w-fg", w_fg, "softmax weight of the foreground score");
    app->add_option("--w-bg", w_bg, "softmax weight of the background score");
    app->add_option("--bank-capacity", bank_capacity, "cap per bank; oldest online entries evicted");
    app->add_option("--kernel", kernel, "matching kernel")->check(CLI::IsMember({"naive", "blocked"}));
    app->add_option("--outlier-mode", outlier_mode, "outlier filter")->check(CLI::IsMember({"pixel", "component"}));
    app->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
    app->add_flag("--no-outlier-removal", no_outlier_removal, "disable outlier removal");
    app->add_flag("--no-bg-update", no_bg_update, "disable background bank updates");
    app->add_flag("--no-fg-update", no_fg_update, "disable foreground bank updates");
    app->add_flag("--fg-only", fg_only, "score against the foreground bank only");
  }

  Config build() const {
    Config cfg;
    if (!config_file.empty()) cfg = config_from_json(read_json(config_file));
    if (k) cfg.k = *k;
    if (dc) cfg.dc = *dc;
    if (c1) cfg.c1 = *c1;
    if (c2) cfg.c2 = *c2;
    if (erosion) cfg.erosion_radius = *erosion;
    if (softmax_temp) cfg.softmax_temperature = *softmax_temp;
    if (w_fg) cfg.w_fg = *w_fg;
    if (w_bg) cfg.w_bg = *w_bg;
    if (bank_capacity) cfg.bank_capacity = *bank_capacity;
    if (kernel) cfg.kernel = parse_kernel_strategy(*kernel);
    if (outlier_mode) cfg.outlier_mode = parse_outlier_mode(*outlier_mode);
    if (threads) cfg.threads = *threads;
    if (no_outlier_removal) cfg.outlier_removal = false;
    if (no_bg_update) cfg.bg_update = false;
    if (no_fg_update) cfg.fg_update = false;
    if (fg_only) cfg.bg_matching = false;
    cfg.validate();
    return cfg;
  }
};

// Where per-frame features come from: VMF1 files, or handcrafted features of frames.
struct InputFlags {
  std::string frames_dir, features_dir;
  std::size_t stride = 8, cell = 8;
  bool no_positional = false;

  void attach(CLI::App* app) {
    app->add_option("--frames", frames_dir, "directory of frames (png/ppm/pgm)");
    app->add_option("--features", features_dir, "directory of VMF1 feature files");
    app->add_option("--stride", stride, "handcrafted feature stride")->check(CLI::PositiveNumber);
    app->add_option("--cell", cell, "handcrafted feature window")->check(CLI::PositiveNumber);
    app->add_flag("--no-positional", no_positional, "drop the positional feature channels");
  }

  struct Inputs {
    std::vector<fs::path> frames;
    std::vector<fs::path> features;
    FeatureSource source;
    std::size_t count = 0;
  };

  Inputs open() const {
    Inputs in;
    if (!frames_dir.empty()) in.frames = list_images(frames_dir);
    if (!features_dir.empty()) {
      in.features = list_files(features_dir, {".vmf"});
      if (in.features.empty()) throw IoError(features_dir + ": no .vmf files");
      if (!in.frames.empty() && in.frames.size() != in.features.size())
        throw IoError("frame and feature counts differ (" + std::to_string(in.frames.size()) + " vs " +
                      std::to_string(in.features.size()) + ")");
      in.count = in.features.size();
      in.source = [files = in.features](std::size_t i) { return read_feature_file(files.at(i)); };
    } else {
      if (frames_dir.empty()) throw ContractViolation("one of --frames or --features is required");
      if (in.frames.empty()) throw IoError(frames_dir + ": no frames");
      in.count = in.frames.size();
      const HandcraftedOptions opt{stride, cell, !no_positional};
      in.source = [files = in.frames, opt](std::size_t i) {
        return extract_handcrafted(load_frame(files.at(i)), opt);
      };
    }
    return in;
  }
};

// ---------------------------------------------------------------------------

int run_make_synthetic(const std::string& out_dir, const std::string& scene) {
  bool any = false;
  for (const auto& spec : synthetic::all_specs()) {
    if (scene != "all" && scene != spec.name) continue;
    any = true;
    const synthetic::Sequence seq = synthetic::render(spec);
    const fs::path root = fs::path(out_dir) / spec.name;
    fs::create_directories(root / "frames");
    fs::create_directories(root / "gt");
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      save_frame(seq.frames[i], root / "frames" / frame_name(i, ".png"));
      save_mask(seq.ground_truth[i], root / "gt" / frame_name(i, ".png"));
    }
    std::cout << root.string() << '\n';
  }
  if (!any) throw ContractViolation("unknown scene '" + scene + "'");
  return 0;
}

int run_extract(const std::string& frames_dir, const std::string& out_dir, const HandcraftedOptions& opt) {
  const auto frames = list_images(frames_dir);
  if (frames.empty()) throw IoError(frames_dir + ": no frames");
  fs::create_directories(out_dir);
  for (const auto& f : frames) {
    const FeatureMap map = extract_handcrafted(load_frame(f), opt);
    write_feature_file(map, fs::path(out_dir) / (f.stem().string() + ".vmf"));
  }
  std::cerr << "wrote " << frames.size() << " feature files to " << out_dir << '\n';
  return 0;
}

int run_propagate(const InputFlags& input, const ConfigFlags& flags, const std::string& template_path,
                  const std::string& out_dir, bool overlays) {
  const Config cfg = flags.build();
  const auto in = input.open();
  const LabelMask tmpl = load_mask(template_path);

  const fs::path out(out_dir);
  fs::create_directories(out / "masks");
  const bool write_overlays = overlays && !in.frames.empty();
  if (write_overlays) fs::create_directories(out / "overlays");

  auto emit = [&](std::size_t index0, const LabelMask& mask) {
    save_mask(mask, out / "masks" / frame_name(index0, ".png"));
    if (write_overlays) save_overlay(load_frame(in.frames[index0]), mask, out / "overlays" / frame_name(index0, ".png"));
  };
  emit(0, tmpl);
  PropagateOptions opts;
  opts.on_frame = [&](std::size_t t, const FrameOutput& f) { emit(t - 1, f.mask); };
  const PropagationResult result = propagate(in.count, in.source, tmpl, cfg, opts);

  write_json(run_log(result, cfg, tmpl), out / "run.json");
  write_json(timing_log(result), out / "timings.json");
  std::cerr << "propagated " << in.count << " frames into " << out.string() << '\n';
  return 0;
}

// Frames present in both directories, matched by file name, excluding the first.
int run_eval(const std::string& pred_dir, const std::string& gt_dir, std::optional<double> tol,
             bool include_first, const std::string& out_path) {
  const auto gts = list_images(gt_dir);
  if (gts.empty()) throw IoError(gt_dir + ": no masks");
  std::vector<double> j_frames, f_frames;
  json per_frame = json::array();
  for (std::size_t i = include_first ? 0 : 1; i < gts.size(); ++i) {
    const fs::path pred_path = fs::path(pred_dir) / gts[i].filename();
    if (!fs::exists(pred_path)) throw IoError(pred_path.string() + ": missing prediction");
    const LabelMask gt = load_mask(gts[i]);
    const LabelMask pred = load_mask(pred_path);
    const int n = std::max(gt.object_count(), load_mask(gts[0]).object_count());
    const double t = tol ? *tol : default_contour_tolerance(gt.width(), gt.height());
    json objects = json::array();
    double jsum = 0.0, fsum = 0.0;
    for (int k = 1; k <= n; ++k) {
      const auto label = static_cast<LabelMask::Label>(k);
      const double jv = jaccard(pred.binary(label), gt.binary(label));
      const double fv = contour_f(pred.binary(label), gt.binary(label), t);
      objects.push_back({{"object", k}, {"jaccard", jv}, {"f", fv}});
      jsum += jv;
      fsum += fv;
    }
    j_frames.push_back(jsum / n);
    f_frames.push_back(fsum / n);
    per_frame.push_back({{"frame", gts[i].filename().string()},
                         {"jaccard", j_frames.back()},
                         {"f", f_frames.back()},
                         {"objects", objects}});
  }
  const json report = {{"miou", SequenceScore::of(j_frames).mean},
                       {"f", SequenceScore::of(f_frames).mean},
                       {"per_frame", per_frame}};
  if (out_path.empty())
    std::cout << report.dump(2) << '\n';
  else
    write_json(report, out_path);
  return 0;
}

int run_jumpcut(const InputFlags& input, const ConfigFlags& flags, const std::string& gt_dir,
                std::vector<std::size_t> keyframes, std::size_t d, const std::string& out_path) {
  Config cfg = flags.build();
  cfg.outlier_removal = false;
  const auto in = input.open();
  const auto gts = list_images(gt_dir);
  if (gts.size() != in.count)
    throw IoError("ground truth count " + std::to_string(gts.size()) + " differs from frame count " +
                  std::to_string(in.count));
  auto transfer = [&](std::size_t key, std::size_t target) {
    Propagator prop(cfg);
    prop.initialize(in.source(key), load_mask(gts[key]));
    LabelMask last;
    for (std::size_t i = key + 1; i <= target; ++i) last = prop.step(in.source(i)).mask;
    return last;
  };
  const JumpCutResult r = jumpcut_protocol(in.count, transfer, [&](std::size_t i) { return load_mask(gts[i]); },
                                           keyframes, d);
  json per = json::array();
  for (const auto& o : r.per_keyframe) {
    per.push_back({{"keyframe", o.keyframe},
                   {"target", o.target},
                   {"error", o.error ? json(*o.error) : json(nullptr)},
                   {"note", o.note}});
    if (!o.note.empty()) std::cerr << "warning: keyframe " << o.keyframe << ": " << o.note << '\n';
  }
  const json report = {{"error_rate", r.error_rate ? json(*r.error_rate) : json(nullptr)}, {"per_keyframe", per}};
  if (out_path.empty())
    std::cout << report.dump(2) << '\n';
  else
    write_json(report, out_path);
  return 0;
}

struct BenchFlags {
  std::size_t h = 60, w = 107, c = 256, bank = 6420, k = 20;
  std::vector<int> threads{1};
  std::string strategy = "blocked";
  int repeats = 3;
  std::uint32_t seed = 7;
};

int run_bench(const BenchFlags& b) {
  std::mt19937 rng(b.seed);
  std::normal_distribution<float> nd;
  std::vector<float> fdata(b.h * b.w * b.c), bdata(b.bank * b.c);
  for (float& v : fdata) v = nd(rng);
  for (float& v : bdata) v = nd(rng);
  const FeatureMap frame(b.h, b.w, b.c, 8, std::move(fdata));
  FeatureBank bank(b.c);
  for (std::size_t i = 0; i < b.bank; ++i)
    bank.append(std::span<const float>(bdata.data() + i * b.c, b.c), {EntryKind::template_frame, 1, i});

  std::vector<KernelStrategy> strategies;
  if (b.strategy == "both")
    strategies = {KernelStrategy::naive, KernelStrategy::blocked};
  else
    strategies = {parse_kernel_strategy(b.strategy)};

  std::cout << "strategy,h,w,c,bank,K,threads,millis\n";
  for (KernelStrategy s : strategies) {
    for (int t : b.threads) {
      double best = 1e300;
      for (int r = 0; r < b.repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const ScoreMap m = soft_match(frame, bank, b.k, {s, t});
        const auto t1 = std::chrono::steady_clock::now();
        if (m.scores.empty()) return 1;
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      std::cout << to_string(s) << ',' << b.h << ',' << b.w << ',' << b.c << ',' << b.bank << ',' << b.k << ','
                << t << ',' << best << '\n';
      const double gflops = 2.0 * double(b.h * b.w) * double(b.bank) * double(b.c) / (best * 1e6);
      std::cerr << to_string(s) << " threads=" << t << ": " << gflops << " GFLOP/s\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mask propagation by soft feature matching"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("make-synthetic", "render the synthetic fixtures with ground truth");
  std::string synth_out, synth_scene = "all";
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--scene", synth_scene, "scene name or 'all'");

  auto* extract = app.add_subcommand("extract-features", "write handcrafted VMF1 features per frame");
  std::string ex_frames, ex_out;
  HandcraftedOptions ex_opt;
  bool ex_no_pos = false;
  extract->add_option("--frames", ex_frames, "directory of frames")->required();
  extract->add_option("--out", ex_out, "output directory")->required();
  extract->add_option("--stride", ex_opt.stride, "feature stride")->check(CLI::PositiveNumber);
  extract->add_option("--cell", ex_opt.cell, "feature window")->check(CLI::PositiveNumber);
  extract->add_flag("--no-positional", ex_no_pos, "drop the positional channels");

  auto* prop = app.add_subcommand("propagate", "propagate the first-frame mask through a sequence");
  InputFlags prop_in;
  ConfigFlags prop_cfg;
  std::string prop_template, prop_out;
  bool prop_no_overlays = false;
  prop_in.attach(prop);
  prop_cfg.attach(prop);
  prop->add_option("--template", prop_template, "first-frame label mask")->required();
  prop->add_option("--out", prop_out, "output directory")->required();
  prop->add_flag("--no-overlays", prop_no_overlays, "skip overlay images");

  auto* eval = app.add_subcommand("eval", "score predicted masks against ground truth");
  std::string ev_pred, ev_gt, ev_out;
  std::optional<double> ev_tol;
  bool ev_first = false;
  eval->add_option("--pred", ev_pred, "predicted masks directory")->required();
  eval->add_option("--gt", ev_gt, "ground-truth masks directory")->required();
  eval->add_option("--tol", ev_tol, "contour tolerance in px (default: 0.5% of the diagonal, rounded up)");
  eval->add_flag("--include-first", ev_first, "also score the first (template) frame");
  eval->add_option("--json", ev_out, "write the report here instead of stdout");

  auto* jc = app.add_subcommand("jumpcut-eval", "keyframe transfer error (outlier removal disabled)");
  InputFlags jc_in;
  ConfigFlags jc_cfg;
  std::string jc_gt, jc_out;
  std::vector<std::size_t> jc_keys = default_keyframes();
  std::size_t jc_d = 16;
  jc_in.attach(jc);
  jc_cfg.attach(jc);
  jc->add_option("--gt", jc_gt, "ground-truth masks for every frame")->required();
  jc->add_option("--keyframes", jc_keys, "0-based keyframes")->delimiter(',');
  jc->add_option("--d", jc_d, "transfer distance")->check(CLI::PositiveNumber);
  jc->add_option("--json", jc_out, "write the report here instead of stdout");

  auto* bench = app.add_subcommand("bench-kernel", "time the matching kernel on random features");
  BenchFlags bf;
  bench->add_option("--height", bf.h, "grid rows")->check(CLI::PositiveNumber);
  bench->add_option("--width", bf.w, "grid columns")->check(CLI::PositiveNumber);
  bench->add_option("--channels", bf.c)->check(CLI::PositiveNumber);
  bench->add_option("--bank", bf.bank)->check(CLI::PositiveNumber);
  bench->add_option("--k", bf.k)->check(CLI::PositiveNumber);
  bench->add_option("--threads", bf.threads, "thread counts, comma separated")->delimiter(',');
  bench->add_option("--strategy", bf.strategy)->check(CLI::IsMember({"naive", "blocked", "both"}));
  bench->add_option("--repeats", bf.repeats, "best-of-N timing")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bf.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_make_synthetic(synth_out, synth_scene);
    if (*extract) {
      ex_opt.positional = !ex_no_pos;
      return run_extract(ex_frames, ex_out, ex_opt);
    }
    if (*prop) return run_propagate(prop_in, prop_cfg, prop_template, prop_out, !prop_no_overlays);
    if (*eval) return run_eval(ev_pred, ev_gt, ev_tol, ev_first, ev_out);
    if (*jc) return run_jumpcut(jc_in, jc_cfg, jc_gt, jc_keys, jc_d, jc_out);
    if (*bench) return run_bench(bf);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
