// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>
#include <ostream>

#include "histcolor/checkpoint.hpp"
#include "histcolor/color.hpp"
#include "histcolor/experiment.hpp"
#include "histcolor/image_io.hpp"
#include "histcolor/metrics.hpp"

namespace histcolor::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kHeldOutSeedOffset = 7919;

struct CommonOptions {
  std::string config;
  std::optional<int> seed;
  std::string out;
  std::vector<std::string> without;
  std::vector<std::string> connection;
  std::string flow_dir;
  std::optional<int> steps;
};

void add_common(CLI::App* app, CommonOptions& o, bool with_ablation = true) {
  app->add_option("--config", o.config, "flat key=value run configuration");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--flow-dir", o.flow_dir, "directory of precomputed .flo files");
  if (with_ablation) {
    app->add_option("--without", o.without, "remove a component: histogram|flow|spatial-attn|temporal-attn");
    app->add_option("--connection", o.connection, "sharpness connection schema: plain|concat|multiply");
    app->add_option("--steps", o.steps, "number of optimization steps");
  }
}

RunConfig resolve_config(const CommonOptions& o, bool ablation_sweep = false) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) {
    require(*o.seed >= 0, ErrorCode::kUsage, "--seed must be non-negative");
    rc.seed = static_cast<std::uint64_t>(*o.seed);
  }
  if (!o.out.empty()) rc.out_dir = o.out;
  if (!o.flow_dir.empty()) rc.flow_dir = o.flow_dir;
  if (o.steps) rc.optimizer.steps = *o.steps;
  if (!ablation_sweep) {
    for (const auto& f : o.without) {
      static_cast<void>(ablate(rc.network, f));
      rc.without.push_back(f);
    }
    require(o.connection.size() <= 1, ErrorCode::kUsage, "--connection given more than once");
    if (!o.connection.empty()) rc.network.connection = parse_connection_schema(o.connection.front());
  }
  rc.validate();
  return rc;
}

Tensor<float> read_gray(const fs::path& path) {
  Tensor<float> gray, ab;
  split_normalized_lab(rgb_to_lab(read_png(path)), gray, ab);
  return gray;
}

HistGrid grid_from_image(const fs::path& path, const HistConfig& config) {
  Tensor<float> gray, ab;
  split_normalized_lab(rgb_to_lab(read_png(path)), gray, ab);
  return build_hist_grid(gray, ab, config);
}

std::vector<TrainingSample> load_training_samples(const RunConfig& rc, const NetworkConfig& net,
                                                  std::ostream& out) {
  if (rc.train_manifest.empty()) return synthetic_training_samples(rc, net);
  ClipManifest manifest = parse_manifest(rc.train_manifest);
  manifest.tau = net.tau;
  manifest.height = net.height;
  manifest.width = net.width;
  ClipStream stream(std::move(manifest), [&](const std::string& w) { out << "warning: " << w << "\n"; });
  std::vector<TrainingSample> samples;
  while (auto clip = stream.next()) {
    FlowSource estimated = estimated_flow_source(clip->gray);
    FlowSource flows = rc.flow_dir.empty()
                           ? estimated
                           : directory_flow_source(rc.flow_dir, stream.current_video(), clip->frame_numbers,
                                                   net.height, net.width, estimated);
    samples.push_back(prepare_training_sample(*clip, flows, net, rc.loss, rc.theta));
  }
  require(!samples.empty(), ErrorCode::kUsage,
          "no training clips found in " + rc.train_manifest.string());
  return samples;
}

int cmd_train(const CommonOptions& o, std::ostream& out) {
  const RunConfig rc = resolve_config(o);
  const NetworkConfig net_cfg = rc.effective_network();
  Network<float> net(net_cfg, rc.seed);
  const auto samples = load_training_samples(rc, net_cfg, out);
  fs::create_directories(rc.out_dir);
  const std::string snapshot = format_run_config(rc);
  {
    std::ofstream cfg(rc.out_dir / "config.txt");
    cfg << snapshot;
  }
  std::ofstream log(rc.out_dir / "train_log.csv");
  require(static_cast<bool>(log), ErrorCode::kIo, "cannot write " + (rc.out_dir / "train_log.csv").string());
  write_step_log_header(log);
  out << "training " << net.parameter_count() << " parameters on " << samples.size()
      << " clips for " << rc.optimizer.steps << " steps\n";
  const fs::path ckpt = rc.out_dir / "checkpoint";
  int last_step = 0;
  TrainCallbacks cb;
  cb.on_step = [&](const StepRecord& r) {
    write_step_log_row(log, r);
    log.flush();
    last_step = r.step;
    if (r.step == 1 || r.step % 25 == 0 || r.step == rc.optimizer.steps)
      out << "step " << r.step << " total " << r.loss.total << " ab_psnr " << r.ab_psnr << "\n";
  };
  cb.on_checkpoint = [&](int step) { save_checkpoint(net.store(), ckpt, step, snapshot); };
  try {
    train(net, samples, rc.loss, rc.optimizer, rc.seed, cb);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDivergence) {
      // Parameters are untouched by the failing step.
      save_checkpoint(net.store(), ckpt, last_step, snapshot);
      out << "last good checkpoint (step " << last_step << ") kept at " << ckpt.string() << "\n";
    }
    throw;
  }
  save_checkpoint(net.store(), ckpt, rc.optimizer.steps, snapshot);
  out << "eval ab_psnr " << evaluate_ab_psnr(net, samples.front()) << "\n";
  out << "checkpoint written to " << ckpt.string() << "\n";
  return 0;
}

struct ColorizeOptions {
  std::string input, checkpoint, hist_ref, hist_grid, save_grid;
};

int cmd_colorize(const CommonOptions& o, const ColorizeOptions& c, std::ostream& out) {
  require(!c.hist_ref.empty() || !c.hist_grid.empty(), ErrorCode::kUsage,
          "a histogram reference is required: pass --hist-ref <image.png> or --hist-grid <file.hg>");
  require(c.hist_ref.empty() || c.hist_grid.empty(), ErrorCode::kUsage,
          "pass only one of --hist-ref and --hist-grid");
  require(!c.input.empty() && !c.checkpoint.empty(), ErrorCode::kUsage,
          "colorize needs --input <dir> and --checkpoint <dir>");
  require(!o.out.empty(), ErrorCode::kUsage, "colorize needs --out <dir>");
  const CheckpointManifest manifest = read_manifest(c.checkpoint);
  const RunConfig rc = parse_run_config(manifest.config, fs::path(c.checkpoint) / kManifestFile);
  Network<float> net(rc.effective_network(), rc.seed);
  load_checkpoint(net.store(), c.checkpoint);
  const HistConfig& hc = net.config().hist;
  HistGrid grid;
  if (!c.hist_ref.empty()) {
    grid = grid_from_image(c.hist_ref, hc);
  } else {
    grid = load_hist_grid(c.hist_grid);
    const HistConfig& g = grid.config;
    require(g.cells == hc.cells && g.l_bins == hc.l_bins && g.a_bins == hc.a_bins && g.b_bins == hc.b_bins,
            ErrorCode::kIncompatible, "histogram grid bins do not match the model's histogram config");
  }
  if (!c.save_grid.empty()) save_hist_grid(grid, c.save_grid);
  const auto files = list_png_files(c.input);
  require(!files.empty(), ErrorCode::kUsage, "no PNG frames in " + c.input);
  std::vector<Tensor<float>> gray;
  for (const auto& f : files) gray.push_back(read_gray(f));
  FlowProvider provider;
  const std::string flow_dir = o.flow_dir;
  if (!flow_dir.empty()) {
    const std::int64_t h = net.config().height, w = net.config().width;
    provider = [flow_dir, h, w](const Tensor<float>& g, const std::vector<int>& numbers) {
      return directory_flow_source(flow_dir, "", numbers, h, w, estimated_flow_source(g));
    };
  }
  const auto frames = colorize_video(net, gray, grid, rc.theta, provider);
  fs::create_directories(o.out);
  for (std::size_t i = 0; i < frames.size(); ++i) write_png(fs::path(o.out) / files[i].filename(), frames[i].rgb);
  out << "colorized " << frames.size() << " frames into " << o.out << "\n";
  return 0;
}

struct EvaluateOptions {
  std::string pred, gt, scene, dataset;
  bool plots = false;
};

/// (name, directory) per video: subdirectories holding PNGs, or the directory itself.
std::vector<std::pair<std::string, fs::path>> video_dirs(const fs::path& root) {
  require(fs::is_directory(root), ErrorCode::kUsage, "not a directory: " + root.string());
  if (!list_png_files(root).empty()) return {{root.filename().string(), root}};
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && !list_png_files(e.path()).empty()) out.emplace_back(e.path().filename().string(), e.path());
  std::sort(out.begin(), out.end());
  require(!out.empty(), ErrorCode::kUsage, "no PNG frames under " + root.string());
  return out;
}

int cmd_evaluate(const CommonOptions& o, const EvaluateOptions& e, std::ostream& out) {
  require(!e.pred.empty() && !e.gt.empty(), ErrorCode::kUsage, "evaluate needs --pred <dir> and --gt <dir>");
  require(!o.out.empty(), ErrorCode::kUsage, "evaluate needs --out <dir>");
  const auto gt_videos = video_dirs(e.gt);
  const auto pred_videos = video_dirs(e.pred);
  require(gt_videos.size() == pred_videos.size(), ErrorCode::kUsage,
          std::to_string(pred_videos.size()) + " predicted videos vs " + std::to_string(gt_videos.size()) +
              " ground-truth videos");
  MetricsReport report;
  report.dataset = e.dataset.empty() ? fs::path(e.gt).filename().string() : e.dataset;
  report.config_hash = o.config.empty() ? "none" : config_hash(load_run_config(o.config));
  std::optional<SyntheticVideo> scene;
  if (!e.scene.empty()) scene.emplace(load_scene(e.scene));
  for (std::size_t v = 0; v < gt_videos.size(); ++v) {
    const auto gt_files = list_png_files(gt_videos[v].second);
    const auto pred_files = list_png_files(pred_videos[v].second);
    require(gt_files.size() == pred_files.size(), ErrorCode::kUsage,
            "video '" + gt_videos[v].first + "': " + std::to_string(pred_files.size()) + " predicted vs " +
                std::to_string(gt_files.size()) + " ground-truth frames");
    std::vector<Tensor<float>> gt, pred, gray;
    for (std::size_t i = 0; i < gt_files.size(); ++i) {
      gt.push_back(read_png(gt_files[i]));
      pred.push_back(read_png(pred_files[i]));
      require(gt.back().shape() == pred.back().shape(), ErrorCode::kUsage,
              "frame size mismatch: " + pred_files[i].string() + " vs " + gt_files[i].string());
      Tensor<float> g, ab;
      split_normalized_lab(rgb_to_lab(gt.back()), g, ab);
      gray.push_back(std::move(g));
    }
    const int n = static_cast<int>(gt.size());
    const std::int64_t h = gt.front().dim(1), w = gt.front().dim(2);
    std::vector<FlowField> backward;
    std::vector<Tensor<float>> masks;
    if (scene) {
      require(scene->frames() >= n && scene->scene().height == h && scene->scene().width == w,
              ErrorCode::kUsage, "scene file does not match the evaluated frames");
      for (int t = 0; t + 1 < n; ++t) {
        backward.push_back(scene->flow(t + 1, t));
        masks.push_back(scene->non_occluded(t + 1, t));
      }
    } else {
      std::vector<int> numbers(static_cast<std::size_t>(n));
      for (int t = 0; t < n; ++t) numbers[static_cast<std::size_t>(t)] = t;
      FlowSource estimated(
          [gray](int src, int dst) { return estimate_flow(gray[static_cast<std::size_t>(src)], gray[static_cast<std::size_t>(dst)], src, dst); });
      FlowSource flows = o.flow_dir.empty()
                             ? estimated
                             : directory_flow_source(o.flow_dir, gt_videos[v].first, numbers, h, w, estimated);
      for (int t = 0; t + 1 < n; ++t) {
        backward.push_back(flows.get(t + 1, t));
        masks.push_back(occlusion_mask(backward.back(), flows.get(t, t + 1)));
      }
    }
    report.videos.push_back(evaluate_video(gt_videos[v].first, pred, gt, backward, masks));
    if (e.plots) write_metric_plots(report.videos.back(), fs::path(o.out) / "plots");
  }
  report.finalize();
  report.write(fs::path(o.out) / "report.json");
  char line[256];
  std::snprintf(line, sizeof line, "PSNR %.4f SSIM %.5f warp_error %.6f L2 %.4f over %zu videos\n",
                report.aggregate.psnr, report.aggregate.ssim, report.aggregate.warp_error,
                report.aggregate.l2_error, report.videos.size());
  out << line;
  return 0;
}

int cmd_ablate(const CommonOptions& o, std::ostream& out) {
  const RunConfig rc = resolve_config(o, true);
  std::vector<std::string> flags = o.without.empty() ? ablation_flags() : o.without;
  for (const auto& f : flags) static_cast<void>(ablate(rc.network, f));
  auto variants = ablation_variants(rc.network, flags);
  if (!o.connection.empty()) {
    std::vector<AblationVariant> kept;
    for (auto& v : variants) {
      if (v.group != "connection") {
        kept.push_back(std::move(v));
        continue;
      }
      for (const auto& c : o.connection)
        if (v.network.connection == parse_connection_schema(c)) kept.push_back(v);
    }
    variants = std::move(kept);
  }
  const SyntheticScene held_out =
      random_scene(rc.synthetic.seed + kHeldOutSeedOffset, rc.network.height, rc.network.width,
                   rc.synthetic.frames, rc.synthetic.shapes);
  const EvaluationSet eval = synthetic_evaluation_set(SyntheticVideo(held_out), rc.network.hist, "held-out");
  out << "ablation over " << variants.size() << " variants, " << rc.optimizer.steps << " steps each\n";
  const int steps = rc.optimizer.steps;
  const auto report = run_ablation(rc, variants, eval, [&](const std::string& name, const StepRecord& r) {
    if (r.step == steps) out << name << ": final loss " << r.loss.total << "\n";
  });
  fs::create_directories(rc.out_dir);
  std::ofstream(rc.out_dir / "ablation.txt") << report.to_table();
  std::ofstream(rc.out_dir / "ablation.json") << report.to_json();
  out << report.to_table();
  return 0;
}

struct SynthOptions {
  std::string scene;
  std::optional<int> random;
  int size = 64;
  int frames = 5;
  int shapes = 2;
  int max_gap = 2;
};

int cmd_synth(const CommonOptions& o, const SynthOptions& s, std::ostream& out) {
  require(!o.out.empty(), ErrorCode::kUsage, "synth needs --out <dir>");
  require(s.scene.empty() != !s.random.has_value(), ErrorCode::kUsage,
          "synth needs exactly one of --scene <file> and --random <seed>");
  require(s.max_gap >= 1, ErrorCode::kUsage, "--max-gap must be >= 1");
  SyntheticScene scene;
  if (!s.scene.empty()) {
    scene = load_scene(s.scene);
  } else {
    require(*s.random >= 0, ErrorCode::kUsage, "--random seed must be non-negative");
    scene = random_scene(static_cast<std::uint64_t>(*s.random), s.size, s.size, s.frames, s.shapes);
  }
  const SyntheticVideo video(scene);
  write_synthetic(video, o.out, s.max_gap);
  out << "wrote " << video.frames() << " frames to " << o.out << "\n";
  return 0;
}

int report_error(std::ostream& err, std::string_view code, const std::string& message, int status) {
  std::string flat = message;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  err << "error: " << code << ": " << flat << "\n";
  return status;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"histogram-guided video colorization"};
  app.require_subcommand(1);
  CommonOptions common;
  ColorizeOptions colorize;
  EvaluateOptions evaluate;
  SynthOptions synth;

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, common);
  auto* color = app.add_subcommand("colorize", "colorize a directory of gray frames");
  add_common(color, common, false);
  color->add_option("--input", colorize.input, "directory of gray PNG frames");
  color->add_option("--checkpoint", colorize.checkpoint, "checkpoint directory");
  color->add_option("--hist-ref", colorize.hist_ref, "reference color image for the histogram");
  color->add_option("--hist-grid", colorize.hist_grid, "serialized histogram grid (.hg)");
  color->add_option("--save-grid", colorize.save_grid, "write the histogram grid used");
  auto* eval = app.add_subcommand("evaluate", "score predicted frames against ground truth");
  add_common(eval, common, false);
  eval->add_option("--pred", evaluate.pred, "predicted frames (one subdirectory per video, or frames)");
  eval->add_option("--gt", evaluate.gt, "ground-truth frames, same layout");
  eval->add_option("--scene", evaluate.scene, "synthetic scene file giving exact flow and occlusion");
  eval->add_option("--dataset", evaluate.dataset, "dataset name stored in the report");
  eval->add_flag("--plots", evaluate.plots, "write per-video metric plots");
  auto* abl = app.add_subcommand("ablate", "train and compare ablation variants");
  add_common(abl, common);
  auto* syn = app.add_subcommand("synth", "render a synthetic scene with exact flow");
  add_common(syn, common, false);
  syn->add_option("--scene", synth.scene, "scene description file");
  syn->add_option("--random", synth.random, "random scene seed");
  syn->add_option("--size", synth.size, "frame size for random scenes");
  syn->add_option("--frames", synth.frames, "frame count for random scenes");
  syn->add_option("--shapes", synth.shapes, "shape count for random scenes");
  syn->add_option("--max-gap", synth.max_gap, "largest frame gap with written flow");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    return report_error(err, error_code_name(ErrorCode::kUsage), e.what(),
                        error_exit_status(ErrorCode::kUsage));
  }
  try {
    if (*train) return cmd_train(common, out);
    if (*color) return cmd_colorize(common, colorize, out);
    if (*eval) return cmd_evaluate(common, evaluate, out);
    if (*abl) return cmd_ablate(common, out);
    if (*syn) return cmd_synth(common, synth, out);
  } catch (const Error& e) {
    return report_error(err, error_code_name(e.code()), e.what(), error_exit_status(e.code()));
  } catch (const fs::filesystem_error& e) {
    return report_error(err, error_code_name(ErrorCode::kIo), e.what(), error_exit_status(ErrorCode::kIo));
  } catch (const std::exception& e) {
    return report_error(err, "INTERNAL_ERROR", e.what(), 1);
  }
  return 0;
}

}  // namespace histcolor::cli
