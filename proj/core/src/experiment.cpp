// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/experiment.hpp"

#include <cstdio>
#include <map>
#include <memory>

#include <nlohmann/json.hpp>

#include "histcolor/color.hpp"

namespace histcolor {

std::vector<TrainingSample> synthetic_training_samples(const RunConfig& config,
                                                       const NetworkConfig& network) {
  std::vector<TrainingSample> out;
  for (int v = 0; v < config.synthetic.videos; ++v) {
    const SyntheticScene scene =
        random_scene(config.synthetic.seed + static_cast<std::uint64_t>(v), network.height,
                     network.width, config.synthetic.frames, config.synthetic.shapes);
    const SyntheticVideo video(scene);
    const auto starts = window_starts(video.frames(), network.tau, 1);
    for (int s : starts) {
      FlowSource flows = video.flow_source(s);
      out.push_back(prepare_training_sample(video.clip(s, network.tau), flows, network, config.loss,
                                            config.theta));
    }
  }
  return out;
}

EvaluationSet synthetic_evaluation_set(const SyntheticVideo& video, const HistConfig& hist,
                                       const std::string& name) {
  EvaluationSet set;
  set.name = name;
  const int n = video.frames();
  for (int t = 0; t < n; ++t) {
    set.gray.push_back(video.gray(t));
    set.gt_rgb.push_back(video.rgb(t));
  }
  const int c = n / 2;
  set.grid = build_hist_grid(video.gray(c), video.ab(c), hist);
  auto shared = std::make_shared<SyntheticVideo>(video);
  set.flows = [shared](const Tensor<float>&, const std::vector<int>& numbers) {
    return FlowSource([shared, numbers](int src, int dst) {
      FlowField f = shared->flow(numbers.at(static_cast<std::size_t>(src)),
                                 numbers.at(static_cast<std::size_t>(dst)));
      f.src_index = src;
      f.dst_index = dst;
      return f;
    });
  };
  for (int t = 0; t + 1 < n; ++t) {
    set.backward.push_back(video.flow(t + 1, t));
    set.masks.push_back(video.non_occluded(t + 1, t));
  }
  return set;
}

VideoMetrics evaluate_model(const Network<float>& net, const EvaluationSet& set, double theta) {
  const auto frames = colorize_video(net, set.gray, set.grid, theta, set.flows);
  std::vector<Tensor<float>> pred;
  for (const auto& f : frames) pred.push_back(f.rgb);
  return evaluate_video(set.name, pred, set.gt_rgb, set.backward, set.masks);
}

std::vector<AblationVariant> ablation_variants(const NetworkConfig& base,
                                               const std::vector<std::string>& flags) {
  std::vector<AblationVariant> out;
  out.push_back({"full", base, "component"});
  for (const auto& f : flags) out.push_back({"w/o " + f, ablate(base, f), "component"});
  for (auto schema : {ConnectionSchema::kPlain, ConnectionSchema::kConcat, ConnectionSchema::kMultiply}) {
    NetworkConfig n = base;
    n.connection = schema;
    out.push_back({"connection " + connection_schema_name(schema), n, "connection"});
  }
  return out;
}

const AblationRow& AblationReport::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  fail(ErrorCode::kContract, "no ablation row named '" + name + "'");
}

std::string AblationReport::to_table() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-26s %10s %9s %8s %12s %9s %10s %10s\n", "variant", "params",
                "PSNR", "SSIM", "warp_error", "L2", "PSNR_drop%", "warp_rise%");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-26s %10lld %9.3f %8.4f %12.6f %9.3f %10.2f %10.2f\n",
                  r.name.c_str(), static_cast<long long>(r.parameters), r.metrics.psnr,
                  r.metrics.ssim, r.metrics.warp_error, r.metrics.l2_error, r.psnr_drop,
                  r.warp_error_rise);
    out += buf;
  }
  return out;
}

std::string AblationReport::to_json() const {
  nlohmann::json doc;
  doc["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    doc["rows"].push_back({{"name", r.name},
                           {"group", r.group},
                           {"parameters", r.parameters},
                           {"final_loss", r.final_loss},
                           {"psnr", r.metrics.psnr},
                           {"ssim", r.metrics.ssim},
                           {"warp_error", r.metrics.warp_error},
                           {"l2_error", r.metrics.l2_error},
                           {"psnr_drop_percent", r.psnr_drop},
                           {"warp_error_rise_percent", r.warp_error_rise}});
  return doc.dump(2) + "\n";
}

AblationReport run_ablation(const RunConfig& base, const std::vector<AblationVariant>& variants,
                            const EvaluationSet& eval, const AblationProgress& progress) {
  AblationReport report;
  std::map<std::string, AblationRow> done;
  for (const auto& v : variants) {
    RunConfig rc = base;
    rc.network = v.network;
    rc.without.clear();
    const std::string key = format_run_config(rc);
    AblationRow row;
    if (auto it = done.find(key); it != done.end()) {
      row = it->second;
    } else {
      Network<float> net(v.network, base.seed);
      const auto samples = synthetic_training_samples(base, v.network);
      TrainCallbacks cb;
      if (progress) cb.on_step = [&](const StepRecord& r) { progress(v.name, r); };
      const auto log = train(net, samples, base.loss, base.optimizer, base.seed, cb);
      row.parameters = net.parameter_count();
      row.final_loss = log.empty() ? 0.0 : log.back().loss.total;
      row.metrics = evaluate_model(net, eval, base.theta).mean;
      done[key] = row;
    }
    row.name = v.name;
    row.group = v.group;
    report.rows.push_back(row);
  }
  const AblationRow* full = nullptr;
  for (const auto& r : report.rows)
    if (r.name == "full") full = &r;
  if (full) {
    const MetricMeans ref = full->metrics;
    for (auto& r : report.rows) {
      r.psnr_drop = ref.psnr != 0 ? 100.0 * (ref.psnr - r.metrics.psnr) / ref.psnr : 0.0;
      r.warp_error_rise =
          ref.warp_error != 0 ? 100.0 * (r.metrics.warp_error - ref.warp_error) / ref.warp_error : 0.0;
    }
  }
  return report;
}

}  // namespace histcolor
