// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "histcolor/flow.hpp"

namespace histcolor {

struct MetricMeans {
  double psnr = 0.0;
  double ssim = 0.0;
  double warp_error = 0.0;
  double l2_error = 0.0;
};

struct FrameMetrics {
  int index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double l2_error = 0.0;
};

struct VideoMetrics {
  std::string name;
  std::vector<FrameMetrics> frames;
  double warp_error = 0.0;
  MetricMeans mean;
};

/// JSON document: {"schema", "dataset", "config_hash", "videos": [...], "aggregate": {...}}.
struct MetricsReport {
  std::string dataset;
  std::string config_hash;
  std::vector<VideoMetrics> videos;
  MetricMeans aggregate;

  /// Recomputes per-video means and the aggregate (mean over videos).
  void finalize();
  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  void write(const std::filesystem::path& path) const;
  static MetricsReport read(const std::filesystem::path& path);
};

inline constexpr const char* kReportSchema = "histcolor.metrics/1";

/// All four metrics for one video. pred/gt are RGB [3, H, W] in [0, 1]; PSNR,
/// SSIM and L2 run on the 0-255 scale, warp error on [0, 1]. backward[t] =
/// f_{t+1->t} between ground-truth frames, masks[t] the non-occlusion mask.
VideoMetrics evaluate_video(const std::string& name, const std::vector<Tensor<float>>& pred,
                            const std::vector<Tensor<float>>& gt,
                            const std::vector<FlowField>& backward,
                            const std::vector<Tensor<float>>& masks);

/// Writes one line plot per metric (`<stem>_psnr.png`, `_ssim.png`, `_l2.png`).
void write_metric_plots(const VideoMetrics& video, const std::filesystem::path& dir);

}  // namespace histcolor
