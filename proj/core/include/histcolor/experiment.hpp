// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "histcolor/config.hpp"
#include "histcolor/report.hpp"
#include "histcolor/synthetic.hpp"
#include "histcolor/training.hpp"

namespace histcolor {

/// Training samples from `config.synthetic.videos` random scenes (every
/// window, stride 1) with exact synthetic flow.
std::vector<TrainingSample> synthetic_training_samples(const RunConfig& config,
                                                       const NetworkConfig& network);

/// A video with everything needed to colorize it and score the result.
struct EvaluationSet {
  std::string name;
  std::vector<Tensor<float>> gray;    ///< [1, H, W], L / 100
  std::vector<Tensor<float>> gt_rgb;  ///< [3, H, W] in [0, 1]
  HistGrid grid;                      ///< reference from the ground-truth center frame
  FlowProvider flows;                 ///< for the network inputs; empty: estimated
  std::vector<FlowField> backward;    ///< f_{t+1->t} between ground-truth frames
  std::vector<Tensor<float>> masks;   ///< non-occlusion masks for warp error
};

/// Exact flows and exact non-occlusion masks from the scene geometry.
EvaluationSet synthetic_evaluation_set(const SyntheticVideo& video, const HistConfig& hist,
                                       const std::string& name = "synthetic");

VideoMetrics evaluate_model(const Network<float>& net, const EvaluationSet& set,
                            double theta = kDefaultTheta);

struct AblationVariant {
  std::string name;
  NetworkConfig network;
  std::string group;  ///< "component" or "connection"
};

/// full, w/o histogram, w/o flow, w/o spatial-attn, w/o temporal-attn, and
/// the three connection schemas (plain, concat, multiply).
std::vector<AblationVariant> ablation_variants(const NetworkConfig& base,
                                               const std::vector<std::string>& flags = ablation_flags());

struct AblationRow {
  std::string name;
  std::string group;
  std::int64_t parameters = 0;
  double final_loss = 0.0;
  MetricMeans metrics;
  double psnr_drop = 0.0;        ///< (full - variant) / full, in percent
  double warp_error_rise = 0.0;  ///< (variant - full) / full, in percent
};

struct AblationReport {
  std::vector<AblationRow> rows;
  const AblationRow& row(const std::string& name) const;
  std::string to_table() const;
  std::string to_json() const;
};

using AblationProgress = std::function<void(const std::string& variant, const StepRecord&)>;

/// Trains every variant from the same seed on the same samples and scores it
/// on `eval`. Variants whose configuration equals an earlier one reuse its row.
AblationReport run_ablation(const RunConfig& base, const std::vector<AblationVariant>& variants,
                            const EvaluationSet& eval, const AblationProgress& progress = {});

}  // namespace histcolor
