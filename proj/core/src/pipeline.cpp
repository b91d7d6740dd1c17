// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/pipeline.hpp"

#include <algorithm>

#include "histcolor/color.hpp"

namespace histcolor {

NetworkInputs<float> prepare_inputs(const FrameClip& clip, FlowSource& flows, const HistGrid* grid,
                                    const NetworkConfig& config, double theta) {
  clip.validate();
  require(clip.frames() == config.frames(), ErrorCode::kContract,
          "clip has " + std::to_string(clip.frames()) + " frames, the model expects " +
              std::to_string(config.frames()));
  require(clip.height() == config.height && clip.width() == config.width, ErrorCode::kContract,
          "clip is " + std::to_string(clip.height()) + "x" + std::to_string(clip.width()) +
              ", the model expects " + std::to_string(config.height) + "x" +
              std::to_string(config.width));
  const int t = clip.frames(), center = clip.center_index;
  NetworkInputs<float> in;
  std::vector<SharpnessMap> sharp;
  if (config.connection != ConnectionSchema::kPlain) sharp = temporal_sharpness(clip.gray, flows, theta);
  std::vector<FlowField> to_center;
  for (int i = 0; i < t; ++i)
    to_center.push_back(i == center ? FlowField::zeros(clip.height(), clip.width(), i, center)
                                    : flows.get(i, center));
  in.frames = assemble_input(clip.gray, sharp, to_center, config.connection);
  Tensor<float> flow({t, 2, clip.height(), clip.width()});
  for (int i = 0; i < t; ++i) put_leading(flow, i, to_center[static_cast<std::size_t>(i)].uv);
  in.flow = std::move(flow);
  if (config.use_histogram) {
    in.hist = grid ? hist_features(*grid, clip.gray, kFirstHistLevel, kLastHistLevel)
                   : uniform_hist_features(config.hist, t, clip.height(), clip.width(),
                                           kFirstHistLevel, kLastHistLevel);
  }
  return in;
}

TrainingSample prepare_training_sample(const FrameClip& clip, FlowSource& flows,
                                       const NetworkConfig& config, const LossConfig& loss,
                                       double theta) {
  require(clip.target_ab.has_value(), ErrorCode::kContract, "training clip has no color targets");
  loss.validate(clip.frames());
  const int c = clip.center_index;
  const HistGrid grid = build_hist_grid(take_leading(clip.gray, c), take_leading(*clip.target_ab, c), config.hist);
  TrainingSample s;
  s.inputs = prepare_inputs(clip, flows, &grid, config, theta);
  s.target_ab = *clip.target_ab;
  const std::int64_t t = clip.frames(), h = clip.height(), w = clip.width(), plane = h * w;
  s.mask_ref = Tensor<float>({t, 3, h, w});
  for (std::int64_t i = 0; i < t; ++i) {
    std::copy_n(clip.gray.data() + i * plane, plane, s.mask_ref.data() + i * 3 * plane);
    std::copy_n(clip.target_ab->data() + i * 2 * plane, 2 * plane, s.mask_ref.data() + (i * 3 + 1) * plane);
  }
  for (int d : loss.d_set)
    for (int i = 0; i + d < t; ++i) s.loss_flows[{i + d, i}] = flows.get(i + d, i).uv;
  return s;
}

std::vector<int> inference_window_starts(int n, int tau) {
  require(tau >= 1, ErrorCode::kConfig, "tau must be >= 1");
  std::vector<int> starts;
  for (int s = 0; s < n; s += 2 * tau + 1) starts.push_back(s);
  return starts;
}

std::vector<ColorizedFrame> colorize_video(const Network<float>& net,
                                           const std::vector<Tensor<float>>& gray,
                                           const HistGrid& grid, double theta,
                                           const FlowProvider& flows) {
  require(!gray.empty(), ErrorCode::kUsage, "no frames to colorize");
  const NetworkConfig& cfg = net.config();
  const std::int64_t oh = gray.front().dim(1), ow = gray.front().dim(2);
  for (const auto& g : gray)
    require(g.shape() == Shape{1, oh, ow}, ErrorCode::kUsage, "all frames of a video must share one size");
  const int n = static_cast<int>(gray.size()), len = cfg.frames();
  std::vector<Tensor<float>> small;
  for (const auto& g : gray) {
    Tensor<float> r = resize_bilinear(g, cfg.height, cfg.width);
    for (float& v : r.span()) v = std::clamp(v, 0.0f, 1.0f);
    small.push_back(std::move(r));
  }
  ag::NoGradGuard no_grad;
  std::vector<ColorizedFrame> out;
  for (int start : inference_window_starts(n, cfg.tau)) {
    std::vector<Tensor<float>> window;
    std::vector<int> numbers;
    std::vector<std::string> ids;
    for (int k = 0; k < len; ++k) {
      const int idx = std::min(start + k, n - 1);
      window.push_back(small[static_cast<std::size_t>(idx)]);
      numbers.push_back(idx);
      ids.push_back(std::to_string(idx));
    }
    const FrameClip clip(stack_leading(window), std::nullopt, ids, numbers);
    FlowSource source = flows ? flows(clip.gray, numbers) : estimated_flow_source(clip.gray);
    const NetworkInputs<float> inputs = prepare_inputs(clip, source, &grid, cfg, theta);
    const Tensor<float> ab = net.forward(inputs, false).value();
    for (int k = 0; k < len && start + k < n; ++k) {
      const Tensor<float> ab_full = resize_bilinear(take_leading(ab, k), oh, ow);
      ColorizedFrame f;
      f.lab = join_normalized_lab(gray[static_cast<std::size_t>(start + k)], ab_full);
      f.rgb = lab_to_rgb(f.lab);
      out.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace histcolor
