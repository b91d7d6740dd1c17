// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "histcolor/frames.hpp"
#include "histcolor/network.hpp"
#include "histcolor/objectives.hpp"

namespace histcolor {

/// Network inputs for one clip: sharpness from flows between neighbors,
/// flow-to-center channels and histogram descriptors sliced from `grid`
/// (uniform descriptors when `grid` is null).
NetworkInputs<float> prepare_inputs(const FrameClip& clip, FlowSource& flows, const HistGrid* grid,
                                    const NetworkConfig& config, double theta = kDefaultTheta);

struct TrainingSample {
  NetworkInputs<float> inputs;
  Tensor<float> target_ab;  ///< [T, 2, H, W]
  Tensor<float> mask_ref;   ///< ground-truth normalized Lab [T, 3, H, W]
  FlowPairs<float> loss_flows;
};

/// Training sample with the histogram grid built from the ground-truth center frame.
TrainingSample prepare_training_sample(const FrameClip& clip, FlowSource& flows,
                                       const NetworkConfig& config, const LossConfig& loss,
                                       double theta = kDefaultTheta);

/// Starts of non-overlapping windows of 2*tau+1 frames covering n frames;
/// the last window may run past n and is padded by repeating the last frame.
std::vector<int> inference_window_starts(int n, int tau);

/// Flow provider for a window: gray stack [T, 1, H, W] at model size and the
/// frame numbers of its frames within the video.
using FlowProvider = std::function<FlowSource(const Tensor<float>& gray, const std::vector<int>& frames)>;

struct ColorizedFrame {
  Tensor<float> lab;  ///< [3, H, W] in Lab units; L is the input L
  Tensor<float> rgb;  ///< [3, H, W] in [0, 1]
};

/// Colorizes gray frames ([1, H, W], L / 100, any common size) in eval mode.
/// Frames are resized to the model size, ab is predicted per window, resized
/// back and joined with the original L. Default flow is block matching.
std::vector<ColorizedFrame> colorize_video(const Network<float>& net,
                                           const std::vector<Tensor<float>>& gray,
                                           const HistGrid& grid, double theta = kDefaultTheta,
                                           const FlowProvider& flows = {});

}  // namespace histcolor
