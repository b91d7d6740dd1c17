// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "histcolor/flow.hpp"
#include "histcolor/tensor.hpp"

namespace histcolor {

inline constexpr double kPsnrCap = 100.0;

/// 20 log10(peak / RMSE) over all elements; kPsnrCap when identical.
double psnr(const Tensor<float>& a, const Tensor<float>& b, double peak = 255.0);

/// Single-scale SSIM on [C, H, W] in [0, 255]: 11x11 Gaussian (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, valid windows only, averaged over channels.
double ssim(const Tensor<float>& a, const Tensor<float>& b);

/// Mean over pixels of the per-pixel Euclidean norm of the channel difference.
double l2_error(const Tensor<float>& a, const Tensor<float>& b);

/// PSNR of normalized ab ([-1, 1]) expressed in Lab units with a 255 range,
/// which equals a peak of 255 / 128 in normalized units.
double ab_psnr(const Tensor<float>& pred_ab, const Tensor<float>& gt_ab);

/// Binary non-occlusion mask [1, H, W] on frame t's grid. `backward` is
/// f_{t+1->t} (grid t), `forward` is f_{t->t+1} (grid t+1). A pixel is kept
/// when p + f_bw(p) is inside frame t+1 and
/// |f_bw(p) + f_fw(p + f_bw(p))|^2 <= 0.01 (|f_bw|^2 + |f_fw|^2) + 0.5.
Tensor<float> occlusion_mask(const FlowField& backward, const FlowField& forward);

/// Mean over consecutive pairs of mean_p M(p) |O_t(p) - W(O_{t+1}, f)(p)|^2.
/// frames [C, H, W] (RGB in [0, 1]); backward[t] = f_{t+1->t}; masks[t] [1, H, W].
double warp_error(const std::vector<Tensor<float>>& frames, const std::vector<FlowField>& backward,
                  const std::vector<Tensor<float>>& masks);
/// Same, with masks from forward-backward consistency; forward[t] = f_{t->t+1}.
double warp_error(const std::vector<Tensor<float>>& frames, const std::vector<FlowField>& backward,
                  const std::vector<FlowField>& forward);

}  // namespace histcolor
