// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <utility>
#include <vector>

#include "histcolor/autograd.hpp"

namespace histcolor {

struct LossConfig {
  double lambda1 = 1.0;  ///< warp loss weight
  double lambda2 = 1.0;  ///< Charbonnier weight
  double alpha = 9.0;    ///< visibility mask sharpness
  double epsilon = 1e-3; ///< Charbonnier epsilon
  std::vector<int> d_set{1, 2};

  /// Throws kConfig for negative weights, non-positive alpha/epsilon, an
  /// empty interval set or an interval >= frames (when frames > 0).
  void validate(int frames = 0) const;
};

/// Backward flows f_{t+d -> t} keyed by (t + d, t), each [2, H, W].
template <typename T>
using FlowPairs = std::map<std::pair<int, int>, Tensor<T>>;

/// Mean over (t, d) pairs of ||M (.) (pred_t - W(pred_{t+d}, f))||_2 / sqrt(n),
/// with M = exp(-alpha ||ref_t - W(ref_{t+d}, f)||^2) from the reference
/// (ground-truth) frames and n the element count of one frame of pred.
/// `mask_ref` is [T, C', H, W]; C' may differ from pred's C.
template <typename T>
ag::Var<T> warp_loss(const ag::Var<T>& pred, const Tensor<T>& mask_ref, const FlowPairs<T>& flows,
                     const LossConfig& config);

/// Mean of sqrt((pred - gt)^2 + eps^2).
template <typename T>
ag::Var<T> charbonnier_loss(const ag::Var<T>& pred, const Tensor<T>& gt, double epsilon);

/// Mean |forward x-difference| + mean |forward y-difference| over all
/// channels and frames of [T, C, H, W].
template <typename T>
ag::Var<T> smooth_loss(const ag::Var<T>& pred);

struct LossParts {
  double warp = 0.0;
  double charbonnier = 0.0;
  double smooth = 0.0;
  double total = 0.0;
};

/// total = lambda1 * warp + lambda2 * charbonnier + smooth. Throws
/// kDivergence when any part is not finite.
LossParts total_loss(LossParts parts, const LossConfig& config);

/// Differentiable weighted sum of the three loss variables.
template <typename T>
ag::Var<T> combine_losses(const ag::Var<T>& warp, const ag::Var<T>& charbonnier,
                          const ag::Var<T>& smooth, const LossConfig& config);

}  // namespace histcolor
