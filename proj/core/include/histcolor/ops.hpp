// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "histcolor/autograd.hpp"
#include "histcolor/windows.hpp"

/// Differentiable operators on [N, C, H, W] variables. Every operator is
/// instantiated for float (training) and double (gradient verification).
namespace histcolor::ops {

using ag::Var;

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T factor);

/// Sum of all elements, shape [1].
template <typename T>
Var<T> sum(const Var<T>& x);
/// Sum of x * weights with a constant weight tensor, shape [1].
template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights);

template <typename T>
Var<T> relu(const Var<T>& x);
template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope);
/// Exact (erf) GELU.
template <typename T>
Var<T> gelu(const Var<T>& x);
template <typename T>
Var<T> tanh(const Var<T>& x);

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

/// 2-D convolution, weight [Cout, Cin, k, k], optional bias [Cout], zero padding.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad);

/// x [N, Cin] -> [N, Cout] with weight [Cout, Cin] and optional bias [Cout].
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

/// [N, C, H, W] -> [N, C].
template <typename T>
Var<T> global_avg_pool(const Var<T>& x);

template <typename T>
Var<T> upsample_nearest2x(const Var<T>& x);

/// Layer normalization over the channel axis of every pixel.
template <typename T>
Var<T> layer_norm_channels(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps);

/// Batch normalization over (N, H, W) per channel. In training mode the
/// running statistics are updated in place; in eval mode they are used.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training, T momentum,
                  T eps);

/// Captured softmax rows of a window attention call, [groups, heads, L, L].
template <typename T>
struct AttentionProbe {
  Tensor<T> probabilities;
};

/// Multi-head softmax attention inside windows. q, k, v are [T, C, H, W];
/// spatial mode attends within each (frame, window), temporal mode within
/// each window gathered across all frames.
template <typename T>
Var<T> window_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, WindowMode mode,
                        int windows, int heads, AttentionProbe<T>* probe = nullptr);

enum class AssignmentGradient {
  kStraightThrough,  ///< softmax relaxation of the argmax in the backward pass
  kExact,            ///< true derivative: zero through the argmax
};

/// Region-selected depthwise convolution. filters [N, m, C, k, k] are per
/// sample; logits [N, m, H, W] pick the region of each pixel by argmax
/// (lowest index wins ties). With m == 1 `logits` may be undefined.
template <typename T>
Var<T> region_depthwise_conv(const Var<T>& x, const Var<T>& filters, const Var<T>& logits,
                             int regions, int kernel, AssignmentGradient mode);

/// Argmax region index per pixel, [N, H, W] (lowest index on ties).
template <typename T>
std::vector<int> region_assignment(const Tensor<T>& logits);

/// Smallest gap between the best and second-best logit over all pixels.
template <typename T>
T region_margin(const Tensor<T>& logits);

}  // namespace histcolor::ops
