// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "histcolor/nn.hpp"

namespace histcolor {

struct DRConvSpec {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  int kernel = 3;
  int regions = 4;

  /// Throws kConfig for m < 1, even k or non-positive channels.
  void validate() const;
};

/// Dynamic region-aware convolution: a guide conv assigns each pixel to one
/// of m regions, a GAP -> linear -> ReLU -> linear branch generates m
/// depthwise k x k filter sets per sample, and a learned pointwise
/// projection maps C_in to C_out.
template <typename T>
class DRConv {
 public:
  using Var = ag::Var<T>;

  DRConv() = default;
  DRConv(nn::ParameterStore<T>& store, const std::string& prefix, DRConvSpec spec, Rng& rng);

  Var forward(const Var& x,
              ops::AssignmentGradient mode = ops::AssignmentGradient::kStraightThrough) const;
  /// Guide logits [N, m, H, W]; undefined when m == 1.
  Var guide_logits(const Var& x) const;
  /// Generated filters [N, m * C_in * k * k].
  Var generate_filters(const Var& x) const;
  /// Output of the region-selected depthwise stage, before the pointwise projection.
  Var depthwise(const Var& x, const Var& filters, const Var& logits,
                ops::AssignmentGradient mode) const;

  const DRConvSpec& spec() const noexcept { return spec_; }

  nn::Conv2d<T> guide;
  nn::Linear<T> fc1, fc2;
  nn::Conv2d<T> pointwise;

 private:
  DRConvSpec spec_;
};

/// [DRConv -> batch norm -> ReLU] x 2.
template <typename T>
class DRBlock {
 public:
  using Var = ag::Var<T>;

  DRBlock() = default;
  DRBlock(nn::ParameterStore<T>& store, const std::string& prefix, std::int64_t in,
          std::int64_t out, int kernel, int regions, Rng& rng);

  Var forward(const Var& x, bool training,
              ops::AssignmentGradient mode = ops::AssignmentGradient::kStraightThrough) const;

  DRConv<T> conv1, conv2;
  nn::BatchNorm2d<T> bn1, bn2;
};

}  // namespace histcolor
