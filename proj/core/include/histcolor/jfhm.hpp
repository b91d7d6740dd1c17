// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "histcolor/nn.hpp"

namespace histcolor {

struct JfhmConfig {
  std::int64_t channels = 32;
  std::int64_t hist_channels = 256;  ///< B_ab of the sliced descriptors
  int heads = 4;
  int spatial_windows = 4;   ///< s_spatial
  int temporal_windows = 2;  ///< s_temporal
  bool use_histogram = true;
  bool use_flow = true;
  bool use_spatial_attn = true;
  bool use_temporal_attn = true;

  /// Throws kConfig for bad head counts or window orders.
  void validate() const;
  /// Throws kConfig unless both window counts divide (height, width).
  void validate_size(std::int64_t height, std::int64_t width) const;
};

template <typename T>
struct JfhmTrace {
  ops::AttentionProbe<T> spatial;
  ops::AttentionProbe<T> temporal;
};

/// Joint flow / histogram module on [T, C, H, W] features of one scale.
template <typename T>
class Jfhm {
 public:
  using Var = ag::Var<T>;

  struct Attention {
    nn::Conv2d<T> q, k, v, o;
  };

  Jfhm() = default;
  Jfhm(nn::ParameterStore<T>& store, const std::string& prefix, JfhmConfig config, Rng& rng);

  /// M2 for features x, flow-to-center at this scale [T, 2, H, W] and
  /// histogram descriptors [T, B_ab, H, W] (ignored without the histogram).
  Var forward(const Var& x, const Tensor<T>& flow, const Tensor<T>& hist,
              JfhmTrace<T>* trace = nullptr) const;

  /// Windowed self-attention within each frame; flow is projected and added
  /// to the query/key inputs only.
  Var spatial_attention(const Var& x_norm, const Tensor<T>& flow,
                        ops::AttentionProbe<T>* probe = nullptr) const;
  /// Windowed self-attention over the same window gathered across frames.
  Var temporal_attention(const Var& x_norm, ops::AttentionProbe<T>* probe = nullptr) const;
  /// M_FR: projected histogram concatenated with m1, then three
  /// conv3x3 + LeakyReLU(0.1) layers.
  Var feature_refine(const Var& m1, const Tensor<T>& hist) const;

  const JfhmConfig& config() const noexcept { return config_; }

  nn::LayerNorm2d<T> ln1, ln2;
  Attention sa, ta;
  nn::Conv2d<T> flow_proj;
  nn::Conv2d<T> p1, p3, p2;
  nn::Conv2d<T> hist_proj;
  nn::Conv2d<T> refine[3];
  nn::Conv2d<T> ffn1, ffn2;

 private:
  Var attend(const Attention& a, const Var& qk_in, const Var& v_in, WindowMode mode, int windows,
             ops::AttentionProbe<T>* probe) const;

  JfhmConfig config_;
};

}  // namespace histcolor
