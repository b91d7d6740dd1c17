// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <utility>

#include "histcolor/tensor.hpp"

namespace histcolor {

/// Dense displacement field f_{src->dst} on the dst grid: pixel p of frame
/// dst corresponds to p + uv(p) in frame src. uv is [2, H, W] (u = x, v = y).
struct FlowField {
  Tensor<float> uv;
  int src_index = 0;
  int dst_index = 0;

  FlowField() = default;
  FlowField(Tensor<float> uv, int src, int dst);
  static FlowField zeros(std::int64_t height, std::int64_t width, int src = 0, int dst = 0);

  std::int64_t height() const { return uv.dim(1); }
  std::int64_t width() const { return uv.dim(2); }
  /// Throws kContract unless values are finite with |u| < W and |v| < H.
  void validate() const;
};

/// out(p) = image(p + flow(p)), bilinear, border replication. image [C, H, W].
template <typename T>
Tensor<T> warp_backward(const Tensor<T>& image, const Tensor<T>& flow);
Tensor<float> warp_backward(const Tensor<float>& image, const FlowField& flow);

/// Adjoint of warp_backward in the image argument (scatter of bilinear weights).
template <typename T>
Tensor<T> warp_backward_adjoint(const Tensor<T>& grad_out, const Tensor<T>& flow);

/// Block-matching estimate of f_{src->dst} for gray frames [1, H, W]:
/// three coarse-to-fine levels, 8x8 blocks, +-4 px search per level.
/// Throws kEstimator for frames smaller than a block.
FlowField estimate_flow(const Tensor<float>& src, const Tensor<float>& dst, int src_index = 0,
                        int dst_index = 0);

/// Middlebury .flo interchange.
FlowField load_flo(const std::filesystem::path& path);
void save_flo(const FlowField& flow, const std::filesystem::path& path);
/// `flow_<src>_<dst>.flo`
std::string flo_filename(int src, int dst);

/// Bilinear resample with displacements scaled by the resolution ratio.
FlowField resize_flow(const FlowField& flow, std::int64_t height, std::int64_t width);

/// Memoizing flow lookup keyed by (src, dst) indices local to a clip.
class FlowSource {
 public:
  using Fn = std::function<FlowField(int src, int dst)>;

  FlowSource() = default;
  explicit FlowSource(Fn fn) : fn_(std::move(fn)) {}
  const FlowField& get(int src, int dst);
  bool valid() const noexcept { return static_cast<bool>(fn_); }

 private:
  Fn fn_;
  std::map<std::pair<int, int>, FlowField> cache_;
};

/// Estimates flow between frames of a [T, 1, H, W] gray stack.
FlowSource estimated_flow_source(Tensor<float> gray);

/// Loads `<dir>/<video>/flow_<s>_<d>.flo` or `<dir>/flow_<s>_<d>.flo` using the
/// given per-frame numbers, resized to (height, width); falls back to
/// `fallback` when neither file exists.
FlowSource directory_flow_source(std::filesystem::path dir, std::string video,
                                 std::vector<int> frame_numbers, std::int64_t height,
                                 std::int64_t width, FlowSource fallback);

}  // namespace histcolor
