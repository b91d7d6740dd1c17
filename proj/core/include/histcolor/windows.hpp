// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "histcolor/tensor.hpp"

namespace histcolor {

enum class WindowMode { kSpatial, kTemporal };

/// s x s non-overlapping windows over the spatial plane.
struct WindowGrouping {
  int windows = 1;
  WindowMode mode = WindowMode::kSpatial;

  /// Throws kContract unless s >= 1 and s divides both h and w.
  void validate(std::int64_t height, std::int64_t width) const;
  std::int64_t window_height(std::int64_t height) const { return height / windows; }
  std::int64_t window_width(std::int64_t width) const { return width / windows; }
};

/// Pixel offsets (t * C * H * W + y * W + x) of every token, grouped
/// window-major. Spatial mode: groups are (t, wy, wx) with tokens (iy, ix).
/// Temporal mode: groups are (wy, wx) with tokens (t, iy, ix). Channel c of a
/// token lives at offset + c * H * W.
struct WindowLayout {
  std::int64_t groups = 0;
  std::int64_t tokens = 0;
  std::int64_t channels = 0;
  std::int64_t plane = 0;
  std::vector<std::int64_t> offsets;
};

WindowLayout make_window_layout(const Shape& x_shape, int windows, WindowMode mode);

/// [T, C, H, W] -> [T, s*s, tokens, C]; windows row-major, tokens row-major.
template <typename T>
Tensor<T> partition_windows(const Tensor<T>& x, int windows) {
  require(x.rank() == 4, ErrorCode::kContract, "partition_windows expects [T, C, H, W]");
  WindowGrouping{windows, WindowMode::kSpatial}.validate(x.dim(2), x.dim(3));
  const auto layout = make_window_layout(x.shape(), windows, WindowMode::kSpatial);
  const std::int64_t frames = x.dim(0);
  const std::int64_t per_frame = layout.groups / frames;
  Tensor<T> out({frames, per_frame, layout.tokens, layout.channels});
  T* dst = out.data();
  for (std::int64_t g = 0; g < layout.groups; ++g)
    for (std::int64_t l = 0; l < layout.tokens; ++l) {
      const std::int64_t base = layout.offsets[static_cast<std::size_t>(g * layout.tokens + l)];
      for (std::int64_t c = 0; c < layout.channels; ++c) *dst++ = x[base + c * layout.plane];
    }
  return out;
}

/// Inverse of partition_windows.
template <typename T>
Tensor<T> merge_windows(const Tensor<T>& windows_tensor, std::int64_t height, std::int64_t width) {
  require(windows_tensor.rank() == 4, ErrorCode::kContract,
          "merge_windows expects [T, s*s, tokens, C]");
  const std::int64_t frames = windows_tensor.dim(0);
  const std::int64_t count = windows_tensor.dim(1);
  const std::int64_t channels = windows_tensor.dim(3);
  int s = 1;
  while (static_cast<std::int64_t>(s) * s < count) ++s;
  require(static_cast<std::int64_t>(s) * s == count, ErrorCode::kContract,
          "merge_windows: window count is not a square");
  const auto layout = make_window_layout({frames, channels, height, width}, s, WindowMode::kSpatial);
  require(layout.tokens == windows_tensor.dim(2), ErrorCode::kContract,
          "merge_windows: token count does not match the target size");
  Tensor<T> out({frames, channels, height, width});
  const T* src = windows_tensor.data();
  for (std::int64_t g = 0; g < layout.groups; ++g)
    for (std::int64_t l = 0; l < layout.tokens; ++l) {
      const std::int64_t base = layout.offsets[static_cast<std::size_t>(g * layout.tokens + l)];
      for (std::int64_t c = 0; c < channels; ++c) out[base + c * layout.plane] = *src++;
    }
  return out;
}

}  // namespace histcolor
