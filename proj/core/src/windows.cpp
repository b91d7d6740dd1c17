// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/windows.hpp"

#include <string>

namespace histcolor {

void WindowGrouping::validate(std::int64_t height, std::int64_t width) const {
  require(windows >= 1, ErrorCode::kContract, "window count must be at least 1");
  require(height % windows == 0 && width % windows == 0, ErrorCode::kContract,
          "window count " + std::to_string(windows) + " does not divide " +
              std::to_string(height) + "x" + std::to_string(width));
}

WindowLayout make_window_layout(const Shape& x_shape, int windows, WindowMode mode) {
  require(x_shape.size() == 4, ErrorCode::kContract, "window layout expects [T, C, H, W]");
  const std::int64_t frames = x_shape[0];
  const std::int64_t height = x_shape[2];
  const std::int64_t width = x_shape[3];
  WindowGrouping{windows, mode}.validate(height, width);
  const std::int64_t wh = height / windows;
  const std::int64_t ww = width / windows;

  WindowLayout layout;
  layout.channels = x_shape[1];
  layout.plane = height * width;
  const std::int64_t frame_stride = layout.channels * layout.plane;
  const std::int64_t s2 = static_cast<std::int64_t>(windows) * windows;
  layout.offsets.reserve(static_cast<std::size_t>(frames * s2 * wh * ww));
  if (mode == WindowMode::kSpatial) {
    layout.groups = frames * s2;
    layout.tokens = wh * ww;
    for (std::int64_t t = 0; t < frames; ++t)
      for (std::int64_t wy = 0; wy < windows; ++wy)
        for (std::int64_t wx = 0; wx < windows; ++wx)
          for (std::int64_t iy = 0; iy < wh; ++iy)
            for (std::int64_t ix = 0; ix < ww; ++ix)
              layout.offsets.push_back(t * frame_stride + (wy * wh + iy) * width + wx * ww + ix);
  } else {
    layout.groups = s2;
    layout.tokens = frames * wh * ww;
    for (std::int64_t wy = 0; wy < windows; ++wy)
      for (std::int64_t wx = 0; wx < windows; ++wx)
        for (std::int64_t t = 0; t < frames; ++t)
          for (std::int64_t iy = 0; iy < wh; ++iy)
            for (std::int64_t ix = 0; ix < ww; ++ix)
              layout.offsets.push_back(t * frame_stride + (wy * wh + iy) * width + wx * ww + ix);
  }
  return layout;
}

}  // namespace histcolor
