// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "histcolor/tensor.hpp"

namespace histcolor {

/// Reads an 8-bit PNG as planar RGB [3, H, W] in [0,1]. Gray images are
/// replicated to three channels. Throws kIngestion naming the file.
Tensor<float> read_png(const std::filesystem::path& path);

/// Writes planar RGB [3, H, W] (or gray [1, H, W]) in [0,1] as 8-bit PNG.
void write_png(const std::filesystem::path& path, const Tensor<float>& image);

/// Round-to-nearest 8-bit quantization used by every PNG writer.
inline std::uint8_t quantize_u8(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return static_cast<std::uint8_t>(c * 255.0f + 0.5f);
}

/// Sorted list of *.png files in a directory.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

}  // namespace histcolor
