// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "histcolor/tensor.hpp"

namespace histcolor {

/// Rasterized polyline of `values` (x = index, y autoscaled) on a white canvas
/// with a frame, RGB [3, height, width] in [0, 1].
Tensor<float> render_line_plot(const std::vector<double>& values, std::int64_t width = 320,
                               std::int64_t height = 200);
void write_line_plot(const std::filesystem::path& path, const std::vector<double>& values);

}  // namespace histcolor
