// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "histcolor/tensor.hpp"

namespace histcolor {

/// sRGB (D65) in [0,1] to CIE L*a*b*. Throws kInputRange outside [0,1].
std::array<double, 3> rgb_to_lab(double r, double g, double b);
/// CIE L*a*b* to sRGB, clamped to [0,1]. Throws kInputRange on non-finite input.
std::array<double, 3> lab_to_rgb(double l, double a, double b);

/// Planar [3, H, W] variants.
Tensor<float> rgb_to_lab(const Tensor<float>& rgb);
Tensor<float> lab_to_rgb(const Tensor<float>& lab);

/// Network normalization: gray = L / 100, ab = ab / 128.
inline constexpr double kLScale = 100.0;
inline constexpr double kAbScale = 128.0;

/// [3, H, W] Lab -> ([1, H, W] gray in [0,1], [2, H, W] ab in [-1,1]).
void split_normalized_lab(const Tensor<float>& lab, Tensor<float>& gray, Tensor<float>& ab);
/// Inverse of split_normalized_lab; ab is clamped to [-1,1] first.
Tensor<float> join_normalized_lab(const Tensor<float>& gray, const Tensor<float>& ab);

}  // namespace histcolor
