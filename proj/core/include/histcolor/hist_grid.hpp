// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "histcolor/tensor.hpp"

namespace histcolor {

struct HistConfig {
  int cells = 8;    ///< G
  int l_bins = 8;   ///< B_L
  int a_bins = 16;  ///< B_a
  int b_bins = 16;  ///< B_b

  int ab_bins() const { return a_bins * b_bins; }
  /// Throws kConfig for non-positive counts.
  void validate() const;
};

/// Bilateral-grid color reference h[G, G, B_L, B_ab] (rows, columns,
/// luminance bin, flattened ab bin a * B_b + b).
struct HistGrid {
  HistConfig config;
  Tensor<float> h;

  float& at(int gy, int gx, int l, int ab) {
    return h[((static_cast<std::int64_t>(gy) * config.cells + gx) * config.l_bins + l) *
                 config.ab_bins() +
             ab];
  }
  float at(int gy, int gx, int l, int ab) const {
    return h[((static_cast<std::int64_t>(gy) * config.cells + gx) * config.l_bins + l) *
                 config.ab_bins() +
             ab];
  }
};

/// Flattened ab bin of a normalized (a, b) pair, nearest bin.
int ab_bin(const HistConfig& config, float a, float b);

/// Unnormalized splat: bilinear over the nearest 2x2 cells, linear over the
/// two nearest luminance bins, nearest bin in ab. Total mass equals H*W.
Tensor<double> splat_hist(const Tensor<float>& gray, const Tensor<float>& ab,
                          const HistConfig& config);

/// Splat followed by per-(cell, L-bin) normalization; empty entries become
/// the uniform distribution.
HistGrid build_hist_grid(const Tensor<float>& gray, const Tensor<float>& ab,
                         const HistConfig& config);

/// Per-pixel descriptor [B_ab, H, W]: trilinear read-out of the grid at each
/// pixel's position and luminance. Throws kInputRange on non-finite gray.
Tensor<float> slice_hist(const HistGrid& grid, const Tensor<float>& gray);

/// Levels 0..k of repeated fixed 2x2 averaging of a [C, H, W] map.
std::vector<Tensor<float>> hist_pyramid(const Tensor<float>& feature, int levels);

/// Descriptors of every frame of a [T, 1, H, W] stack, sliced with each
/// frame's own luminance and pooled to scales 1/2^first .. 1/2^last.
/// Returns one [T, B_ab, H_k, W_k] tensor per scale.
std::vector<Tensor<float>> hist_features(const HistGrid& grid, const Tensor<float>& gray_stack,
                                         int first_level, int last_level);

/// Uniform (1/B_ab) descriptors with the same shapes as hist_features.
std::vector<Tensor<float>> uniform_hist_features(const HistConfig& config, std::int64_t frames,
                                                 std::int64_t height, std::int64_t width,
                                                 int first_level, int last_level);

void save_hist_grid(const HistGrid& grid, const std::filesystem::path& path);
HistGrid load_hist_grid(const std::filesystem::path& path);

}  // namespace histcolor
