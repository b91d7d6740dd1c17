// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "histcolor/flow.hpp"

namespace histcolor {

/// exp(-alpha * ||a - b_warped||^2) per pixel over channels, [1, H, W].
template <typename T>
Tensor<T> visibility_mask(const Tensor<T>& a, const Tensor<T>& b_warped, double alpha);

struct SharpnessMap {
  Tensor<float> s;  ///< [1, H, W] in (0, 1]
  int frame_index = 0;
};

inline constexpr double kDefaultTheta = 50.0;

/// s_i = exp(-(theta/2) * sum_j ||W(x_j, f_{j->i}) - x_i||^2) over the
/// neighbors j = i-1, i+1 that exist. gray is [T, 1, H, W].
std::vector<SharpnessMap> temporal_sharpness(const Tensor<float>& gray, FlowSource& flows,
                                             double theta = kDefaultTheta);

/// How sharpness enters the per-frame input stack.
enum class ConnectionSchema {
  kPlain,     ///< [x, u, v]
  kConcat,    ///< [x, s, u, v]
  kMultiply,  ///< [x, s*x, u, v]
};

ConnectionSchema parse_connection_schema(const std::string& name);
std::string connection_schema_name(ConnectionSchema schema);
int input_channels(ConnectionSchema schema);

/// Per-frame stack [x_i, s_i * x_i, f_{i->t}] (multiply schema) with the
/// center frame's flow channels forced to zero. Returns [T, channels, H, W].
Tensor<float> assemble_input(const Tensor<float>& gray, const std::vector<SharpnessMap>& sharpness,
                             const std::vector<FlowField>& flows_to_center,
                             ConnectionSchema schema = ConnectionSchema::kMultiply);

}  // namespace histcolor
