// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/priors.hpp"

#include <cmath>

namespace histcolor {

template <typename T>
Tensor<T> visibility_mask(const Tensor<T>& a, const Tensor<T>& b_warped, double alpha) {
  require(alpha > 0.0, ErrorCode::kContract, "visibility mask needs alpha > 0");
  require(a.shape() == b_warped.shape() && a.rank() == 3, ErrorCode::kContract,
          "visibility mask: shapes " + shape_string(a.shape()) + " and " +
              shape_string(b_warped.shape()));
  const std::int64_t c = a.dim(0), h = a.dim(1), w = a.dim(2), plane = h * w;
  Tensor<T> m({1, h, w});
  for (std::int64_t p = 0; p < plane; ++p) {
    double d2 = 0;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double d = static_cast<double>(a[ch * plane + p]) - b_warped[ch * plane + p];
      d2 += d * d;
    }
    m[p] = static_cast<T>(std::exp(-alpha * d2));
  }
  return m;
}

template Tensor<float> visibility_mask<float>(const Tensor<float>&, const Tensor<float>&, double);
template Tensor<double> visibility_mask<double>(const Tensor<double>&, const Tensor<double>&,
                                                double);

std::vector<SharpnessMap> temporal_sharpness(const Tensor<float>& gray, FlowSource& flows,
                                             double theta) {
  require(gray.rank() == 4 && gray.dim(1) == 1, ErrorCode::kContract,
          "temporal_sharpness expects [T, 1, H, W]");
  const int t = static_cast<int>(gray.dim(0));
  require(t >= 2, ErrorCode::kContract, "temporal_sharpness needs at least one neighbor frame");
  const std::int64_t h = gray.dim(2), w = gray.dim(3), plane = h * w;
  std::vector<SharpnessMap> out;
  for (int i = 0; i < t; ++i) {
    const Tensor<float> xi = take_leading(gray, i);
    std::vector<double> acc(static_cast<std::size_t>(plane), 0.0);
    for (int j : {i - 1, i + 1}) {
      if (j < 0 || j >= t) continue;
      const Tensor<float> warped = warp_backward(take_leading(gray, j), flows.get(j, i));
      for (std::int64_t p = 0; p < plane; ++p) {
        const double d = static_cast<double>(warped[p]) - xi[p];
        acc[static_cast<std::size_t>(p)] += d * d;
      }
    }
    SharpnessMap s{Tensor<float>({1, h, w}), i};
    for (std::int64_t p = 0; p < plane; ++p)
      s.s[p] = static_cast<float>(std::exp(-0.5 * theta * acc[static_cast<std::size_t>(p)]));
    out.push_back(std::move(s));
  }
  return out;
}

ConnectionSchema parse_connection_schema(const std::string& name) {
  if (name == "plain") return ConnectionSchema::kPlain;
  if (name == "concat") return ConnectionSchema::kConcat;
  if (name == "multiply") return ConnectionSchema::kMultiply;
  fail(ErrorCode::kConfig, "unknown connection schema '" + name + "' (plain|concat|multiply)");
}

std::string connection_schema_name(ConnectionSchema schema) {
  switch (schema) {
    case ConnectionSchema::kPlain: return "plain";
    case ConnectionSchema::kConcat: return "concat";
    case ConnectionSchema::kMultiply: return "multiply";
  }
  return "multiply";
}

int input_channels(ConnectionSchema schema) { return schema == ConnectionSchema::kPlain ? 3 : 4; }

Tensor<float> assemble_input(const Tensor<float>& gray, const std::vector<SharpnessMap>& sharpness,
                             const std::vector<FlowField>& flows_to_center,
                             ConnectionSchema schema) {
  require(gray.rank() == 4 && gray.dim(1) == 1, ErrorCode::kContract,
          "assemble_input expects gray [T, 1, H, W]");
  const std::int64_t t = gray.dim(0), h = gray.dim(2), w = gray.dim(3), plane = h * w;
  require(static_cast<std::int64_t>(flows_to_center.size()) == t, ErrorCode::kContract,
          "assemble_input: need one flow per frame");
  const bool uses_s = schema != ConnectionSchema::kPlain;
  if (uses_s)
    require(static_cast<std::int64_t>(sharpness.size()) == t, ErrorCode::kContract,
            "assemble_input: need one sharpness map per frame");
  const std::int64_t center = t / 2;
  const int channels = input_channels(schema);
  Tensor<float> out({t, channels, h, w});
  for (std::int64_t i = 0; i < t; ++i) {
    const FlowField& f = flows_to_center[static_cast<std::size_t>(i)];
    require(f.height() == h && f.width() == w, ErrorCode::kContract,
            "assemble_input: flow size mismatch");
    if (uses_s)
      require(sharpness[static_cast<std::size_t>(i)].s.shape() == Shape{1, h, w},
              ErrorCode::kContract, "assemble_input: sharpness size mismatch");
    float* dst = out.data() + i * channels * plane;
    const float* x = gray.data() + i * plane;
    int c = 0;
    std::copy(x, x + plane, dst + (c++) * plane);
    if (uses_s) {
      const float* s = sharpness[static_cast<std::size_t>(i)].s.data();
      float* o = dst + (c++) * plane;
      for (std::int64_t p = 0; p < plane; ++p)
        o[p] = schema == ConnectionSchema::kMultiply ? s[p] * x[p] : s[p];
    }
    for (int k = 0; k < 2; ++k, ++c) {
      float* o = dst + c * plane;
      if (i == center)
        std::fill(o, o + plane, 0.0f);
      else
        std::copy(f.uv.data() + k * plane, f.uv.data() + (k + 1) * plane, o);
    }
  }
  return out;
}

}  // namespace histcolor
