// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/plot.hpp"

#include <algorithm>
#include <cmath>

#include "histcolor/image_io.hpp"

namespace histcolor {

namespace {

constexpr std::int64_t kMargin = 10;

void put(Tensor<float>& img, std::int64_t x, std::int64_t y, float r, float g, float b) {
  const std::int64_t h = img.dim(1), w = img.dim(2);
  if (x < 0 || y < 0 || x >= w || y >= h) return;
  img[(0 * h + y) * w + x] = r;
  img[(1 * h + y) * w + x] = g;
  img[(2 * h + y) * w + x] = b;
}

}  // namespace

Tensor<float> render_line_plot(const std::vector<double>& values, std::int64_t width,
                               std::int64_t height) {
  require(width > 2 * kMargin && height > 2 * kMargin, ErrorCode::kContract,
          "plot canvas too small");
  Tensor<float> img({3, height, width}, 1.0f);
  const std::int64_t x0 = kMargin, x1 = width - 1 - kMargin;
  const std::int64_t y0 = kMargin, y1 = height - 1 - kMargin;
  for (std::int64_t x = x0; x <= x1; ++x) {
    put(img, x, y0, 0, 0, 0);
    put(img, x, y1, 0, 0, 0);
  }
  for (std::int64_t y = y0; y <= y1; ++y) {
    put(img, x0, y, 0, 0, 0);
    put(img, x1, y, 0, 0, 0);
  }
  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) return img;
  double lo = *std::min_element(finite.begin(), finite.end());
  double hi = *std::max_element(finite.begin(), finite.end());
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const std::size_t n = values.size();
  auto px = [&](std::size_t i) {
    return n == 1 ? 0.5 * static_cast<double>(x0 + x1)
                  : static_cast<double>(x0 + 1) +
                        static_cast<double>(x1 - x0 - 2) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  auto py = [&](double v) {
    return static_cast<double>(y1 - 1) - static_cast<double>(y1 - y0 - 2) * (v - lo) / (hi - lo);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[i])) continue;
    const double ax = px(i), ay = py(values[i]);
    const double bx = i + 1 < n && std::isfinite(values[i + 1]) ? px(i + 1) : ax;
    const double by = i + 1 < n && std::isfinite(values[i + 1]) ? py(values[i + 1]) : ay;
    const int steps = static_cast<int>(std::max(std::abs(bx - ax), std::abs(by - ay))) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double f = static_cast<double>(s) / steps;
      put(img, std::lround(ax + f * (bx - ax)), std::lround(ay + f * (by - ay)), 0.12f, 0.35f, 0.75f);
    }
  }
  return img;
}

void write_line_plot(const std::filesystem::path& path, const std::vector<double>& values) {
  write_png(path, render_line_plot(values));
}

}  // namespace histcolor
