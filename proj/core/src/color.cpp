// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/color.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace histcolor {
namespace {

constexpr double kWhite[3] = {0.95047, 1.0, 1.08883};
constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

const Eigen::Matrix3d& rgb_to_xyz_matrix() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.4124564, 0.3575761, 0.1804375,
                                    0.2126729, 0.7151522, 0.0721750, 0.0193339, 0.1191920,
                                    0.9503041)
                                       .finished();
  return m;
}

const Eigen::Matrix3d& xyz_to_rgb_matrix() {
  static const Eigen::Matrix3d m = rgb_to_xyz_matrix().inverse();
  return m;
}

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kEpsilon ? f3 : (116.0 * f - 16.0) / kKappa;
}

void check_planar(const Tensor<float>& t, const char* what) {
  require(t.rank() == 3 && t.dim(0) == 3, ErrorCode::kContract,
          std::string(what) + " expects [3, H, W], got " + shape_string(t.shape()));
}

}  // namespace

std::array<double, 3> rgb_to_lab(double r, double g, double b) {
  for (double c : {r, g, b})
    require(c >= 0.0 && c <= 1.0, ErrorCode::kInputRange,
            "rgb value " + std::to_string(c) + " outside [0,1]");
  const Eigen::Vector3d lin(srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b));
  const Eigen::Vector3d xyz = rgb_to_xyz_matrix() * lin;
  const double fx = lab_f(xyz[0] / kWhite[0]);
  const double fy = lab_f(xyz[1] / kWhite[1]);
  const double fz = lab_f(xyz[2] / kWhite[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> lab_to_rgb(double l, double a, double b) {
  require(std::isfinite(l) && std::isfinite(a) && std::isfinite(b), ErrorCode::kInputRange,
          "non-finite Lab value");
  const double fy = (l + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  const double y = l > kKappa * kEpsilon ? fy * fy * fy : l / kKappa;
  const Eigen::Vector3d xyz(lab_f_inv(fx) * kWhite[0], y * kWhite[1], lab_f_inv(fz) * kWhite[2]);
  const Eigen::Vector3d lin = xyz_to_rgb_matrix() * xyz;
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) out[c] = std::clamp(linear_to_srgb(std::max(lin[c], 0.0)), 0.0, 1.0);
  return out;
}

Tensor<float> rgb_to_lab(const Tensor<float>& rgb) {
  check_planar(rgb, "rgb_to_lab");
  const std::int64_t plane = rgb.dim(1) * rgb.dim(2);
  Tensor<float> lab(rgb.shape());
  for (std::int64_t p = 0; p < plane; ++p) {
    const auto v = rgb_to_lab(rgb[p], rgb[plane + p], rgb[2 * plane + p]);
    for (int c = 0; c < 3; ++c) lab[c * plane + p] = static_cast<float>(v[c]);
  }
  return lab;
}

Tensor<float> lab_to_rgb(const Tensor<float>& lab) {
  check_planar(lab, "lab_to_rgb");
  const std::int64_t plane = lab.dim(1) * lab.dim(2);
  Tensor<float> rgb(lab.shape());
  for (std::int64_t p = 0; p < plane; ++p) {
    const auto v = lab_to_rgb(lab[p], lab[plane + p], lab[2 * plane + p]);
    for (int c = 0; c < 3; ++c) rgb[c * plane + p] = static_cast<float>(v[c]);
  }
  return rgb;
}

void split_normalized_lab(const Tensor<float>& lab, Tensor<float>& gray, Tensor<float>& ab) {
  check_planar(lab, "split_normalized_lab");
  const std::int64_t h = lab.dim(1), w = lab.dim(2), plane = h * w;
  gray = Tensor<float>({1, h, w});
  ab = Tensor<float>({2, h, w});
  for (std::int64_t p = 0; p < plane; ++p) {
    gray[p] = std::clamp(static_cast<float>(lab[p] / kLScale), 0.0f, 1.0f);
    ab[p] = std::clamp(static_cast<float>(lab[plane + p] / kAbScale), -1.0f, 1.0f);
    ab[plane + p] = std::clamp(static_cast<float>(lab[2 * plane + p] / kAbScale), -1.0f, 1.0f);
  }
}

Tensor<float> join_normalized_lab(const Tensor<float>& gray, const Tensor<float>& ab) {
  require(gray.rank() == 3 && gray.dim(0) == 1 && ab.rank() == 3 && ab.dim(0) == 2 &&
              gray.dim(1) == ab.dim(1) && gray.dim(2) == ab.dim(2),
          ErrorCode::kContract, "join_normalized_lab: expects [1,H,W] and [2,H,W]");
  const std::int64_t h = gray.dim(1), w = gray.dim(2), plane = h * w;
  Tensor<float> lab({3, h, w});
  for (std::int64_t p = 0; p < plane; ++p) {
    lab[p] = static_cast<float>(gray[p] * kLScale);
    lab[plane + p] = static_cast<float>(std::clamp(ab[p], -1.0f, 1.0f) * kAbScale);
    lab[2 * plane + p] = static_cast<float>(std::clamp(ab[plane + p], -1.0f, 1.0f) * kAbScale);
  }
  return lab;
}

}  // namespace histcolor
