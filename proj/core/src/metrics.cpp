// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "histcolor/color.hpp"

namespace histcolor {

namespace {

void require_same(const Tensor<float>& a, const Tensor<float>& b, const char* what) {
  require(a.shape() == b.shape(), ErrorCode::kContract,
          std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
              shape_string(b.shape()));
  require(a.numel() > 0, ErrorCode::kContract, std::string(what) + ": empty input");
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWindow);
  double sum = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    sum += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& in, std::int64_t h, std::int64_t w,
                                 const std::vector<double>& g) {
  const std::int64_t k = kSsimWindow, oh = h - k + 1, ow = w - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h * ow));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0;
      for (std::int64_t i = 0; i < k; ++i) s += g[static_cast<std::size_t>(i)] * in[static_cast<std::size_t>(y * w + x + i)];
      tmp[static_cast<std::size_t>(y * ow + x)] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t y = 0; y < oh; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0;
      for (std::int64_t i = 0; i < k; ++i) s += g[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>((y + i) * ow + x)];
      out[static_cast<std::size_t>(y * ow + x)] = s;
    }
  return out;
}

}  // namespace

double psnr(const Tensor<float>& a, const Tensor<float>& b, double peak) {
  require_same(a, b, "psnr");
  double sq = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.numel());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Tensor<float>& a, const Tensor<float>& b) {
  require_same(a, b, "ssim");
  require(a.rank() == 3, ErrorCode::kContract, "ssim expects [C, H, W]");
  const std::int64_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  require(h >= kSsimWindow && w >= kSsimWindow, ErrorCode::kContract,
          "ssim: frame " + std::to_string(h) + "x" + std::to_string(w) +
              " is smaller than the 11x11 window");
  const double c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
  const auto g = gaussian_window();
  const std::int64_t plane = h * w;
  double total = 0;
  for (std::int64_t ch = 0; ch < c; ++ch) {
    std::vector<double> x(static_cast<std::size_t>(plane)), y(x.size()), xx(x.size()), yy(x.size()), xy(x.size());
    for (std::int64_t i = 0; i < plane; ++i) {
      const double va = a[ch * plane + i], vb = b[ch * plane + i];
      const auto s = static_cast<std::size_t>(i);
      x[s] = va;
      y[s] = vb;
      xx[s] = va * va;
      yy[s] = vb * vb;
      xy[s] = va * vb;
    }
    const auto mx = filter_valid(x, h, w, g), my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g), syy = filter_valid(yy, h, w, g), sxy = filter_valid(xy, h, w, g);
    double sum = 0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
      sum += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(c);
}

double l2_error(const Tensor<float>& a, const Tensor<float>& b) {
  require_same(a, b, "l2_error");
  require(a.rank() == 3, ErrorCode::kContract, "l2_error expects [C, H, W]");
  const std::int64_t c = a.dim(0), plane = a.dim(1) * a.dim(2);
  double total = 0;
  for (std::int64_t p = 0; p < plane; ++p) {
    double sq = 0;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double d = static_cast<double>(a[ch * plane + p]) - b[ch * plane + p];
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(plane);
}

double ab_psnr(const Tensor<float>& pred_ab, const Tensor<float>& gt_ab) {
  return psnr(pred_ab, gt_ab, 255.0 / kAbScale);
}

Tensor<float> occlusion_mask(const FlowField& backward, const FlowField& forward) {
  require(backward.uv.shape() == forward.uv.shape(), ErrorCode::kContract,
          "occlusion_mask: flow shapes differ");
  const std::int64_t h = backward.height(), w = backward.width(), plane = h * w;
  const Tensor<float> fw_at = warp_backward(forward.uv, backward.uv);
  Tensor<float> mask({1, h, w});
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t i = y * w + x;
      const double u = backward.uv[i], v = backward.uv[plane + i];
      const double px = x + u, py = y + v;
      if (px < 0 || py < 0 || px > static_cast<double>(w - 1) || py > static_cast<double>(h - 1)) continue;
      const double fu = fw_at[i], fv = fw_at[plane + i];
      const double su = u + fu, sv = v + fv;
      const double lhs = su * su + sv * sv;
      const double rhs = 0.01 * (u * u + v * v + fu * fu + fv * fv) + 0.5;
      mask[i] = lhs > rhs ? 0.0f : 1.0f;
    }
  return mask;
}

double warp_error(const std::vector<Tensor<float>>& frames, const std::vector<FlowField>& backward,
                  const std::vector<Tensor<float>>& masks) {
  require(frames.size() >= 2, ErrorCode::kContract, "warp_error needs at least two frames");
  const std::size_t pairs = frames.size() - 1;
  require(backward.size() >= pairs && masks.size() >= pairs, ErrorCode::kContract,
          "warp_error: missing flows for " + std::to_string(pairs) + " consecutive pairs");
  double total = 0;
  for (std::size_t t = 0; t < pairs; ++t) {
    const Tensor<float>& a = frames[t];
    require(a.rank() == 3 && frames[t + 1].shape() == a.shape(), ErrorCode::kContract,
            "warp_error: inconsistent frame shapes");
    const std::int64_t c = a.dim(0), plane = a.dim(1) * a.dim(2);
    require(backward[t].uv.rank() == 3 && backward[t].height() == a.dim(1) &&
                backward[t].width() == a.dim(2) && masks[t].numel() == plane,
            ErrorCode::kContract, "warp_error: flow or mask size does not match frames");
    const Tensor<float> warped = warp_backward(frames[t + 1], backward[t]);
    double sum = 0;
    for (std::int64_t p = 0; p < plane; ++p) {
      if (masks[t][p] == 0.0f) continue;
      double sq = 0;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const double d = static_cast<double>(a[ch * plane + p]) - warped[ch * plane + p];
        sq += d * d;
      }
      sum += masks[t][p] * sq;
    }
    total += sum / static_cast<double>(plane);
  }
  return total / static_cast<double>(pairs);
}

double warp_error(const std::vector<Tensor<float>>& frames, const std::vector<FlowField>& backward,
                  const std::vector<FlowField>& forward) {
  require(frames.size() >= 2 && forward.size() + 1 >= frames.size(), ErrorCode::kContract,
          "warp_error: missing forward flows");
  require(backward.size() + 1 >= frames.size(), ErrorCode::kContract,
          "warp_error: missing backward flows");
  std::vector<Tensor<float>> masks;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t)
    masks.push_back(occlusion_mask(backward[t], forward[t]));
  return warp_error(frames, backward, masks);
}

}  // namespace histcolor
