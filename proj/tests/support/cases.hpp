// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations and gradient-check setups shared by
// the unit tests and the acceptance runner.

#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "histcolor/drconv.hpp"
#include "histcolor/jfhm.hpp"
#include "histcolor/network.hpp"
#include "histcolor/objectives.hpp"
#include "histcolor/ops.hpp"
#include "histcolor/pipeline.hpp"
#include "histcolor/synthetic.hpp"
#include "test_support.hpp"

namespace histcolor::testing {

// ---- scalar-loop oracles ---------------------------------------------------

/// Bilinear sample of channel c of a [C, H, W] array at (x, y), neighbors clamped.
inline double sample_clamped(const Tensor<double>& img, std::int64_t c, double x, double y) {
  const std::int64_t h = img.dim(1), w = img.dim(2);
  const double fx = std::floor(x), fy = std::floor(y);
  const double ax = x - fx, ay = y - fy;
  auto at = [&](double yy, double xx) {
    const auto yi = std::clamp<std::int64_t>(static_cast<std::int64_t>(yy), 0, h - 1);
    const auto xi = std::clamp<std::int64_t>(static_cast<std::int64_t>(xx), 0, w - 1);
    return img(c, yi, xi);
  };
  return (1 - ay) * ((1 - ax) * at(fy, fx) + ax * at(fy, fx + 1)) +
         ay * ((1 - ax) * at(fy + 1, fx) + ax * at(fy + 1, fx + 1));
}

inline double warp_loss_oracle(const Tensor<double>& pred, const Tensor<double>& ref,
                               const FlowPairs<double>& flows, const LossConfig& cfg) {
  const std::int64_t T = pred.dim(0), C = pred.dim(1), H = pred.dim(2), W = pred.dim(3);
  const std::int64_t Cr = ref.dim(1);
  double total = 0;
  int pairs = 0;
  for (int d : cfg.d_set)
    for (std::int64_t t = 0; t + d < T; ++t) {
      const Tensor<double>& f = flows.at({static_cast<int>(t + d), static_cast<int>(t)});
      const Tensor<double> p_t = take_leading(pred, t), p_n = take_leading(pred, t + d);
      const Tensor<double> r_t = take_leading(ref, t), r_n = take_leading(ref, t + d);
      double sq = 0;
      for (std::int64_t y = 0; y < H; ++y)
        for (std::int64_t x = 0; x < W; ++x) {
          const double sx = static_cast<double>(x) + f(0, y, x), sy = static_cast<double>(y) + f(1, y, x);
          double dist = 0;
          for (std::int64_t c = 0; c < Cr; ++c) {
            const double e = r_t(c, y, x) - sample_clamped(r_n, c, sx, sy);
            dist += e * e;
          }
          const double m = std::exp(-cfg.alpha * dist);
          for (std::int64_t c = 0; c < C; ++c) {
            const double e = m * (p_t(c, y, x) - sample_clamped(p_n, c, sx, sy));
            sq += e * e;
          }
        }
      total += std::sqrt(sq) / std::sqrt(static_cast<double>(C * H * W));
      ++pairs;
    }
  return total / pairs;
}

inline double charbonnier_oracle(const Tensor<double>& pred, const Tensor<double>& gt, double eps) {
  double s = 0;
  for (std::int64_t i = 0; i < pred.numel(); ++i) {
    const double d = pred[i] - gt[i];
    s += std::sqrt(d * d + eps * eps);
  }
  return s / static_cast<double>(pred.numel());
}

inline double smooth_oracle(const Tensor<double>& p) {
  const std::int64_t T = p.dim(0), C = p.dim(1), H = p.dim(2), W = p.dim(3);
  double sx = 0, sy = 0;
  for (std::int64_t t = 0; t < T; ++t)
    for (std::int64_t c = 0; c < C; ++c)
      for (std::int64_t y = 0; y < H; ++y)
        for (std::int64_t x = 0; x < W; ++x) {
          if (x + 1 < W) sx += std::abs(p(t, c, y, x + 1) - p(t, c, y, x));
          if (y + 1 < H) sy += std::abs(p(t, c, y + 1, x) - p(t, c, y, x));
        }
  return sx / static_cast<double>(T * C * H * (W - 1)) + sy / static_cast<double>(T * C * (H - 1) * W);
}

/// Direct SSIM: non-separable 11x11 Gaussian sums per valid window position.
inline double ssim_oracle(const Tensor<float>& a, const Tensor<float>& b) {
  const std::int64_t C = a.dim(0), H = a.dim(1), W = a.dim(2);
  double w[11][11], norm = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      norm += w[i][j];
    }
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double total = 0;
  for (std::int64_t c = 0; c < C; ++c) {
    double sum = 0;
    std::int64_t count = 0;
    for (std::int64_t y0 = 0; y0 + 11 <= H; ++y0)
      for (std::int64_t x0 = 0; x0 + 11 <= W; ++x0) {
        double mx = 0, my = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            mx += w[i][j] / norm * a[(c * H + y0 + i) * W + x0 + j];
            my += w[i][j] / norm * b[(c * H + y0 + i) * W + x0 + j];
          }
        double vx = 0, vy = 0, cov = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const double da = a[(c * H + y0 + i) * W + x0 + j] - mx;
            const double db = b[(c * H + y0 + i) * W + x0 + j] - my;
            vx += w[i][j] / norm * da * da;
            vy += w[i][j] / norm * db * db;
            cov += w[i][j] / norm * da * db;
          }
        sum += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    total += sum / static_cast<double>(count);
  }
  return total / static_cast<double>(C);
}

// ---- random loss inputs ----------------------------------------------------

struct LossCase {
  Tensor<double> pred, ref, gt;
  FlowPairs<double> flows;
  LossConfig cfg;
};

/// T in {2, 3} frames of 8x8, random flows within +-3 px, d_set {1} or {1, 2}.
inline LossCase random_loss_case(std::uint64_t seed) {
  Rng rng(seed);
  LossCase c;
  const std::int64_t t = 2 + rng.uniform_int(0, 1), h = 8, w = 8;
  c.pred = random_tensor<double>({t, 2, h, w}, rng);
  c.gt = random_tensor<double>({t, 2, h, w}, rng);
  c.ref = random_tensor<double>({t, 3, h, w}, rng, 0, 1);
  for (std::int64_t i = 0; i < c.ref.numel(); i += 3) c.ref[i] *= 0.2;
  c.cfg.d_set = t == 3 ? std::vector<int>{1, 2} : std::vector<int>{1};
  c.cfg.alpha = rng.uniform(1, 12);
  for (int d : c.cfg.d_set)
    for (std::int64_t i = 0; i + d < t; ++i)
      c.flows[{static_cast<int>(i + d), static_cast<int>(i)}] = random_tensor<double>({2, h, w}, rng, -3, 3);
  return c;
}

// ---- gradient checks -------------------------------------------------------

/// JFHM in double at T = 3, C = 8, 8x8 with all branches on.
inline GradCheckResult jfhm_grad_check(std::uint64_t seed, double step = 1e-6) {
  Rng rng(seed);
  nn::ParameterStore<double> store;
  JfhmConfig cfg;
  cfg.channels = 8;
  cfg.hist_channels = 16;
  Jfhm<double> jfhm(store, "jfhm", cfg, rng);
  auto x = ag::Var<double>::leaf(random_tensor<double>({3, 8, 8, 8}, rng));
  const auto flow = random_tensor<double>({3, 2, 8, 8}, rng, -2, 2);
  auto hist = random_tensor<double>({3, 16, 8, 8}, rng, 0, 1);
  const auto weights = random_tensor<double>({3, 8, 8, 8}, rng);
  auto loss = [&] { return ops::weighted_sum(jfhm.forward(x, flow, hist), weights); };
  std::vector<Probe> probes;
  add_probes(probes, x, 40, rng);
  for (auto& p : store.parameters()) add_probes(probes, p.var, 3, rng);
  return grad_check(loss, probes, step);
}

/// DRBlock in double at T = 3, C = 8, 8x8, exact assignment gradient, at a
/// point where every pixel's region argmax has a margin above 1e-2 in both
/// DRConvs. Guide weights are scaled up to spread the logits.
struct DrblockCheck {
  GradCheckResult result;
  double margin1 = 0, margin2 = 0;
};

inline DrblockCheck drblock_grad_check(std::uint64_t seed, double step = 1e-6) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(seed * 1000 + attempt);
    nn::ParameterStore<double> store;
    DRBlock<double> block(store, "blk", 8, 8, 3, 4, rng);
    for (auto* conv : {&block.conv1, &block.conv2}) {
      auto w = conv->guide.weight;
      for (std::int64_t i = 0; i < w.value().numel(); ++i) w.mutable_value()[i] *= 8.0;
    }
    auto x = ag::Var<double>::leaf(random_tensor<double>({3, 8, 8, 8}, rng));
    const auto mode = ops::AssignmentGradient::kExact;
    DrblockCheck out;
    {
      ag::NoGradGuard guard;
      out.margin1 = ops::region_margin(block.conv1.guide_logits(x).value());
      const auto h1 = ops::relu(block.bn1(block.conv1.forward(x, mode), true));
      out.margin2 = ops::region_margin(block.conv2.guide_logits(h1).value());
    }
    if (out.margin1 <= 1e-2 || out.margin2 <= 1e-2) continue;
    const auto weights = random_tensor<double>({3, 8, 8, 8}, rng);
    auto loss = [&] { return ops::weighted_sum(block.forward(x, true, mode), weights); };
    std::vector<Probe> probes;
    add_probes(probes, x, 40, rng);
    for (auto& p : store.parameters()) add_probes(probes, p.var, 4, rng);
    out.result = grad_check(loss, probes, step);
    return out;
  }
}

/// Tiny full network (C = 8, 32x32, T = 3) on a synthetic clip; total
/// training loss; 50 parameter coordinates drawn uniformly over all scalars.
inline GradCheckResult network_grad_check(std::uint64_t seed, double step = 1e-6) {
  NetworkConfig cfg;
  cfg.channels = 8;
  cfg.tau = 1;
  cfg.height = cfg.width = 32;
  Network<double> net(cfg, seed);
  const SyntheticVideo video(random_scene(seed + 1, 32, 32, 3, 2));
  FlowSource flows = video.flow_source(0);
  LossConfig loss_cfg;
  const TrainingSample s = prepare_training_sample(video.clip(0, 1), flows, cfg, loss_cfg);
  NetworkInputs<double> in;
  in.frames = s.inputs.frames.cast<double>();
  in.flow = s.inputs.flow.cast<double>();
  for (const auto& h : s.inputs.hist) in.hist.push_back(h.cast<double>());
  const Tensor<double> target = s.target_ab.cast<double>(), ref = s.mask_ref.cast<double>();
  FlowPairs<double> pairs;
  for (const auto& [k, v] : s.loss_flows) pairs[k] = v.cast<double>();
  auto loss = [&] {
    const auto pred = net.forward(in, true, ops::AssignmentGradient::kExact);
    return combine_losses(warp_loss(pred, ref, pairs, loss_cfg), charbonnier_loss(pred, target, loss_cfg.epsilon),
                          smooth_loss(pred), loss_cfg);
  };
  Rng rng(seed + 2);
  auto& params = net.store().parameters();
  const std::int64_t total = net.parameter_count();
  std::vector<Probe> probes;
  for (int k = 0; k < 50; ++k) {
    std::int64_t idx = rng.uniform_int(0, total - 1);
    for (auto& p : params) {
      const std::int64_t n = p.var.value().numel();
      if (idx < n) {
        probes.push_back({p.var, idx});
        break;
      }
      idx -= n;
    }
  }
  return grad_check(loss, probes, step);
}

}  // namespace histcolor::testing
