// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/objectives.hpp"

#include <cmath>
#include <memory>

#include "histcolor/flow.hpp"
#include "histcolor/ops.hpp"
#include "histcolor/priors.hpp"

namespace histcolor {

void LossConfig::validate(int frames) const {
  require(lambda1 >= 0 && lambda2 >= 0, ErrorCode::kConfig, "loss weights must be >= 0");
  require(alpha > 0, ErrorCode::kConfig, "alpha must be > 0");
  require(epsilon > 0, ErrorCode::kConfig, "epsilon must be > 0");
  require(!d_set.empty(), ErrorCode::kConfig, "d_set must not be empty");
  for (int d : d_set) {
    require(d >= 1, ErrorCode::kConfig, "frame intervals must be >= 1");
    if (frames > 0)
      require(d < frames, ErrorCode::kConfig,
              "frame interval " + std::to_string(d) + " must be smaller than the clip length " +
                  std::to_string(frames));
  }
}

namespace {

struct WarpTerm {
  int t = 0, d = 0;
  Tensor<double> mask;  // [H*W]
  Tensor<double> r;     // masked residual [C, H, W]
  double norm = 0.0;
};

}  // namespace

template <typename T>
ag::Var<T> warp_loss(const ag::Var<T>& pred, const Tensor<T>& mask_ref, const FlowPairs<T>& flows,
                     const LossConfig& config) {
  const Shape& s = pred.shape();
  require(s.size() == 4, ErrorCode::kContract, "warp_loss expects pred [T, C, H, W]");
  require(mask_ref.rank() == 4 && mask_ref.dim(0) == s[0] && mask_ref.dim(2) == s[2] &&
              mask_ref.dim(3) == s[3],
          ErrorCode::kContract,
          "warp_loss: reference " + shape_string(mask_ref.shape()) + " vs pred " + shape_string(s));
  const int frames = static_cast<int>(s[0]);
  config.validate(frames);
  const std::int64_t c = s[1], plane = s[2] * s[3], n = c * plane;
  auto terms = std::make_shared<std::vector<WarpTerm>>();
  double total = 0;
  for (int d : config.d_set)
    for (int t = 0; t + d < frames; ++t) {
      auto it = flows.find({t + d, t});
      require(it != flows.end(), ErrorCode::kContract,
              "warp_loss: missing flow f_{" + std::to_string(t + d) + "->" + std::to_string(t) + "}");
      const Tensor<T>& f = it->second;
      const Tensor<T> ref_t = take_leading(mask_ref, t);
      const Tensor<T> ref_w = warp_backward(take_leading(mask_ref, t + d), f);
      const Tensor<T> m = visibility_mask(ref_t, ref_w, config.alpha);
      const Tensor<T> pt = take_leading(pred.value(), t);
      const Tensor<T> pw = warp_backward(take_leading(pred.value(), t + d), f);
      WarpTerm term;
      term.t = t;
      term.d = d;
      term.mask = m.template cast<double>();
      term.r = Tensor<double>(pt.shape());
      double sq = 0;
      for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t p = 0; p < plane; ++p) {
          const double v = term.mask[p] * (static_cast<double>(pt[ch * plane + p]) - pw[ch * plane + p]);
          term.r[ch * plane + p] = v;
          sq += v * v;
        }
      term.norm = std::sqrt(sq);
      total += term.norm / std::sqrt(static_cast<double>(n));
      terms->push_back(std::move(term));
    }
  const double pairs = static_cast<double>(terms->size());
  require(pairs > 0, ErrorCode::kContract, "warp_loss: no (t, d) pairs");
  Tensor<T> out({1}, static_cast<T>(total / pairs));
  auto flows_copy = std::make_shared<FlowPairs<T>>(flows);
  return ag::make_result<T>(std::move(out), {pred}, [terms, flows_copy, c, plane, n, pairs](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const double seed = static_cast<double>(self.grad[0]) / (pairs * std::sqrt(static_cast<double>(n)));
    for (const auto& term : *terms) {
      if (term.norm == 0.0) continue;
      const Tensor<T>& f = flows_copy->at({term.t + term.d, term.t});
      // dL/dr = r / ||r||; r = M (.) (p_t - W p_{t+d}).
      Tensor<T> gm({c, f.dim(1), f.dim(2)});
      for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t p = 0; p < plane; ++p)
          gm[ch * plane + p] = static_cast<T>(seed * term.r[ch * plane + p] / term.norm * term.mask[p]);
      T* gt = g.data() + static_cast<std::int64_t>(term.t) * n;
      for (std::int64_t i = 0; i < n; ++i) gt[i] += gm[i];
      const Tensor<T> back = warp_backward_adjoint(gm, f);
      T* gd = g.data() + static_cast<std::int64_t>(term.t + term.d) * n;
      for (std::int64_t i = 0; i < n; ++i) gd[i] -= back[i];
    }
  });
}

template <typename T>
ag::Var<T> charbonnier_loss(const ag::Var<T>& pred, const Tensor<T>& gt, double epsilon) {
  require(pred.shape() == gt.shape(), ErrorCode::kContract,
          "charbonnier_loss: shapes " + shape_string(pred.shape()) + " and " + shape_string(gt.shape()));
  require(epsilon > 0, ErrorCode::kContract, "charbonnier_loss: epsilon must be > 0");
  const std::int64_t n = gt.numel();
  require(n > 0, ErrorCode::kContract, "charbonnier_loss: empty input");
  const double e2 = epsilon * epsilon;
  double total = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pred.value()[i]) - gt[i];
    total += std::sqrt(d * d + e2);
  }
  Tensor<T> out({1}, static_cast<T>(total / static_cast<double>(n)));
  return ag::make_result<T>(std::move(out), {pred}, [gt, e2, n](ag::Node<T>& self) {
    auto* in = self.inputs[0].get();
    auto& g = in->grad_buffer();
    const double seed = static_cast<double>(self.grad[0]) / static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(in->value[i]) - gt[i];
      g[i] += static_cast<T>(seed * d / std::sqrt(d * d + e2));
    }
  });
}

template <typename T>
ag::Var<T> smooth_loss(const ag::Var<T>& pred) {
  const Shape& s = pred.shape();
  require(s.size() == 4, ErrorCode::kContract, "smooth_loss expects [T, C, H, W]");
  const std::int64_t planes = s[0] * s[1], h = s[2], w = s[3];
  const std::int64_t nx = planes * h * (w - 1), ny = planes * (h - 1) * w;
  const T* v = pred.value().data();
  double sx = 0, sy = 0;
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        const std::int64_t i = (p * h + y) * w + x;
        require(std::isfinite(v[i]), ErrorCode::kInputRange, "smooth_loss: non-finite prediction");
        if (x + 1 < w) sx += std::abs(static_cast<double>(v[i + 1]) - v[i]);
        if (y + 1 < h) sy += std::abs(static_cast<double>(v[i + w]) - v[i]);
      }
  const double value = (nx > 0 ? sx / static_cast<double>(nx) : 0.0) +
                       (ny > 0 ? sy / static_cast<double>(ny) : 0.0);
  Tensor<T> out({1}, static_cast<T>(value));
  return ag::make_result<T>(std::move(out), {pred}, [planes, h, w, nx, ny](ag::Node<T>& self) {
    auto* in = self.inputs[0].get();
    auto& g = in->grad_buffer();
    const T* v = in->value.data();
    const double gx = nx > 0 ? static_cast<double>(self.grad[0]) / static_cast<double>(nx) : 0.0;
    const double gy = ny > 0 ? static_cast<double>(self.grad[0]) / static_cast<double>(ny) : 0.0;
    auto sign = [](double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); };
    for (std::int64_t p = 0; p < planes; ++p)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
          const std::int64_t i = (p * h + y) * w + x;
          if (x + 1 < w) {
            const double sg = gx * sign(static_cast<double>(v[i + 1]) - v[i]);
            g[i + 1] += static_cast<T>(sg);
            g[i] -= static_cast<T>(sg);
          }
          if (y + 1 < h) {
            const double sg = gy * sign(static_cast<double>(v[i + w]) - v[i]);
            g[i + w] += static_cast<T>(sg);
            g[i] -= static_cast<T>(sg);
          }
        }
  });
}

LossParts total_loss(LossParts parts, const LossConfig& config) {
  for (double v : {parts.warp, parts.charbonnier, parts.smooth})
    require(std::isfinite(v), ErrorCode::kDivergence,
            "non-finite loss component (warp=" + std::to_string(parts.warp) +
                ", charbonnier=" + std::to_string(parts.charbonnier) +
                ", smooth=" + std::to_string(parts.smooth) + ")");
  parts.total = config.lambda1 * parts.warp + config.lambda2 * parts.charbonnier + parts.smooth;
  return parts;
}

template <typename T>
ag::Var<T> combine_losses(const ag::Var<T>& warp, const ag::Var<T>& charbonnier,
                          const ag::Var<T>& smooth, const LossConfig& config) {
  return ops::add(ops::add(ops::scale(warp, static_cast<T>(config.lambda1)),
                           ops::scale(charbonnier, static_cast<T>(config.lambda2))),
                  smooth);
}

#define HISTCOLOR_INSTANTIATE_LOSSES(T)                                                       \
  template ag::Var<T> warp_loss<T>(const ag::Var<T>&, const Tensor<T>&, const FlowPairs<T>&,  \
                                   const LossConfig&);                                        \
  template ag::Var<T> charbonnier_loss<T>(const ag::Var<T>&, const Tensor<T>&, double);       \
  template ag::Var<T> smooth_loss<T>(const ag::Var<T>&);                                      \
  template ag::Var<T> combine_losses<T>(const ag::Var<T>&, const ag::Var<T>&,                 \
                                        const ag::Var<T>&, const LossConfig&);

HISTCOLOR_INSTANTIATE_LOSSES(float)
HISTCOLOR_INSTANTIATE_LOSSES(double)

#undef HISTCOLOR_INSTANTIATE_LOSSES

}  // namespace histcolor
