// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/training.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "histcolor/metrics.hpp"

namespace histcolor {

Adam::Adam(nn::ParameterStore<float>& store, const OptimizerConfig& config)
    : store_(store), config_(config) {
  for (const auto& p : store_.parameters()) {
    m_.emplace_back(p.var.shape());
    v_.emplace_back(p.var.shape());
  }
}

void Adam::step() {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, t_), c2 = 1.0 - std::pow(b2, t_);
  const double lr = config_.learning_rate, eps = config_.epsilon;
  auto& params = store_.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& var = params[k].var;
    const Tensor<float>& g = var.grad();
    if (g.empty()) continue;
    Tensor<float>& w = var.mutable_value();
    Tensor<float>& m = m_[k];
    Tensor<float>& v = v_[k];
    for (std::int64_t i = 0; i < w.numel(); ++i) {
      const double gi = g[i];
      m[i] = static_cast<float>(b1 * m[i] + (1 - b1) * gi);
      v[i] = static_cast<float>(b2 * v[i] + (1 - b2) * gi * gi);
      const double mh = m[i] / c1, vh = v[i] / c2;
      w[i] = static_cast<float>(w[i] - lr * mh / (std::sqrt(vh) + eps));
    }
  }
}

SampleLoss compute_loss(const Network<float>& net, const TrainingSample& sample,
                        const LossConfig& loss, bool training) {
  SampleLoss out;
  out.pred = net.forward(sample.inputs, training);
  const auto lw = warp_loss(out.pred, sample.mask_ref, sample.loss_flows, loss);
  const auto lc = charbonnier_loss(out.pred, sample.target_ab, loss.epsilon);
  const auto ls = smooth_loss(out.pred);
  out.parts.warp = lw.value()[0];
  out.parts.charbonnier = lc.value()[0];
  out.parts.smooth = ls.value()[0];
  out.parts = total_loss(out.parts, loss);
  out.total = combine_losses(lw, lc, ls, loss);
  return out;
}

std::vector<StepRecord> train(Network<float>& net, const std::vector<TrainingSample>& samples,
                              const LossConfig& loss, const OptimizerConfig& optimizer,
                              std::uint64_t seed, const TrainCallbacks& callbacks) {
  require(!samples.empty(), ErrorCode::kUsage, "no training samples");
  require(optimizer.batch_size >= 1, ErrorCode::kConfig, "batch_size must be >= 1");
  Adam adam(net.store(), optimizer);
  Rng rng(seed);
  std::vector<StepRecord> log;
  const float inv_batch = 1.0f / static_cast<float>(optimizer.batch_size);
  for (int step = 1; step <= optimizer.steps; ++step) {
    net.store().zero_grad();
    StepRecord rec;
    rec.step = step;
    for (int b = 0; b < optimizer.batch_size; ++b) {
      const auto idx = samples.size() == 1 ? 0 : static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(samples.size()) - 1));
      const TrainingSample& s = samples[idx];
      SampleLoss sl;
      try {
        sl = compute_loss(net, s, loss, true);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kDivergence)
          fail(ErrorCode::kDivergence, "step " + std::to_string(step) + ": " + e.what());
        throw;
      }
      ag::backward(ops::scale(sl.total, inv_batch));
      rec.loss.warp += sl.parts.warp * inv_batch;
      rec.loss.charbonnier += sl.parts.charbonnier * inv_batch;
      rec.loss.smooth += sl.parts.smooth * inv_batch;
      rec.ab_psnr += ab_psnr(sl.pred.value(), s.target_ab) * inv_batch;
    }
    rec.loss = total_loss(rec.loss, loss);
    adam.step();
    log.push_back(rec);
    if (callbacks.on_step) callbacks.on_step(rec);
    if (callbacks.on_checkpoint && optimizer.checkpoint_every > 0 && step % optimizer.checkpoint_every == 0)
      callbacks.on_checkpoint(step);
  }
  return log;
}

double evaluate_ab_psnr(const Network<float>& net, const TrainingSample& sample) {
  ag::NoGradGuard guard;
  return ab_psnr(net.forward(sample.inputs, false).value(), sample.target_ab);
}

void write_step_log_header(std::ostream& out) {
  out << "step,warp,charbonnier,smooth,total,ab_psnr\n";
}

void write_step_log_row(std::ostream& out, const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.step, r.loss.warp,
                r.loss.charbonnier, r.loss.smooth, r.loss.total, r.ab_psnr);
  out << buf;
}

}  // namespace histcolor
