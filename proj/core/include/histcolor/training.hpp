// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "histcolor/config.hpp"
#include "histcolor/pipeline.hpp"

namespace histcolor {

/// Adam without weight decay over every parameter of a store.
class Adam {
 public:
  Adam(nn::ParameterStore<float>& store, const OptimizerConfig& config);
  /// Applies one update from the accumulated gradients (missing gradients count as zero).
  void step();
  int steps_taken() const noexcept { return t_; }

 private:
  nn::ParameterStore<float>& store_;
  OptimizerConfig config_;
  std::vector<Tensor<float>> m_, v_;
  int t_ = 0;
};

struct StepRecord {
  int step = 0;  ///< 1-based
  LossParts loss;
  double ab_psnr = 0.0;  ///< of the training-mode prediction, averaged over the batch
};

/// Forward pass plus the three losses for one sample.
struct SampleLoss {
  ag::Var<float> pred;
  ag::Var<float> total;
  LossParts parts;
};
SampleLoss compute_loss(const Network<float>& net, const TrainingSample& sample,
                        const LossConfig& loss, bool training);

struct TrainCallbacks {
  std::function<void(const StepRecord&)> on_step;
  /// Called after steps that are multiples of checkpoint_every.
  std::function<void(int step)> on_checkpoint;
};

/// Deterministic loop: each step draws batch_size samples with an RNG seeded
/// by `seed`, averages their losses and applies one Adam update. Throws
/// kDivergence before updating when a loss is not finite, so the parameters
/// still hold the last good state.
std::vector<StepRecord> train(Network<float>& net, const std::vector<TrainingSample>& samples,
                              const LossConfig& loss, const OptimizerConfig& optimizer,
                              std::uint64_t seed, const TrainCallbacks& callbacks = {});

/// Eval-mode ab PSNR of the network on a sample.
double evaluate_ab_psnr(const Network<float>& net, const TrainingSample& sample);

void write_step_log_header(std::ostream& out);
void write_step_log_row(std::ostream& out, const StepRecord& record);

}  // namespace histcolor
