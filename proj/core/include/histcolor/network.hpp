// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "histcolor/drconv.hpp"
#include "histcolor/hist_grid.hpp"
#include "histcolor/jfhm.hpp"
#include "histcolor/priors.hpp"

namespace histcolor {

/// Scales hosting the JFHMs: skips at 1/2, 1/4, 1/8 plus the bottleneck at 1/8.
inline constexpr int kFirstHistLevel = 1;
inline constexpr int kLastHistLevel = 3;

struct NetworkConfig {
  std::int64_t channels = 32;  ///< C; encoder widths C, 2C, 4C, 8C
  int tau = 2;
  int heads = 4;
  int spatial_windows = 4;
  int temporal_windows = 2;
  HistConfig hist;
  int drconv_regions = 4;
  int drconv_kernel = 3;
  bool use_histogram = true;
  bool use_flow = true;
  bool use_spatial_attn = true;
  bool use_temporal_attn = true;
  ConnectionSchema connection = ConnectionSchema::kMultiply;
  std::int64_t height = 64;
  std::int64_t width = 64;

  int frames() const { return 2 * tau + 1; }
  int input_channels() const { return histcolor::input_channels(connection); }
  JfhmConfig jfhm(std::int64_t channels) const;
  /// Throws kConfig for invalid widths, window orders or frame sizes not
  /// divisible by 8 * s_spatial.
  void validate() const;
};

/// Names accepted by `ablate`: histogram, flow, spatial-attn, temporal-attn.
const std::vector<std::string>& ablation_flags();
/// Copy of `config` with one component removed. Throws kConfig for unknown flags.
NetworkConfig ablate(NetworkConfig config, const std::string& flag);

/// Per-clip network inputs.
template <typename T>
struct NetworkInputs {
  Tensor<T> frames;             ///< assembled [T, C_in, H, W]
  std::vector<Tensor<T>> hist;  ///< [T, B_ab, H/2^k, W/2^k] for k = 1..3
  Tensor<T> flow;               ///< flow to center [T, 2, H, W] at full resolution
};

struct ParameterInfo {
  std::string name;
  Shape shape;
};

template <typename T>
class Network {
 public:
  using Var = ag::Var<T>;

  explicit Network(NetworkConfig config, std::uint64_t seed = 0);
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  /// pred_ab [T, 2, H, W] in [-1, 1].
  Var forward(const NetworkInputs<T>& inputs, bool training,
              ops::AssignmentGradient mode = ops::AssignmentGradient::kStraightThrough) const;

  const NetworkConfig& config() const noexcept { return config_; }
  nn::ParameterStore<T>& store() noexcept { return *store_; }
  const nn::ParameterStore<T>& store() const noexcept { return *store_; }
  std::vector<ParameterInfo> manifest() const;
  std::int64_t parameter_count() const { return store_->parameter_count(); }

 private:
  struct Stage {
    nn::Conv2d<T> a, b;
  };

  NetworkConfig config_;
  std::unique_ptr<nn::ParameterStore<T>> store_;
  Stage enc_[4];
  Jfhm<T> skip_[3];
  Jfhm<T> bottleneck_;
  nn::Conv2d<T> merge_;
  nn::Conv2d<T> up_[3];
  DRBlock<T> dec_[4];
  nn::Conv2d<T> head_;
};

/// Flow-to-center resampled to 1/2^level, [T, 2, H_k, W_k].
template <typename T>
Tensor<T> flow_at_level(const Tensor<T>& flow, int level);

}  // namespace histcolor
