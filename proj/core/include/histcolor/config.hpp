// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "histcolor/network.hpp"
#include "histcolor/objectives.hpp"

namespace histcolor {

struct OptimizerConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int steps = 300;
  int batch_size = 1;
  int checkpoint_every = 0;  ///< 0: only the final checkpoint
};

/// Synthetic training data used when no manifest is given.
struct SyntheticDataConfig {
  int videos = 1;
  int frames = 5;
  int shapes = 2;
  std::uint64_t seed = 1;
};

struct RunConfig {
  NetworkConfig network;
  LossConfig loss;
  OptimizerConfig optimizer;
  SyntheticDataConfig synthetic;
  std::filesystem::path train_manifest;  ///< empty: synthetic data
  std::filesystem::path flow_dir;        ///< empty: flow is estimated
  std::filesystem::path out_dir = "run";
  std::uint64_t seed = 0;
  double theta = kDefaultTheta;
  std::vector<std::string> without;  ///< ablation flags applied on top of `network`

  /// Network config with `without` applied.
  NetworkConfig effective_network() const;
  /// Throws kConfig on any invalid value.
  void validate() const;
};

/// Flat `key = value` text; unknown keys throw kConfig naming the key.
RunConfig parse_run_config(const std::string& content, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical text form; parse_run_config(format_run_config(c)) reproduces c.
std::string format_run_config(const RunConfig& config);
/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// FNV-1a 64 over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string hex64(std::uint64_t v);

}  // namespace histcolor
