// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "histcolor/nn.hpp"

namespace histcolor {

struct CheckpointEntry {
  std::string name;
  bool buffer = false;  ///< batch-norm running statistic rather than a parameter
  Shape shape;
  std::int64_t offset = 0;  ///< float offset into weights.bin
  std::int64_t count = 0;
  std::string hash;  ///< FNV-1a 64 of the little-endian float32 bytes
};

/// `manifest.txt` next to `weights.bin`: one `param|buffer name shape offset
/// count hash` line per tensor, the step count and the run config snapshot.
struct CheckpointManifest {
  int step = 0;
  std::vector<CheckpointEntry> entries;
  std::string config;  ///< key = value snapshot

  std::string to_text() const;
  static CheckpointManifest parse(const std::string& text, const std::string& origin);
};

inline constexpr const char* kManifestFile = "manifest.txt";
inline constexpr const char* kWeightsFile = "weights.bin";

CheckpointManifest make_manifest(const nn::ParameterStore<float>& store, int step,
                                 std::string config);
/// Writes both files through temporary names and renames, so an existing
/// checkpoint in `dir` is replaced only once the new one is complete.
void save_checkpoint(const nn::ParameterStore<float>& store, const std::filesystem::path& dir,
                     int step, const std::string& config);
CheckpointManifest read_manifest(const std::filesystem::path& dir);
/// Names present on only one side or with differing shapes; empty when compatible.
std::vector<std::string> manifest_differences(const CheckpointManifest& manifest,
                                              const nn::ParameterStore<float>& store);
/// Loads weights into `store`. Throws kIncompatible listing every differing
/// tensor, kFormat on truncated or corrupted data. Returns the manifest.
CheckpointManifest load_checkpoint(nn::ParameterStore<float>& store, const std::filesystem::path& dir);

}  // namespace histcolor
