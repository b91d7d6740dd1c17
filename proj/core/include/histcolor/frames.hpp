// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "histcolor/tensor.hpp"

namespace histcolor {

/// 2*tau+1 aligned frames: gray [T, 1, H, W] = L/100 and optional
/// target_ab [T, 2, H, W] = ab/128. Validated on construction.
struct FrameClip {
  Tensor<float> gray;
  std::optional<Tensor<float>> target_ab;
  int center_index = 0;
  std::vector<std::string> source_ids;
  /// Frame numbers within the source video, used to look up precomputed flow.
  std::vector<int> frame_numbers;

  FrameClip() = default;
  FrameClip(Tensor<float> gray, std::optional<Tensor<float>> target_ab,
            std::vector<std::string> source_ids, std::vector<int> frame_numbers = {});

  int frames() const { return static_cast<int>(gray.dim(0)); }
  std::int64_t height() const { return gray.dim(2); }
  std::int64_t width() const { return gray.dim(3); }
  int tau() const { return center_index; }
  /// Throws kContract when a range or shape invariant is broken.
  void validate() const;
};

struct VideoEntry {
  std::string name;
  std::vector<std::filesystem::path> files;  ///< relative to the manifest root
};

struct ClipManifest {
  std::filesystem::path root;
  std::vector<VideoEntry> videos;
  int tau = 2;
  int stride = 1;
  std::int64_t height = 64;
  std::int64_t width = 64;

  /// Throws kConfig for stride < 1 or tau < 1 and kIngestion for missing files.
  void validate() const;
};

/// Parses a manifest: `key = value` lines (root, tau, stride, height, width,
/// video) followed by relative frame paths; `video = <name>` starts a new
/// video. `#` starts a comment. A relative root is resolved against the
/// manifest's directory.
ClipManifest parse_manifest(const std::filesystem::path& path);

/// One video per subdirectory of `root` holding PNG frames; if `root` itself
/// holds PNG frames it is treated as a single video.
ClipManifest manifest_from_directory(const std::filesystem::path& root, int tau, int stride,
                                     std::int64_t height, std::int64_t width);

/// First-frame indices of all windows of length 2*tau+1 over n frames.
std::vector<int> window_starts(int n, int tau, int stride);

/// Separable triangle-filter resize of a planar [C, H, W] image. Upscaling
/// is plain bilinear; downscaling widens the filter by the scale factor.
Tensor<float> resize_bilinear(const Tensor<float>& image, std::int64_t height,
                              std::int64_t width);

/// Lazily produces clips from a manifest. Videos shorter than a window are
/// skipped with a warning; unreadable files throw kIngestion.
class ClipStream {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  ClipStream(ClipManifest manifest, WarningSink warn = {});
  std::optional<FrameClip> next();
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  /// Name of the video the last returned clip belongs to.
  const std::string& current_video() const noexcept { return video_name_; }

 private:
  void warn(const std::string& message);
  bool open_next_video();

  ClipManifest manifest_;
  WarningSink sink_;
  std::vector<std::string> warnings_;
  std::size_t video_ = 0;
  std::vector<int> starts_;
  std::size_t window_ = 0;
  std::string video_name_;
  std::vector<std::optional<std::pair<Tensor<float>, Tensor<float>>>> cache_;
};

ClipStream load_clips(const ClipManifest& manifest, ClipStream::WarningSink warn = {});

/// Reads a PNG, resizes it and converts to normalized (gray, ab).
void load_frame(const std::filesystem::path& path, std::int64_t height, std::int64_t width,
                Tensor<float>& gray, Tensor<float>& ab);

}  // namespace histcolor
