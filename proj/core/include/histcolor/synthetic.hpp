// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "histcolor/flow.hpp"
#include "histcolor/frames.hpp"

namespace histcolor {

struct SyntheticShape {
  enum class Kind { kRectangle, kDisc };
  Kind kind = Kind::kDisc;
  double a = 0.0, b = 0.0;    ///< chroma in Lab units
  double vx = 0.0, vy = 0.0;  ///< displacement per frame, px
  double x = 0.0, y = 0.0;    ///< center at frame 0, px
  double width = 16.0, height = 16.0;  ///< rectangle extent; disc diameter is `width`
};

/// Moving textured shapes over a static textured background. Later shapes
/// are drawn on top of earlier ones.
struct SyntheticScene {
  std::int64_t width = 64;
  std::int64_t height = 64;
  int frames = 5;
  std::uint64_t seed = 1;
  double background_a = 0.0, background_b = 0.0;
  std::vector<SyntheticShape> shapes;

  /// Throws kConfig when a shape leaves the canvas or sizes are invalid.
  void validate() const;
};

/// Keys: size (WxH or N), frames, seed, background (a,b),
/// shapes[i].kind (rectangle|disc), shapes[i].color (a,b),
/// shapes[i].velocity (vx,vy), shapes[i].position (x,y), shapes[i].size (w,h or d).
SyntheticScene parse_scene(const std::string& content, const std::string& origin = "<scene>");
SyntheticScene load_scene(const std::filesystem::path& path);
std::string format_scene(const SyntheticScene& scene);

/// Random scene with integer velocities in [-max_speed, max_speed] and
/// saturated random chroma; used for training variety and held-out clips.
SyntheticScene random_scene(std::uint64_t seed, std::int64_t height, std::int64_t width,
                            int frames, int shape_count, int max_speed = 2);

/// Rendered frames plus exact geometry.
class SyntheticVideo {
 public:
  explicit SyntheticVideo(SyntheticScene scene);

  const SyntheticScene& scene() const noexcept { return scene_; }
  int frames() const noexcept { return scene_.frames; }
  const Tensor<float>& rgb(int t) const { return rgb_.at(static_cast<std::size_t>(t)); }
  /// Normalized gray [1, H, W] and ab [2, H, W] of frame t.
  const Tensor<float>& gray(int t) const { return gray_.at(static_cast<std::size_t>(t)); }
  const Tensor<float>& ab(int t) const { return ab_.at(static_cast<std::size_t>(t)); }
  /// Topmost shape index per pixel, -1 for background.
  const std::vector<int>& regions(int t) const { return regions_.at(static_cast<std::size_t>(t)); }

  /// Exact f_{src->dst} on the dst grid.
  FlowField flow(int src, int dst) const;
  /// 1 where pixel p of dst is visible at p + f_{src->dst}(p) in src.
  Tensor<float> non_occluded(int src, int dst) const;
  /// f_{t+1->t} for t = 0..T-2, stacked [T-1, 2, H, W].
  Tensor<float> gt_flow() const;

  FrameClip clip(int start, int tau) const;
  std::vector<FrameClip> clips(int tau, int stride) const;
  /// Exact flows for a clip starting at `start` (indices local to the clip).
  FlowSource flow_source(int start) const;

 private:
  SyntheticScene scene_;
  std::vector<Tensor<float>> rgb_, gray_, ab_;
  std::vector<std::vector<int>> regions_;
};

SyntheticVideo generate_synthetic(const SyntheticScene& scene);

/// Writes color/NNNNN.png, gray/NNNNN.png, flow/flow_<s>_<d>.flo for all
/// pairs with |s-d| <= max_gap, masks/ and scene.txt under `dir`.
void write_synthetic(const SyntheticVideo& video, const std::filesystem::path& dir, int max_gap);

}  // namespace histcolor
