// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/frames.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "histcolor/color.hpp"
#include "histcolor/image_io.hpp"
#include "histcolor/text.hpp"

namespace histcolor {

FrameClip::FrameClip(Tensor<float> gray_, std::optional<Tensor<float>> target_ab_,
                     std::vector<std::string> source_ids_, std::vector<int> frame_numbers_)
    : gray(std::move(gray_)),
      target_ab(std::move(target_ab_)),
      source_ids(std::move(source_ids_)),
      frame_numbers(std::move(frame_numbers_)) {
  require(gray.rank() == 4, ErrorCode::kContract, "clip gray must be [T, 1, H, W]");
  center_index = static_cast<int>(gray.dim(0) / 2);
  if (frame_numbers.empty())
    for (int i = 0; i < gray.dim(0); ++i) frame_numbers.push_back(i);
  validate();
}

void FrameClip::validate() const {
  require(gray.rank() == 4 && gray.dim(1) == 1, ErrorCode::kContract,
          "clip gray must be [T, 1, H, W], got " + shape_string(gray.shape()));
  const auto t = gray.dim(0);
  require(t >= 3 && t % 2 == 1, ErrorCode::kContract,
          "clip length must be odd and >= 3, got " + std::to_string(t));
  require(center_index == t / 2, ErrorCode::kContract, "clip center index must be tau");
  for (float v : gray.span())
    require(v >= 0.0f && v <= 1.0f, ErrorCode::kContract, "clip gray outside [0,1]");
  if (target_ab) {
    require(target_ab->shape() == Shape{t, 2, gray.dim(2), gray.dim(3)}, ErrorCode::kContract,
            "clip target_ab must be [T, 2, H, W], got " + shape_string(target_ab->shape()));
    for (float v : target_ab->span())
      require(v >= -1.0f && v <= 1.0f, ErrorCode::kContract, "clip target_ab outside [-1,1]");
  }
  require(static_cast<std::int64_t>(source_ids.size()) == t, ErrorCode::kContract,
          "clip needs one source id per frame");
  require(static_cast<std::int64_t>(frame_numbers.size()) == t, ErrorCode::kContract,
          "clip needs one frame number per frame");
}

void ClipManifest::validate() const {
  require(stride >= 1, ErrorCode::kConfig, "manifest stride must be >= 1");
  require(tau >= 1, ErrorCode::kConfig, "manifest tau must be >= 1");
  require(height > 0 && width > 0, ErrorCode::kConfig, "manifest resize target must be positive");
  for (const auto& v : videos)
    for (const auto& f : v.files)
      require(std::filesystem::exists(root / f), ErrorCode::kIngestion,
              "missing frame file " + (root / f).string());
}

ClipManifest parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIngestion, "cannot open manifest " + path.string());
  ClipManifest m;
  m.root = path.parent_path();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = text::strip_comment(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      if (m.videos.empty()) m.videos.push_back({"video", {}});
      m.videos.back().files.emplace_back(text);
      continue;
    }
    const auto key = text::trim(text.substr(0, eq));
    const auto value = text::trim(text.substr(eq + 1));
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (key == "root") {
      std::filesystem::path r(value);
      m.root = r.is_absolute() ? r : path.parent_path() / r;
    } else if (key == "tau") {
      m.tau = text::parse_int(value, where);
    } else if (key == "stride") {
      m.stride = text::parse_int(value, where);
    } else if (key == "height") {
      m.height = text::parse_int(value, where);
    } else if (key == "width") {
      m.width = text::parse_int(value, where);
    } else if (key == "video") {
      m.videos.push_back({value, {}});
    } else {
      fail(ErrorCode::kConfig, where + ": unknown manifest key '" + key + "'");
    }
  }
  m.validate();
  return m;
}

ClipManifest manifest_from_directory(const std::filesystem::path& root, int tau, int stride,
                                     std::int64_t height, std::int64_t width) {
  ClipManifest m;
  m.root = root;
  m.tau = tau;
  m.stride = stride;
  m.height = height;
  m.width = width;
  auto add_video = [&](const std::filesystem::path& dir, const std::string& name) {
    VideoEntry v{name, {}};
    for (const auto& f : list_png_files(dir))
      v.files.push_back(std::filesystem::relative(f, root));
    if (!v.files.empty()) m.videos.push_back(std::move(v));
  };
  add_video(root, root.filename().string());
  if (m.videos.empty()) {
    std::vector<std::filesystem::path> dirs;
    for (const auto& e : std::filesystem::directory_iterator(root))
      if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) add_video(d, d.filename().string());
  }
  m.validate();
  return m;
}

std::vector<int> window_starts(int n, int tau, int stride) {
  require(stride >= 1 && tau >= 0, ErrorCode::kConfig, "window_starts: bad tau/stride");
  std::vector<int> starts;
  const int len = 2 * tau + 1;
  for (int s = 0; s + len <= n; s += stride) starts.push_back(s);
  return starts;
}

namespace {

struct Taps {
  std::vector<std::int64_t> first;
  std::vector<std::vector<double>> weights;
};

Taps resize_taps(std::int64_t in, std::int64_t out) {
  Taps taps;
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double support = std::max(scale, 1.0);
  for (std::int64_t o = 0; o < out; ++o) {
    const double center = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const auto lo = static_cast<std::int64_t>(std::floor(center - support));
    const auto hi = static_cast<std::int64_t>(std::ceil(center + support));
    std::vector<double> w;
    double total = 0;
    for (std::int64_t i = lo; i <= hi; ++i) {
      const double v = std::max(0.0, 1.0 - std::abs(static_cast<double>(i) - center) / support);
      w.push_back(v);
      total += v;
    }
    for (auto& v : w) v /= total;
    taps.first.push_back(lo);
    taps.weights.push_back(std::move(w));
  }
  return taps;
}

}  // namespace

Tensor<float> resize_bilinear(const Tensor<float>& image, std::int64_t height,
                              std::int64_t width) {
  require(image.rank() == 3, ErrorCode::kContract, "resize expects [C, H, W]");
  require(height > 0 && width > 0, ErrorCode::kContract, "resize target must be positive");
  const std::int64_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == height && w == width) return image;
  const Taps tx = resize_taps(w, width);
  const Taps ty = resize_taps(h, height);
  std::vector<double> rows(static_cast<std::size_t>(c * h * width));
  for (std::int64_t ch = 0; ch < c; ++ch)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < width; ++x) {
        double acc = 0;
        const auto& wts = tx.weights[static_cast<std::size_t>(x)];
        for (std::size_t k = 0; k < wts.size(); ++k) {
          const std::int64_t ix = std::clamp<std::int64_t>(tx.first[static_cast<std::size_t>(x)] +
                                                               static_cast<std::int64_t>(k),
                                                           0, w - 1);
          acc += wts[k] * image[(ch * h + y) * w + ix];
        }
        rows[static_cast<std::size_t>((ch * h + y) * width + x)] = acc;
      }
  Tensor<float> out({c, height, width});
  for (std::int64_t ch = 0; ch < c; ++ch)
    for (std::int64_t y = 0; y < height; ++y) {
      const auto& wts = ty.weights[static_cast<std::size_t>(y)];
      for (std::int64_t x = 0; x < width; ++x) {
        double acc = 0;
        for (std::size_t k = 0; k < wts.size(); ++k) {
          const std::int64_t iy = std::clamp<std::int64_t>(ty.first[static_cast<std::size_t>(y)] +
                                                               static_cast<std::int64_t>(k),
                                                           0, h - 1);
          acc += wts[k] * rows[static_cast<std::size_t>((ch * h + iy) * width + x)];
        }
        out[(ch * height + y) * width + x] = static_cast<float>(acc);
      }
    }
  return out;
}

void load_frame(const std::filesystem::path& path, std::int64_t height, std::int64_t width,
                Tensor<float>& gray, Tensor<float>& ab) {
  Tensor<float> rgb = resize_bilinear(read_png(path), height, width);
  for (auto& v : rgb.span()) v = std::clamp(v, 0.0f, 1.0f);
  split_normalized_lab(rgb_to_lab(rgb), gray, ab);
}

ClipStream::ClipStream(ClipManifest manifest, WarningSink warn)
    : manifest_(std::move(manifest)), sink_(std::move(warn)) {
  manifest_.validate();
}

void ClipStream::warn(const std::string& message) {
  warnings_.push_back(message);
  if (sink_) sink_(message);
}

bool ClipStream::open_next_video() {
  while (video_ < manifest_.videos.size()) {
    const auto& v = manifest_.videos[video_];
    const int n = static_cast<int>(v.files.size());
    const int len = 2 * manifest_.tau + 1;
    if (n < len) {
      warn("skipping video '" + v.name + "': " + std::to_string(n) +
           " frames is shorter than a window of " + std::to_string(len));
      ++video_;
      continue;
    }
    starts_ = window_starts(n, manifest_.tau, manifest_.stride);
    window_ = 0;
    video_name_ = v.name;
    cache_.assign(static_cast<std::size_t>(n), std::nullopt);
    return true;
  }
  return false;
}

std::optional<FrameClip> ClipStream::next() {
  if (window_ >= starts_.size()) {
    if (!starts_.empty()) ++video_;
    starts_.clear();
    if (!open_next_video()) return std::nullopt;
  }
  const auto& v = manifest_.videos[video_];
  const int start = starts_[window_++];
  const int len = 2 * manifest_.tau + 1;
  const std::int64_t h = manifest_.height, w = manifest_.width;
  Tensor<float> gray({len, 1, h, w});
  Tensor<float> ab({len, 2, h, w});
  std::vector<std::string> ids;
  std::vector<int> numbers;
  for (int i = 0; i < len; ++i) {
    const int f = start + i;
    auto& slot = cache_[static_cast<std::size_t>(f)];
    if (!slot) {
      Tensor<float> g, a;
      load_frame(manifest_.root / v.files[static_cast<std::size_t>(f)], h, w, g, a);
      slot.emplace(std::move(g), std::move(a));
    }
    put_leading(gray, i, slot->first);
    put_leading(ab, i, slot->second);
    ids.push_back(v.name + "/" + v.files[static_cast<std::size_t>(f)].filename().string());
    numbers.push_back(f);
  }
  // Frames before the next window's start are no longer needed.
  if (window_ < starts_.size())
    for (int f = start; f < starts_[window_] && f < static_cast<int>(cache_.size()); ++f)
      cache_[static_cast<std::size_t>(f)].reset();
  return FrameClip(std::move(gray), std::move(ab), std::move(ids), std::move(numbers));
}

ClipStream load_clips(const ClipManifest& manifest, ClipStream::WarningSink warn) {
  return ClipStream(manifest, std::move(warn));
}

}  // namespace histcolor
