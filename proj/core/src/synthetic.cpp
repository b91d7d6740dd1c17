// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "histcolor/color.hpp"
#include "histcolor/image_io.hpp"
#include "histcolor/rng.hpp"
#include "histcolor/text.hpp"

namespace histcolor {
namespace {

constexpr double kLattice = 4.0;

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ULL ^
                                         mix(static_cast<std::uint64_t>(iy))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Bilinear value noise on a kLattice-pixel grid, in [0, 1].
double value_noise(std::uint64_t seed, double x, double y) {
  const double gx = x / kLattice, gy = y / kLattice;
  const double fx0 = std::floor(gx), fy0 = std::floor(gy);
  const auto ix = static_cast<std::int64_t>(fx0), iy = static_cast<std::int64_t>(fy0);
  const double fx = gx - fx0, fy = gy - fy0;
  const double v00 = lattice_value(seed, ix, iy), v10 = lattice_value(seed, ix + 1, iy);
  const double v01 = lattice_value(seed, ix, iy + 1), v11 = lattice_value(seed, ix + 1, iy + 1);
  return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

bool inside(const SyntheticShape& s, double lx, double ly) {
  if (s.kind == SyntheticShape::Kind::kRectangle)
    return lx >= -s.width / 2 && lx < s.width / 2 && ly >= -s.height / 2 && ly < s.height / 2;
  const double r = s.width / 2;
  return lx * lx + ly * ly < r * r;
}

double half_height(const SyntheticShape& s) {
  return s.kind == SyntheticShape::Kind::kRectangle ? s.height / 2 : s.width / 2;
}

std::pair<double, double> parse_pair(const std::string& value, const std::string& where) {
  const auto v = text::parse_doubles(value, where);
  require(v.size() == 2, ErrorCode::kConfig, where + ": expected two comma-separated numbers");
  return {v[0], v[1]};
}

}  // namespace

void SyntheticScene::validate() const {
  require(width >= 8 && height >= 8, ErrorCode::kConfig, "scene canvas must be at least 8x8");
  require(frames >= 1, ErrorCode::kConfig, "scene needs at least one frame");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& s = shapes[i];
    require(s.width > 0 && s.height > 0, ErrorCode::kConfig,
            "shape " + std::to_string(i) + " has non-positive size");
    const double hw = s.width / 2, hh = half_height(s);
    for (const int t : {0, frames - 1}) {
      const double cx = s.x + s.vx * t, cy = s.y + s.vy * t;
      require(cx - hw >= 0 && cx + hw <= static_cast<double>(width) && cy - hh >= 0 &&
                  cy + hh <= static_cast<double>(height),
              ErrorCode::kConfig,
              "shape " + std::to_string(i) + " leaves the canvas by frame " + std::to_string(t));
    }
  }
}

SyntheticScene parse_scene(const std::string& content, const std::string& origin) {
  SyntheticScene scene;
  scene.shapes.clear();
  for (const auto& [key, value] : text::parse_key_values(content, origin)) {
    const std::string where = origin + " key '" + key + "'";
    if (key == "size") {
      const auto x = value.find('x');
      if (x == std::string::npos) {
        scene.width = scene.height = text::parse_int(value, where);
      } else {
        scene.width = text::parse_int(value.substr(0, x), where);
        scene.height = text::parse_int(value.substr(x + 1), where);
      }
    } else if (key == "frames") {
      scene.frames = text::parse_int(value, where);
    } else if (key == "seed") {
      scene.seed = static_cast<std::uint64_t>(text::parse_int(value, where));
    } else if (key == "background") {
      std::tie(scene.background_a, scene.background_b) = parse_pair(value, where);
    } else if (key.rfind("shapes[", 0) == 0) {
      const auto close = key.find("].");
      require(close != std::string::npos, ErrorCode::kConfig, where + ": malformed shape key");
      const int index = text::parse_int(key.substr(7, close - 7), where);
      require(index >= 0 && index < 1024, ErrorCode::kConfig, where + ": bad shape index");
      if (scene.shapes.size() <= static_cast<std::size_t>(index))
        scene.shapes.resize(static_cast<std::size_t>(index) + 1);
      auto& s = scene.shapes[static_cast<std::size_t>(index)];
      const std::string field = key.substr(close + 2);
      if (field == "kind") {
        if (value == "rectangle")
          s.kind = SyntheticShape::Kind::kRectangle;
        else if (value == "disc")
          s.kind = SyntheticShape::Kind::kDisc;
        else
          fail(ErrorCode::kConfig, where + ": kind must be rectangle or disc");
      } else if (field == "color") {
        std::tie(s.a, s.b) = parse_pair(value, where);
      } else if (field == "velocity") {
        std::tie(s.vx, s.vy) = parse_pair(value, where);
      } else if (field == "position") {
        std::tie(s.x, s.y) = parse_pair(value, where);
      } else if (field == "size") {
        const auto v = text::parse_doubles(value, where);
        require(v.size() == 1 || v.size() == 2, ErrorCode::kConfig, where + ": size is w,h or d");
        s.width = v[0];
        s.height = v.size() == 2 ? v[1] : v[0];
      } else {
        fail(ErrorCode::kConfig, where + ": unknown shape field '" + field + "'");
      }
    } else {
      fail(ErrorCode::kConfig, where + ": unknown scene key");
    }
  }
  scene.validate();
  return scene;
}

SyntheticScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kConfig, "cannot open scene " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), path.string());
}

std::string format_scene(const SyntheticScene& scene) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "size = " << scene.width << "x" << scene.height << "\n";
  os << "frames = " << scene.frames << "\n";
  os << "seed = " << scene.seed << "\n";
  os << "background = " << scene.background_a << "," << scene.background_b << "\n";
  for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
    const auto& s = scene.shapes[i];
    const std::string p = "shapes[" + std::to_string(i) + "].";
    os << p << "kind = " << (s.kind == SyntheticShape::Kind::kDisc ? "disc" : "rectangle") << "\n";
    os << p << "color = " << s.a << "," << s.b << "\n";
    os << p << "velocity = " << s.vx << "," << s.vy << "\n";
    os << p << "position = " << s.x << "," << s.y << "\n";
    os << p << "size = " << s.width << "," << s.height << "\n";
  }
  return os.str();
}

SyntheticScene random_scene(std::uint64_t seed, std::int64_t height, std::int64_t width,
                            int frames, int shape_count, int max_speed) {
  Rng rng(seed);
  SyntheticScene scene;
  scene.width = width;
  scene.height = height;
  scene.frames = frames;
  scene.seed = rng.next() >> 33;
  const double bg_hue = rng.uniform(0, 2 * std::numbers::pi);
  const double bg_chroma = rng.uniform(5, 20);
  scene.background_a = bg_chroma * std::cos(bg_hue);
  scene.background_b = bg_chroma * std::sin(bg_hue);
  const std::int64_t extent = std::min(width, height);
  for (int i = 0; i < shape_count; ++i) {
    SyntheticShape s;
    s.kind = rng.uniform() < 0.5 ? SyntheticShape::Kind::kDisc : SyntheticShape::Kind::kRectangle;
    const auto lo = std::max<std::int64_t>(4, extent / 5) / 2 * 2;
    const auto hi = std::max<std::int64_t>(lo, extent * 3 / 8) / 2 * 2;
    s.width = static_cast<double>(rng.uniform_int(lo / 2, hi / 2) * 2);
    s.height = s.kind == SyntheticShape::Kind::kDisc
                   ? s.width
                   : static_cast<double>(rng.uniform_int(lo / 2, hi / 2) * 2);
    const double hue = rng.uniform(0, 2 * std::numbers::pi);
    const double chroma = rng.uniform(35, 70);
    s.a = chroma * std::cos(hue);
    s.b = chroma * std::sin(hue);
    s.vx = static_cast<double>(rng.uniform_int(-max_speed, max_speed));
    s.vy = static_cast<double>(rng.uniform_int(-max_speed, max_speed));
    const double travel_x = s.vx * (frames - 1), travel_y = s.vy * (frames - 1);
    const double hw = s.width / 2, hh = half_height(s);
    const double x_lo = hw - std::min(0.0, travel_x);
    const double x_hi = static_cast<double>(width) - hw - std::max(0.0, travel_x);
    const double y_lo = hh - std::min(0.0, travel_y);
    const double y_hi = static_cast<double>(height) - hh - std::max(0.0, travel_y);
    if (x_hi < x_lo || y_hi < y_lo) {
      s.vx = s.vy = 0;
      s.x = static_cast<double>(width) / 2;
      s.y = static_cast<double>(height) / 2;
    } else {
      s.x = static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(std::ceil(x_lo)),
                                                static_cast<std::int64_t>(std::floor(x_hi))));
      s.y = static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(std::ceil(y_lo)),
                                                static_cast<std::int64_t>(std::floor(y_hi))));
    }
    scene.shapes.push_back(s);
  }
  scene.validate();
  return scene;
}

SyntheticVideo::SyntheticVideo(SyntheticScene scene) : scene_(std::move(scene)) {
  scene_.validate();
  const std::int64_t h = scene_.height, w = scene_.width, plane = h * w;
  for (int t = 0; t < scene_.frames; ++t) {
    Tensor<float> rgb({3, h, w});
    std::vector<int> region(static_cast<std::size_t>(plane), -1);
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        const std::int64_t p = y * w + x;
        double l = 25.0 + 50.0 * value_noise(scene_.seed, static_cast<double>(x), static_cast<double>(y));
        double a = scene_.background_a, b = scene_.background_b;
        for (std::size_t k = 0; k < scene_.shapes.size(); ++k) {
          const auto& s = scene_.shapes[k];
          const double lx = static_cast<double>(x) - (s.x + s.vx * t);
          const double ly = static_cast<double>(y) - (s.y + s.vy * t);
          if (!inside(s, lx, ly)) continue;
          region[static_cast<std::size_t>(p)] = static_cast<int>(k);
          l = 35.0 + 50.0 * value_noise(mix(scene_.seed + 1 + k), lx, ly);
          a = s.a;
          b = s.b;
        }
        const auto c = lab_to_rgb(l, a, b);
        for (int ch = 0; ch < 3; ++ch) rgb[ch * plane + p] = static_cast<float>(c[ch]);
      }
    Tensor<float> gray, ab;
    split_normalized_lab(rgb_to_lab(rgb), gray, ab);
    rgb_.push_back(std::move(rgb));
    gray_.push_back(std::move(gray));
    ab_.push_back(std::move(ab));
    regions_.push_back(std::move(region));
  }
}

FlowField SyntheticVideo::flow(int src, int dst) const {
  require(src >= 0 && dst >= 0 && src < frames() && dst < frames(), ErrorCode::kContract,
          "synthetic flow index out of range");
  const std::int64_t h = scene_.height, w = scene_.width, plane = h * w;
  Tensor<float> uv({2, h, w});
  const auto& reg = regions(dst);
  for (std::int64_t p = 0; p < plane; ++p) {
    const int k = reg[static_cast<std::size_t>(p)];
    if (k < 0) continue;
    const auto& s = scene_.shapes[static_cast<std::size_t>(k)];
    uv[p] = static_cast<float>(s.vx * (src - dst));
    uv[plane + p] = static_cast<float>(s.vy * (src - dst));
  }
  return FlowField(std::move(uv), src, dst);
}

Tensor<float> SyntheticVideo::non_occluded(int src, int dst) const {
  const FlowField f = flow(src, dst);
  const std::int64_t h = scene_.height, w = scene_.width, plane = h * w;
  Tensor<float> mask({1, h, w});
  const auto& rd = regions(dst);
  const auto& rs = regions(src);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t p = y * w + x;
      const double sx = static_cast<double>(x) + f.uv[p];
      const double sy = static_cast<double>(y) + f.uv[plane + p];
      // Sub-pixel correspondences are never exact, so only integral ones count.
      if (sx != std::floor(sx) || sy != std::floor(sy)) continue;
      if (sx < 0 || sy < 0 || sx >= static_cast<double>(w) || sy >= static_cast<double>(h)) continue;
      const auto q = static_cast<std::int64_t>(sy) * w + static_cast<std::int64_t>(sx);
      if (rs[static_cast<std::size_t>(q)] == rd[static_cast<std::size_t>(p)]) mask[p] = 1.0f;
    }
  return mask;
}

Tensor<float> SyntheticVideo::gt_flow() const {
  std::vector<Tensor<float>> parts;
  for (int t = 0; t + 1 < frames(); ++t) parts.push_back(flow(t + 1, t).uv);
  return parts.empty() ? Tensor<float>({0, 2, scene_.height, scene_.width}) : stack_leading(parts);
}

FrameClip SyntheticVideo::clip(int start, int tau) const {
  const int len = 2 * tau + 1;
  require(start >= 0 && start + len <= frames(), ErrorCode::kContract,
          "synthetic clip window outside the video");
  std::vector<Tensor<float>> g, a;
  std::vector<std::string> ids;
  std::vector<int> numbers;
  for (int i = 0; i < len; ++i) {
    g.push_back(gray(start + i));
    a.push_back(ab(start + i));
    ids.push_back("synthetic/" + std::to_string(start + i));
    numbers.push_back(start + i);
  }
  return FrameClip(stack_leading(g), stack_leading(a), std::move(ids), std::move(numbers));
}

std::vector<FrameClip> SyntheticVideo::clips(int tau, int stride) const {
  std::vector<FrameClip> out;
  for (int s : window_starts(frames(), tau, stride)) out.push_back(clip(s, tau));
  return out;
}

FlowSource SyntheticVideo::flow_source(int start) const {
  auto self = std::make_shared<SyntheticVideo>(*this);
  return FlowSource([self, start](int src, int dst) {
    FlowField f = self->flow(start + src, start + dst);
    f.src_index = src;
    f.dst_index = dst;
    return f;
  });
}

SyntheticVideo generate_synthetic(const SyntheticScene& scene) { return SyntheticVideo(scene); }

void write_synthetic(const SyntheticVideo& video, const std::filesystem::path& dir, int max_gap) {
  std::filesystem::create_directories(dir);
  auto frame_name = [](int t) {
    std::ostringstream os;
    os << std::setw(5) << std::setfill('0') << t << ".png";
    return os.str();
  };
  const std::int64_t h = video.scene().height, w = video.scene().width, plane = h * w;
  for (int t = 0; t < video.frames(); ++t) {
    write_png(dir / "color" / frame_name(t), video.rgb(t));
    write_png(dir / "gray" / frame_name(t),
              lab_to_rgb(join_normalized_lab(video.gray(t), Tensor<float>({2, h, w}))));
    Tensor<float> mask({1, h, w});
    const auto& reg = video.regions(t);
    const auto n = static_cast<float>(std::max<std::size_t>(1, video.scene().shapes.size()));
    for (std::int64_t p = 0; p < plane; ++p)
      mask[p] = static_cast<float>(reg[static_cast<std::size_t>(p)] + 1) / n;
    write_png(dir / "masks" / frame_name(t), mask);
    for (int s = std::max(0, t - max_gap); s <= std::min(video.frames() - 1, t + max_gap); ++s)
      if (s != t) save_flo(video.flow(s, t), dir / "flow" / flo_filename(s, t));
  }
  std::ofstream out(dir / "scene.txt");
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + (dir / "scene.txt").string());
  out << format_scene(video.scene());
}

}  // namespace histcolor
