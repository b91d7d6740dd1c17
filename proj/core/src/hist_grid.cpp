// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/hist_grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace histcolor {

void HistConfig::validate() const {
  require(cells > 0 && l_bins > 0 && a_bins > 0 && b_bins > 0, ErrorCode::kConfig,
          "histogram bin counts must be positive");
}

namespace {

struct Lerp {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

// Grid coordinate of `pos` in [0, 1] sampled at n bin centers, clamped.
inline Lerp lerp_coord(double pos, int n) {
  const double c = std::clamp(pos * n - 0.5, 0.0, static_cast<double>(n - 1));
  Lerp l{};
  l.i0 = static_cast<int>(std::floor(c));
  l.i1 = std::min(l.i0 + 1, n - 1);
  l.w1 = c - l.i0;
  return l;
}

void check_frame(const Tensor<float>& gray, const char* what) {
  require(gray.rank() == 3 && gray.dim(0) == 1, ErrorCode::kContract,
          std::string(what) + " expects gray [1, H, W], got " + shape_string(gray.shape()));
}

}  // namespace

int ab_bin(const HistConfig& config, float a, float b) {
  auto bin = [](float v, int n) {
    const int i = static_cast<int>(std::floor((static_cast<double>(v) + 1.0) * 0.5 * n));
    return std::clamp(i, 0, n - 1);
  };
  return bin(a, config.a_bins) * config.b_bins + bin(b, config.b_bins);
}

Tensor<double> splat_hist(const Tensor<float>& gray, const Tensor<float>& ab,
                          const HistConfig& config) {
  config.validate();
  check_frame(gray, "build_hist_grid");
  require(ab.rank() == 3 && ab.dim(0) == 2 && ab.dim(1) == gray.dim(1) && ab.dim(2) == gray.dim(2),
          ErrorCode::kContract, "build_hist_grid: ab must be [2, H, W] matching gray");
  const int g = config.cells, bl = config.l_bins, bab = config.ab_bins();
  const std::int64_t h = gray.dim(1), w = gray.dim(2), plane = h * w;
  Tensor<double> mass({g, g, bl, bab});
  for (std::int64_t y = 0; y < h; ++y) {
    const Lerp ly = lerp_coord((static_cast<double>(y) + 0.5) / static_cast<double>(h), g);
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t p = y * w + x;
      const float gv = gray[p];
      require(std::isfinite(gv) && std::isfinite(ab[p]) && std::isfinite(ab[plane + p]),
              ErrorCode::kInputRange, "non-finite histogram reference pixel");
      const Lerp lx = lerp_coord((static_cast<double>(x) + 0.5) / static_cast<double>(w), g);
      const Lerp ll = lerp_coord(gv, bl);
      const int bin = ab_bin(config, ab[p], ab[plane + p]);
      const int ys[2] = {ly.i0, ly.i1}, xs[2] = {lx.i0, lx.i1}, ls[2] = {ll.i0, ll.i1};
      const double wy[2] = {1 - ly.w1, ly.w1}, wx[2] = {1 - lx.w1, lx.w1}, wl[2] = {1 - ll.w1, ll.w1};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c)
            mass[((static_cast<std::int64_t>(ys[a]) * g + xs[b]) * bl + ls[c]) * bab + bin] +=
                wy[a] * wx[b] * wl[c];
    }
  }
  return mass;
}

HistGrid build_hist_grid(const Tensor<float>& gray, const Tensor<float>& ab,
                         const HistConfig& config) {
  const Tensor<double> mass = splat_hist(gray, ab, config);
  const int bab = config.ab_bins();
  HistGrid grid{config, Tensor<float>(mass.shape())};
  const std::int64_t rows = mass.numel() / bab;
  for (std::int64_t r = 0; r < rows; ++r) {
    double total = 0;
    for (int k = 0; k < bab; ++k) total += mass[r * bab + k];
    for (int k = 0; k < bab; ++k)
      grid.h[r * bab + k] = total > 0 ? static_cast<float>(mass[r * bab + k] / total)
                                      : 1.0f / static_cast<float>(bab);
  }
  return grid;
}

Tensor<float> slice_hist(const HistGrid& grid, const Tensor<float>& gray) {
  check_frame(gray, "slice_hist");
  const HistConfig& cfg = grid.config;
  const int g = cfg.cells, bl = cfg.l_bins, bab = cfg.ab_bins();
  require(grid.h.shape() == Shape{g, g, bl, bab}, ErrorCode::kContract,
          "slice_hist: grid tensor does not match its configuration");
  const std::int64_t h = gray.dim(1), w = gray.dim(2), plane = h * w;
  Tensor<float> out({bab, h, w});
  std::vector<double> acc(static_cast<std::size_t>(bab));
  for (std::int64_t y = 0; y < h; ++y) {
    const Lerp ly = lerp_coord((static_cast<double>(y) + 0.5) / static_cast<double>(h), g);
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t p = y * w + x;
      require(std::isfinite(gray[p]), ErrorCode::kInputRange, "slice_hist: non-finite gray value");
      const Lerp lx = lerp_coord((static_cast<double>(x) + 0.5) / static_cast<double>(w), g);
      const Lerp ll = lerp_coord(gray[p], bl);
      const int ys[2] = {ly.i0, ly.i1}, xs[2] = {lx.i0, lx.i1}, ls[2] = {ll.i0, ll.i1};
      const double wy[2] = {1 - ly.w1, ly.w1}, wx[2] = {1 - lx.w1, lx.w1}, wl[2] = {1 - ll.w1, ll.w1};
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c) {
            const double wt = wy[a] * wx[b] * wl[c];
            if (wt == 0.0) continue;
            const float* src =
                grid.h.data() + ((static_cast<std::int64_t>(ys[a]) * g + xs[b]) * bl + ls[c]) * bab;
            for (int k = 0; k < bab; ++k) acc[static_cast<std::size_t>(k)] += wt * src[k];
          }
      for (int k = 0; k < bab; ++k) out[k * plane + p] = static_cast<float>(acc[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

std::vector<Tensor<float>> hist_pyramid(const Tensor<float>& feature, int levels) {
  require(feature.rank() == 3, ErrorCode::kContract, "hist_pyramid expects [C, H, W]");
  require(levels >= 0, ErrorCode::kConfig, "hist_pyramid: negative level count");
  const std::int64_t div = std::int64_t{1} << levels;
  require(feature.dim(1) % div == 0 && feature.dim(2) % div == 0, ErrorCode::kConfig,
          "hist_pyramid: " + shape_string(feature.shape()) + " not divisible by 2^" +
              std::to_string(levels));
  std::vector<Tensor<float>> out{feature};
  for (int l = 0; l < levels; ++l) {
    const Tensor<float>& in = out.back();
    const std::int64_t c = in.dim(0), h = in.dim(1) / 2, w = in.dim(2) / 2, iw = in.dim(2);
    Tensor<float> next({c, h, w});
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
          const float* base = in.data() + (ch * 2 * h + 2 * y) * iw + 2 * x;
          next[(ch * h + y) * w + x] = 0.25f * (base[0] + base[1] + base[iw] + base[iw + 1]);
        }
    out.push_back(std::move(next));
  }
  return out;
}

std::vector<Tensor<float>> hist_features(const HistGrid& grid, const Tensor<float>& gray_stack,
                                         int first_level, int last_level) {
  require(gray_stack.rank() == 4 && gray_stack.dim(1) == 1, ErrorCode::kContract,
          "hist_features expects [T, 1, H, W]");
  require(0 <= first_level && first_level <= last_level, ErrorCode::kConfig,
          "hist_features: bad level range");
  const std::int64_t t = gray_stack.dim(0);
  std::vector<std::vector<Tensor<float>>> per_level(static_cast<std::size_t>(last_level - first_level + 1));
  for (std::int64_t i = 0; i < t; ++i) {
    auto levels = hist_pyramid(slice_hist(grid, take_leading(gray_stack, i)), last_level);
    for (int l = first_level; l <= last_level; ++l)
      per_level[static_cast<std::size_t>(l - first_level)].push_back(std::move(levels[static_cast<std::size_t>(l)]));
  }
  std::vector<Tensor<float>> out;
  for (auto& frames : per_level) out.push_back(stack_leading(frames));
  return out;
}

std::vector<Tensor<float>> uniform_hist_features(const HistConfig& config, std::int64_t frames,
                                                 std::int64_t height, std::int64_t width,
                                                 int first_level, int last_level) {
  std::vector<Tensor<float>> out;
  for (int l = first_level; l <= last_level; ++l)
    out.emplace_back(Shape{frames, config.ab_bins(), height >> l, width >> l},
                     1.0f / static_cast<float>(config.ab_bins()));
  return out;
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  out.write(reinterpret_cast<const char*>(&bits), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::filesystem::path& path) {
  std::uint32_t bits = 0;
  in.read(reinterpret_cast<char*>(&bits), 4);
  require(in.gcount() == 4, ErrorCode::kFormat, "truncated histogram grid " + path.string());
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return bits;
}

}  // namespace

void save_hist_grid(const HistGrid& grid, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  for (int v : {grid.config.cells, grid.config.l_bins, grid.config.a_bins, grid.config.b_bins})
    write_u32(out, static_cast<std::uint32_t>(v));
  for (float f : grid.h.span()) write_u32(out, std::bit_cast<std::uint32_t>(f));
  require(static_cast<bool>(out), ErrorCode::kIo, "failed writing " + path.string());
}

HistGrid load_hist_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIngestion, "cannot open histogram grid " + path.string());
  HistConfig cfg;
  cfg.cells = static_cast<std::int32_t>(read_u32(in, path));
  cfg.l_bins = static_cast<std::int32_t>(read_u32(in, path));
  cfg.a_bins = static_cast<std::int32_t>(read_u32(in, path));
  cfg.b_bins = static_cast<std::int32_t>(read_u32(in, path));
  require(cfg.cells > 0 && cfg.l_bins > 0 && cfg.a_bins > 0 && cfg.b_bins > 0 &&
              cfg.cells <= 4096 && cfg.l_bins <= 4096 && cfg.ab_bins() <= (1 << 20),
          ErrorCode::kFormat, "implausible histogram grid header in " + path.string());
  HistGrid grid{cfg, Tensor<float>({cfg.cells, cfg.cells, cfg.l_bins, cfg.ab_bins()})};
  for (auto& f : grid.h.span()) f = std::bit_cast<float>(read_u32(in, path));
  in.peek();
  require(in.eof(), ErrorCode::kFormat, "trailing bytes in histogram grid " + path.string());
  return grid;
}

}  // namespace histcolor
