// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/flow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "histcolor/frames.hpp"

namespace histcolor {

FlowField::FlowField(Tensor<float> uv_, int src, int dst)
    : uv(std::move(uv_)), src_index(src), dst_index(dst) {
  require(uv.rank() == 3 && uv.dim(0) == 2, ErrorCode::kContract,
          "flow must be [2, H, W], got " + shape_string(uv.shape()));
}

FlowField FlowField::zeros(std::int64_t height, std::int64_t width, int src, int dst) {
  return FlowField(Tensor<float>({2, height, width}), src, dst);
}

void FlowField::validate() const {
  require(uv.rank() == 3 && uv.dim(0) == 2, ErrorCode::kContract, "flow must be [2, H, W]");
  const std::int64_t plane = height() * width();
  for (std::int64_t p = 0; p < plane; ++p) {
    const float u = uv[p], v = uv[plane + p];
    require(std::isfinite(u) && std::isfinite(v), ErrorCode::kContract, "non-finite flow");
    require(std::abs(u) < static_cast<float>(width()) && std::abs(v) < static_cast<float>(height()),
            ErrorCode::kContract, "flow displacement exceeds frame size");
  }
}

namespace {

struct Bilinear {
  std::int64_t x0, x1, y0, y1;
  double fx, fy;
};

inline Bilinear sample_point(double x, double y, std::int64_t w, std::int64_t h) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  Bilinear b{};
  b.x0 = static_cast<std::int64_t>(std::floor(x));
  b.y0 = static_cast<std::int64_t>(std::floor(y));
  b.x1 = std::min(b.x0 + 1, w - 1);
  b.y1 = std::min(b.y0 + 1, h - 1);
  b.fx = x - static_cast<double>(b.x0);
  b.fy = y - static_cast<double>(b.y0);
  return b;
}

template <typename T>
void check_warp_shapes(const Tensor<T>& image, const Tensor<T>& flow) {
  require(image.rank() == 3 && flow.rank() == 3 && flow.dim(0) == 2 &&
              flow.dim(1) == image.dim(1) && flow.dim(2) == image.dim(2),
          ErrorCode::kContract,
          "warp: image " + shape_string(image.shape()) + " vs flow " + shape_string(flow.shape()));
}

}  // namespace

template <typename T>
Tensor<T> warp_backward(const Tensor<T>& image, const Tensor<T>& flow) {
  check_warp_shapes(image, flow);
  const std::int64_t c = image.dim(0), h = image.dim(1), w = image.dim(2), plane = h * w;
  Tensor<T> out(image.shape());
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t p = y * w + x;
      const Bilinear b = sample_point(static_cast<double>(x) + flow[p],
                                      static_cast<double>(y) + flow[plane + p], w, h);
      const T fx = static_cast<T>(b.fx), fy = static_cast<T>(b.fy);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const T* src = image.data() + ch * plane;
        const T top = (T(1) - fx) * src[b.y0 * w + b.x0] + fx * src[b.y0 * w + b.x1];
        const T bot = (T(1) - fx) * src[b.y1 * w + b.x0] + fx * src[b.y1 * w + b.x1];
        out[ch * plane + p] = (T(1) - fy) * top + fy * bot;
      }
    }
  return out;
}

Tensor<float> warp_backward(const Tensor<float>& image, const FlowField& flow) {
  return warp_backward(image, flow.uv);
}

template <typename T>
Tensor<T> warp_backward_adjoint(const Tensor<T>& grad_out, const Tensor<T>& flow) {
  check_warp_shapes(grad_out, flow);
  const std::int64_t c = grad_out.dim(0), h = grad_out.dim(1), w = grad_out.dim(2), plane = h * w;
  Tensor<T> out(grad_out.shape());
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t p = y * w + x;
      const Bilinear b = sample_point(static_cast<double>(x) + flow[p],
                                      static_cast<double>(y) + flow[plane + p], w, h);
      const T fx = static_cast<T>(b.fx), fy = static_cast<T>(b.fy);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const T g = grad_out[ch * plane + p];
        T* dst = out.data() + ch * plane;
        dst[b.y0 * w + b.x0] += (T(1) - fy) * (T(1) - fx) * g;
        dst[b.y0 * w + b.x1] += (T(1) - fy) * fx * g;
        dst[b.y1 * w + b.x0] += fy * (T(1) - fx) * g;
        dst[b.y1 * w + b.x1] += fy * fx * g;
      }
    }
  return out;
}

template Tensor<float> warp_backward<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> warp_backward<double>(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> warp_backward_adjoint<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> warp_backward_adjoint<double>(const Tensor<double>&,
                                                      const Tensor<double>&);

namespace {

constexpr int kBlock = 8;
constexpr int kSearch = 4;
constexpr int kLevels = 3;

struct Plane {
  std::int64_t h = 0, w = 0;
  std::vector<double> v;
  double at_clamped(std::int64_t y, std::int64_t x) const {
    y = std::clamp<std::int64_t>(y, 0, h - 1);
    x = std::clamp<std::int64_t>(x, 0, w - 1);
    return v[static_cast<std::size_t>(y * w + x)];
  }
};

Plane half(const Plane& in) {
  Plane out;
  out.h = in.h / 2;
  out.w = in.w / 2;
  out.v.resize(static_cast<std::size_t>(out.h * out.w));
  for (std::int64_t y = 0; y < out.h; ++y)
    for (std::int64_t x = 0; x < out.w; ++x)
      out.v[static_cast<std::size_t>(y * out.w + x)] =
          0.25 * (in.v[static_cast<std::size_t>(2 * y * in.w + 2 * x)] +
                  in.v[static_cast<std::size_t>(2 * y * in.w + 2 * x + 1)] +
                  in.v[static_cast<std::size_t>((2 * y + 1) * in.w + 2 * x)] +
                  in.v[static_cast<std::size_t>((2 * y + 1) * in.w + 2 * x + 1)]);
  return out;
}

// Dense per-pixel flow at one level, filled block-constant.
struct LevelFlow {
  std::int64_t h = 0, w = 0;
  std::vector<double> u, v;
};

double bilinear_at(const std::vector<double>& f, std::int64_t h, std::int64_t w, double y,
                   double x) {
  const Bilinear b = sample_point(x, y, w, h);
  auto at = [&](std::int64_t yy, std::int64_t xx) { return f[static_cast<std::size_t>(yy * w + xx)]; };
  const double top = (1 - b.fx) * at(b.y0, b.x0) + b.fx * at(b.y0, b.x1);
  const double bot = (1 - b.fx) * at(b.y1, b.x0) + b.fx * at(b.y1, b.x1);
  return (1 - b.fy) * top + b.fy * bot;
}

LevelFlow match_level(const Plane& src, const Plane& dst, const LevelFlow* coarse) {
  LevelFlow out;
  out.h = dst.h;
  out.w = dst.w;
  out.u.assign(static_cast<std::size_t>(dst.h * dst.w), 0.0);
  out.v.assign(out.u.size(), 0.0);
  const std::int64_t nby = (dst.h + kBlock - 1) / kBlock;
  const std::int64_t nbx = (dst.w + kBlock - 1) / kBlock;
  for (std::int64_t by = 0; by < nby; ++by)
    for (std::int64_t bx = 0; bx < nbx; ++bx) {
      const std::int64_t y0 = by * kBlock, x0 = bx * kBlock;
      const std::int64_t y1 = std::min(y0 + kBlock, dst.h), x1 = std::min(x0 + kBlock, dst.w);
      int gu = 0, gv = 0;
      if (coarse) {
        // Coarse flow upsampled bilinearly at the block center, doubled.
        const double cy = 0.5 * static_cast<double>(y0 + y1 - 1);
        const double cx = 0.5 * static_cast<double>(x0 + x1 - 1);
        const double sy = (cy + 0.5) * 0.5 - 0.5, sx = (cx + 0.5) * 0.5 - 0.5;
        gu = static_cast<int>(std::lround(2.0 * bilinear_at(coarse->u, coarse->h, coarse->w, sy, sx)));
        gv = static_cast<int>(std::lround(2.0 * bilinear_at(coarse->v, coarse->h, coarse->w, sy, sx)));
      }
      double best_cost = std::numeric_limits<double>::infinity();
      int best_u = 0, best_v = 0;
      for (int dv = gv - kSearch; dv <= gv + kSearch; ++dv)
        for (int du = gu - kSearch; du <= gu + kSearch; ++du) {
          double cost = 0;
          for (std::int64_t y = y0; y < y1; ++y)
            for (std::int64_t x = x0; x < x1; ++x) {
              const double d = src.at_clamped(y + dv, x + du) - dst.v[static_cast<std::size_t>(y * dst.w + x)];
              cost += d * d;
            }
          bool better = cost < best_cost;
          if (!better && cost == best_cost) {
            const int m_new = du * du + dv * dv, m_old = best_u * best_u + best_v * best_v;
            better = m_new < m_old || (m_new == m_old && std::make_pair(du, dv) < std::make_pair(best_u, best_v));
          }
          if (better) {
            best_cost = cost;
            best_u = du;
            best_v = dv;
          }
        }
      for (std::int64_t y = y0; y < y1; ++y)
        for (std::int64_t x = x0; x < x1; ++x) {
          out.u[static_cast<std::size_t>(y * dst.w + x)] = best_u;
          out.v[static_cast<std::size_t>(y * dst.w + x)] = best_v;
        }
    }
  return out;
}

Plane to_plane(const Tensor<float>& t) {
  require(t.rank() == 3 && t.dim(0) == 1, ErrorCode::kContract,
          "estimate_flow expects gray frames [1, H, W]");
  Plane p;
  p.h = t.dim(1);
  p.w = t.dim(2);
  p.v.assign(t.data(), t.data() + t.numel());
  return p;
}

}  // namespace

FlowField estimate_flow(const Tensor<float>& src, const Tensor<float>& dst, int src_index,
                        int dst_index) {
  require(src.shape() == dst.shape(), ErrorCode::kContract, "estimate_flow: frame sizes differ");
  require(src.rank() == 3 && src.dim(1) >= kBlock && src.dim(2) >= kBlock, ErrorCode::kEstimator,
          "estimate_flow: frames smaller than one " + std::to_string(kBlock) + "x" +
              std::to_string(kBlock) + " block");
  std::vector<Plane> ps{to_plane(src)}, pd{to_plane(dst)};
  while (static_cast<int>(ps.size()) < kLevels && ps.back().h / 2 >= kBlock &&
         ps.back().w / 2 >= kBlock) {
    ps.push_back(half(ps.back()));
    pd.push_back(half(pd.back()));
  }
  std::optional<LevelFlow> flow;
  for (auto level = static_cast<int>(ps.size()) - 1; level >= 0; --level)
    flow = match_level(ps[static_cast<std::size_t>(level)], pd[static_cast<std::size_t>(level)],
                       flow ? &*flow : nullptr);
  const std::int64_t h = src.dim(1), w = src.dim(2), plane = h * w;
  Tensor<float> uv({2, h, w});
  for (std::int64_t p = 0; p < plane; ++p) {
    uv[p] = static_cast<float>(flow->u[static_cast<std::size_t>(p)]);
    uv[plane + p] = static_cast<float>(flow->v[static_cast<std::size_t>(p)]);
  }
  return FlowField(std::move(uv), src_index, dst_index);
}

namespace {

constexpr float kFloMagic = 202021.25f;

template <typename V>
void put_le(std::vector<char>& out, V value) {
  static_assert(sizeof(V) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  const char* b = reinterpret_cast<const char*>(&bits);
  out.insert(out.end(), b, b + 4);
}

template <typename V>
V get_le(const std::vector<char>& in, std::size_t offset) {
  std::uint32_t bits;
  std::memcpy(&bits, in.data() + offset, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  V value;
  std::memcpy(&value, &bits, 4);
  return value;
}

}  // namespace

FlowField load_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIngestion, "cannot open flow file " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(bytes.size() >= 12, ErrorCode::kFormat, "truncated flow header in " + path.string());
  require(get_le<float>(bytes, 0) == kFloMagic, ErrorCode::kFormat,
          "bad .flo magic number in " + path.string());
  const auto w = get_le<std::int32_t>(bytes, 4);
  const auto h = get_le<std::int32_t>(bytes, 8);
  require(w > 0 && h > 0, ErrorCode::kFormat, "non-positive .flo dimensions in " + path.string());
  const std::size_t expected = 12 + static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 8;
  require(bytes.size() >= expected, ErrorCode::kFormat, "truncated .flo data in " + path.string());
  require(bytes.size() == expected, ErrorCode::kFormat, "trailing bytes in " + path.string());
  const std::int64_t plane = static_cast<std::int64_t>(w) * h;
  Tensor<float> uv({2, h, w});
  for (std::int64_t p = 0; p < plane; ++p) {
    uv[p] = get_le<float>(bytes, 12 + static_cast<std::size_t>(p) * 8);
    uv[plane + p] = get_le<float>(bytes, 16 + static_cast<std::size_t>(p) * 8);
  }
  return FlowField(std::move(uv), 0, 0);
}

void save_flo(const FlowField& flow, const std::filesystem::path& path) {
  const std::int64_t h = flow.height(), w = flow.width(), plane = h * w;
  std::vector<char> bytes;
  bytes.reserve(static_cast<std::size_t>(12 + plane * 8));
  put_le(bytes, kFloMagic);
  put_le(bytes, static_cast<std::int32_t>(w));
  put_le(bytes, static_cast<std::int32_t>(h));
  for (std::int64_t p = 0; p < plane; ++p) {
    put_le(bytes, flow.uv[p]);
    put_le(bytes, flow.uv[plane + p]);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write flow file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "failed writing " + path.string());
}

std::string flo_filename(int src, int dst) {
  return "flow_" + std::to_string(src) + "_" + std::to_string(dst) + ".flo";
}

FlowField resize_flow(const FlowField& flow, std::int64_t height, std::int64_t width) {
  if (flow.height() == height && flow.width() == width) return flow;
  Tensor<float> uv = resize_bilinear(flow.uv, height, width);
  const float sx = static_cast<float>(width) / static_cast<float>(flow.width());
  const float sy = static_cast<float>(height) / static_cast<float>(flow.height());
  const std::int64_t plane = height * width;
  for (std::int64_t p = 0; p < plane; ++p) {
    uv[p] *= sx;
    uv[plane + p] *= sy;
  }
  return FlowField(std::move(uv), flow.src_index, flow.dst_index);
}

const FlowField& FlowSource::get(int src, int dst) {
  require(valid(), ErrorCode::kContract, "flow source is not configured");
  const auto key = std::make_pair(src, dst);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, fn_(src, dst)).first;
  return it->second;
}

FlowSource estimated_flow_source(Tensor<float> gray) {
  require(gray.rank() == 4 && gray.dim(1) == 1, ErrorCode::kContract,
          "estimated_flow_source expects [T, 1, H, W]");
  auto frames = std::make_shared<Tensor<float>>(std::move(gray));
  return FlowSource([frames](int src, int dst) {
    if (src == dst) return FlowField::zeros(frames->dim(2), frames->dim(3), src, dst);
    return estimate_flow(take_leading(*frames, src), take_leading(*frames, dst), src, dst);
  });
}

FlowSource directory_flow_source(std::filesystem::path dir, std::string video,
                                 std::vector<int> frame_numbers, std::int64_t height,
                                 std::int64_t width, FlowSource fallback) {
  auto fb = std::make_shared<FlowSource>(std::move(fallback));
  return FlowSource([dir = std::move(dir), video = std::move(video),
                     numbers = std::move(frame_numbers), height, width, fb](int src, int dst) {
    require(src >= 0 && dst >= 0 && src < static_cast<int>(numbers.size()) &&
                dst < static_cast<int>(numbers.size()),
            ErrorCode::kContract, "flow index outside clip");
    if (src == dst) return FlowField::zeros(height, width, src, dst);
    const auto name = flo_filename(numbers[static_cast<std::size_t>(src)],
                                   numbers[static_cast<std::size_t>(dst)]);
    for (const auto& candidate : {dir / video / name, dir / name}) {
      if (std::filesystem::exists(candidate)) {
        FlowField f = resize_flow(load_flo(candidate), height, width);
        f.src_index = src;
        f.dst_index = dst;
        return f;
      }
    }
    require(fb->valid(), ErrorCode::kIngestion, "missing precomputed flow " + (dir / name).string());
    return fb->get(src, dst);
  });
}

}  // namespace histcolor
