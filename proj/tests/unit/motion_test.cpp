// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "histcolor/flow.hpp"
#include "histcolor/priors.hpp"
#include "histcolor/synthetic.hpp"
#include "test_support.hpp"

namespace histcolor {
namespace {

using testing::random_tensor;
using testing::thrown_code;

FlowField constant_flow(std::int64_t h, std::int64_t w, float u, float v) {
  Tensor<float> uv({2, h, w});
  for (std::int64_t p = 0; p < h * w; ++p) {
    uv[p] = u;
    uv[h * w + p] = v;
  }
  return FlowField(std::move(uv), 1, 0);
}

FlowSource zero_flows(std::int64_t h, std::int64_t w) {
  return FlowSource([h, w](int s, int d) { return FlowField::zeros(h, w, s, d); });
}

TEST(Warp, ZeroFlowIsIdentity) {
  Rng rng(1);
  const auto img = random_tensor<float>({3, 9, 7}, rng);
  EXPECT_EQ(warp_backward(img, FlowField::zeros(9, 7)), img);
}

TEST(Warp, IntegerShiftMatchesArrayIndexing) {
  Rng rng(2);
  const auto img = random_tensor<float>({2, 10, 12}, rng);
  const auto out = warp_backward(img, constant_flow(10, 12, 3, 0));
  for (std::int64_t c = 0; c < 2; ++c)
    for (std::int64_t y = 0; y < 10; ++y)
      for (std::int64_t x = 0; x + 3 < 12; ++x) ASSERT_EQ(out(c, y, x), img(c, y, x + 3));
  // Border replication past the right edge.
  for (std::int64_t y = 0; y < 10; ++y) EXPECT_EQ(out(0, y, 11), img(0, y, 11));
}

TEST(Warp, ConstantImageStaysConstant) {
  Tensor<float> img({1, 8, 8}, 0.37f);
  Rng rng(3);
  Tensor<float> uv = random_tensor<float>({2, 8, 8}, rng, -5, 5);
  const auto out = warp_backward(img, FlowField(uv, 0, 1));
  for (std::int64_t i = 0; i < out.numel(); ++i) EXPECT_NEAR(out[i], 0.37f, 1e-6);
}

TEST(Warp, LinearInImage) {
  Rng rng(4);
  const auto a = random_tensor<float>({2, 8, 8}, rng), b = random_tensor<float>({2, 8, 8}, rng);
  const FlowField f(random_tensor<float>({2, 8, 8}, rng, -3, 3), 0, 1);
  Tensor<float> mix(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) mix[i] = 0.3f * a[i] - 1.7f * b[i];
  const auto wa = warp_backward(a, f), wb = warp_backward(b, f), wm = warp_backward(mix, f);
  for (std::int64_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(wm[i], 0.3f * wa[i] - 1.7f * wb[i], 1e-5);
}

TEST(Warp, AdjointMatchesInnerProduct) {
  Rng rng(5);
  const auto img = random_tensor<double>({2, 6, 7}, rng), g = random_tensor<double>({2, 6, 7}, rng);
  const auto flow = random_tensor<double>({2, 6, 7}, rng, -2.5, 2.5);
  const auto w = warp_backward(img, flow);
  const auto wt = warp_backward_adjoint(g, flow);
  double lhs = 0, rhs = 0;
  for (std::int64_t i = 0; i < img.numel(); ++i) {
    lhs += w[i] * g[i];
    rhs += img[i] * wt[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(Warp, ShapeMismatchIsContractError) {
  Tensor<float> img({1, 8, 8});
  EXPECT_EQ(thrown_code([&] { warp_backward(img, FlowField::zeros(8, 9)); }), ErrorCode::kContract);
}

TEST(FlowField, ValidateRejectsHugeDisplacements) {
  EXPECT_EQ(thrown_code([&] { constant_flow(4, 4, 4.0f, 0.0f).validate(); }), ErrorCode::kContract);
  EXPECT_NO_THROW(constant_flow(4, 4, 3.5f, -3.5f).validate());
}

Tensor<float> noise_image(std::int64_t h, std::int64_t w, std::uint64_t seed) {
  Rng rng(seed);
  return random_tensor<float>({1, h, w}, rng, 0.0, 1.0);
}

TEST(EstimateFlow, IdenticalFramesGiveZero) {
  const auto img = noise_image(32, 32, 6);
  const auto f = estimate_flow(img, img);
  for (std::int64_t i = 0; i < f.uv.numel(); ++i) ASSERT_EQ(f.uv[i], 0.0f);
}

TEST(EstimateFlow, GlobalTranslationRecovered) {
  const auto src = noise_image(64, 64, 7);
  Tensor<float> dst({1, 64, 64});
  // dst(x, y) = src(x + 4, y), so f_{src->dst} = (4, 0).
  for (std::int64_t y = 0; y < 64; ++y)
    for (std::int64_t x = 0; x < 64; ++x) dst(0, y, x) = src(0, y, std::min<std::int64_t>(x + 4, 63));
  const auto f = estimate_flow(src, dst);
  for (std::int64_t y = 8; y < 56; ++y)
    for (std::int64_t x = 8; x < 48; ++x) {
      ASSERT_EQ(f.uv(0, y, x), 4.0f) << x << "," << y;
      ASSERT_EQ(f.uv(1, y, x), 0.0f) << x << "," << y;
    }
}

TEST(EstimateFlow, DeterministicAndTooSmallFrames) {
  const auto a = noise_image(24, 24, 8), b = noise_image(24, 24, 9);
  EXPECT_EQ(estimate_flow(a, b).uv, estimate_flow(a, b).uv);
  const auto tiny = noise_image(4, 4, 10);
  EXPECT_EQ(thrown_code([&] { estimate_flow(tiny, tiny); }), ErrorCode::kEstimator);
}

TEST(EstimateFlow, SyntheticSceneEndpointErrorInsideShapes) {
  SyntheticScene scene;
  scene.frames = 2;
  SyntheticShape s;
  s.kind = SyntheticShape::Kind::kRectangle;
  s.a = 50;
  s.b = 30;
  s.x = 28;
  s.y = 30;
  s.vx = 2;
  s.vy = -1;
  s.width = 24;
  s.height = 20;
  scene.shapes = {s};
  const SyntheticVideo video(scene);
  const auto est = estimate_flow(video.gray(1), video.gray(0));
  const auto gt = video.flow(1, 0);
  std::vector<double> epe;
  const std::int64_t plane = 64 * 64;
  for (std::int64_t p = 0; p < plane; ++p) {
    if (video.regions(0)[static_cast<std::size_t>(p)] < 0) continue;
    epe.push_back(std::hypot(est.uv[p] - gt.uv[p], est.uv[plane + p] - gt.uv[plane + p]));
  }
  ASSERT_FALSE(epe.empty());
  std::nth_element(epe.begin(), epe.begin() + static_cast<long>(epe.size() / 2), epe.end());
  EXPECT_LT(epe[epe.size() / 2], 1.0);
}

TEST(ResizeFlow, DisplacementsScaleWithResolution) {
  const auto half = resize_flow(constant_flow(16, 16, 4, -2), 8, 8);
  for (std::int64_t p = 0; p < 64; ++p) {
    EXPECT_NEAR(half.uv[p], 2.0f, 1e-6);
    EXPECT_NEAR(half.uv[64 + p], -1.0f, 1e-6);
  }
}

std::vector<char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(Flo, HandBuiltOnePixelFile) {
  const auto dir = testing::temp_dir("flo");
  const float magic = 202021.25f, u = 1.5f, v = -2.0f;
  const std::int32_t one = 1;
  char bytes[20];
  std::memcpy(bytes, &magic, 4);
  std::memcpy(bytes + 4, &one, 4);
  std::memcpy(bytes + 8, &one, 4);
  std::memcpy(bytes + 12, &u, 4);
  std::memcpy(bytes + 16, &v, 4);
  {
    std::ofstream out(dir / "one.flo", std::ios::binary);
    out.write(bytes, 20);
  }
  const FlowField f = load_flo(dir / "one.flo");
  ASSERT_EQ(f.uv.shape(), (Shape{2, 1, 1}));
  EXPECT_EQ(f.uv[0], 1.5f);
  EXPECT_EQ(f.uv[1], -2.0f);
  save_flo(f, dir / "again.flo");
  EXPECT_EQ(file_bytes(dir / "again.flo"), std::vector<char>(bytes, bytes + 20));
}

TEST(Flo, RoundTripIsByteIdentical) {
  const auto dir = testing::temp_dir("flo_rt");
  Rng rng(11);
  const FlowField f(random_tensor<float>({2, 5, 3}, rng, -2, 2), 0, 1);
  save_flo(f, dir / "a.flo");
  const FlowField back = load_flo(dir / "a.flo");
  EXPECT_EQ(back.uv, f.uv);
  save_flo(back, dir / "b.flo");
  EXPECT_EQ(file_bytes(dir / "a.flo"), file_bytes(dir / "b.flo"));
  EXPECT_EQ(file_bytes(dir / "a.flo").size(), 12u + 5 * 3 * 8);
}

TEST(Flo, BadMagicAndTruncationAreFormatErrors) {
  const auto dir = testing::temp_dir("flo_bad");
  save_flo(FlowField::zeros(2, 2), dir / "ok.flo");
  auto bytes = file_bytes(dir / "ok.flo");
  auto bad = bytes;
  bad[0] ^= 1;
  std::ofstream(dir / "magic.flo", std::ios::binary).write(bad.data(), static_cast<long>(bad.size()));
  std::ofstream(dir / "short.flo", std::ios::binary).write(bytes.data(), static_cast<long>(bytes.size() - 3));
  EXPECT_EQ(thrown_code([&] { load_flo(dir / "magic.flo"); }), ErrorCode::kFormat);
  EXPECT_EQ(thrown_code([&] { load_flo(dir / "short.flo"); }), ErrorCode::kFormat);
  EXPECT_EQ(flo_filename(3, 2), "flow_3_2.flo");
}

TEST(FlowDirectory, PerVideoFileThenFallback) {
  const auto dir = testing::temp_dir("flow_dir");
  std::filesystem::create_directories(dir / "clipA");
  save_flo(constant_flow(4, 4, 1, 0), dir / "clipA" / flo_filename(8, 7));
  int fallback_calls = 0;
  FlowSource fallback([&](int s, int d) {
    ++fallback_calls;
    return FlowField::zeros(4, 4, s, d);
  });
  FlowSource src = directory_flow_source(dir, "clipA", {7, 8, 9}, 4, 4, fallback);
  EXPECT_EQ(src.get(1, 0).uv[0], 1.0f);
  EXPECT_EQ(fallback_calls, 0);
  EXPECT_EQ(src.get(2, 1).uv[0], 0.0f);
  EXPECT_EQ(fallback_calls, 1);
}

TEST(Visibility, ClosedFormAndRange) {
  Tensor<float> a({2, 3, 3}, 0.0f), b({2, 3, 3}, 0.0f);
  for (std::int64_t p = 0; p < 9; ++p) b[p] = static_cast<float>(std::sqrt(0.1));
  const auto m = visibility_mask(a, b, 9.0);
  ASSERT_EQ(m.shape(), (Shape{1, 3, 3}));
  for (std::int64_t p = 0; p < 9; ++p) EXPECT_NEAR(m[p], std::exp(-0.9), 1e-6);
  EXPECT_NEAR(std::exp(-0.9), 0.40657, 1e-5);
  const auto same = visibility_mask(a, a, 9.0);
  for (std::int64_t p = 0; p < 9; ++p) EXPECT_EQ(same[p], 1.0f);
  double prev = 1.0;
  for (double alpha : {1.0, 5.0, 25.0, 125.0}) {
    const double v = visibility_mask(a, b, alpha)[0];
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 0.0);
    prev = v;
  }
  EXPECT_EQ(thrown_code([&] { visibility_mask(a, b, 0.0); }), ErrorCode::kContract);
}

Tensor<float> gray_stack(std::vector<float> levels, std::int64_t h, std::int64_t w) {
  Tensor<float> g({static_cast<std::int64_t>(levels.size()), 1, h, w});
  for (std::size_t t = 0; t < levels.size(); ++t)
    for (std::int64_t p = 0; p < h * w; ++p) g[static_cast<std::int64_t>(t) * h * w + p] = levels[t];
  return g;
}

TEST(Sharpness, StaticClipIsOne) {
  auto flows = zero_flows(4, 4);
  for (const auto& s : temporal_sharpness(gray_stack({0.3f, 0.3f, 0.3f}, 4, 4), flows))
    for (std::int64_t p = 0; p < 16; ++p) EXPECT_EQ(s.s[p], 1.0f);
}

TEST(Sharpness, ClosedFormForSummedDifferences) {
  auto flows = zero_flows(4, 4);
  // Center: two neighbors at distance 0.1 each, sum of squares 0.02.
  const auto s = temporal_sharpness(gray_stack({0.6f, 0.5f, 0.4f}, 4, 4), flows, 50.0);
  EXPECT_NEAR(s[1].s[0], std::exp(-0.5), 1e-5);
  EXPECT_NEAR(std::exp(-0.5), 0.6065, 1e-4);
  // Boundary frames see one neighbor.
  EXPECT_NEAR(s[0].s[0], std::exp(-0.25), 1e-5);
  EXPECT_NEAR(s[2].s[0], std::exp(-0.25), 1e-5);
}

TEST(Sharpness, SaturatedNeighbor) {
  auto flows = zero_flows(2, 2);
  const auto s = temporal_sharpness(gray_stack({1.0f, 0.0f}, 2, 2), flows, 50.0);
  EXPECT_NEAR(s[0].s[0], std::exp(-25.0), 1e-12);
}

TEST(Sharpness, NeighborOrderInvariantAndSingleFrameError) {
  auto f1 = zero_flows(4, 4), f2 = zero_flows(4, 4);
  const auto a = temporal_sharpness(gray_stack({0.2f, 0.5f, 0.9f}, 4, 4), f1);
  const auto b = temporal_sharpness(gray_stack({0.9f, 0.5f, 0.2f}, 4, 4), f2);
  EXPECT_EQ(a[1].s, b[1].s);
  auto f3 = zero_flows(4, 4);
  EXPECT_EQ(thrown_code([&] { temporal_sharpness(gray_stack({0.5f}, 4, 4), f3); }), ErrorCode::kContract);
}

TEST(AssembleInput, HandAssembledTauOne) {
  // Frames x_t(p) = t + p / 10, sharpness s_t(p) = 1 - t / 4, flow (t + p, -p).
  Tensor<float> gray({3, 1, 2, 2});
  std::vector<SharpnessMap> sharp;
  std::vector<FlowField> flows;
  for (int t = 0; t < 3; ++t) {
    SharpnessMap s{Tensor<float>({1, 2, 2}), t};
    Tensor<float> uv({2, 2, 2});
    for (int p = 0; p < 4; ++p) {
      gray[t * 4 + p] = 0.25f * static_cast<float>(t) + 0.05f * static_cast<float>(p);
      s.s[p] = 1.0f - 0.25f * static_cast<float>(t);
      uv[p] = static_cast<float>(t + p);
      uv[4 + p] = -static_cast<float>(p);
    }
    sharp.push_back(std::move(s));
    flows.emplace_back(std::move(uv), t, 1);
  }
  const auto in = assemble_input(gray, sharp, flows);
  ASSERT_EQ(in.shape(), (Shape{3, 4, 2, 2}));
  const float expected[3][4][4] = {
      {{0.00f, 0.05f, 0.10f, 0.15f}, {0.00f, 0.05f, 0.10f, 0.15f}, {0, 1, 2, 3}, {0, -1, -2, -3}},
      {{0.25f, 0.30f, 0.35f, 0.40f}, {0.1875f, 0.225f, 0.2625f, 0.30f}, {0, 0, 0, 0}, {0, 0, 0, 0}},
      {{0.50f, 0.55f, 0.60f, 0.65f}, {0.25f, 0.275f, 0.30f, 0.325f}, {2, 3, 4, 5}, {0, -1, -2, -3}},
  };
  for (int t = 0; t < 3; ++t)
    for (int c = 0; c < 4; ++c)
      for (int p = 0; p < 4; ++p) EXPECT_NEAR(in[(t * 4 + c) * 4 + p], expected[t][c][p], 1e-6) << t << c << p;
}

TEST(AssembleInput, SchemasAndUnitSharpness) {
  Tensor<float> gray = gray_stack({0.1f, 0.4f, 0.7f}, 2, 2);
  std::vector<SharpnessMap> sharp;
  std::vector<FlowField> flows;
  for (int t = 0; t < 3; ++t) {
    sharp.push_back({Tensor<float>({1, 2, 2}, 1.0f), t});
    flows.push_back(FlowField::zeros(2, 2, t, 1));
  }
  const auto mul = assemble_input(gray, sharp, flows, ConnectionSchema::kMultiply);
  for (int t = 0; t < 3; ++t)
    for (int p = 0; p < 4; ++p) EXPECT_EQ(mul[(t * 4 + 1) * 4 + p], mul[(t * 4) * 4 + p]);
  EXPECT_EQ(assemble_input(gray, sharp, flows, ConnectionSchema::kPlain).dim(1), 3);
  EXPECT_EQ(assemble_input(gray, sharp, flows, ConnectionSchema::kConcat).dim(1), 4);
  sharp.pop_back();
  EXPECT_EQ(thrown_code([&] { assemble_input(gray, sharp, flows); }), ErrorCode::kContract);
}

}  // namespace
}  // namespace histcolor
