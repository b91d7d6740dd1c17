// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "cases.hpp"
#include "histcolor/drconv.hpp"

namespace histcolor {
namespace {

using testing::random_tensor;
using testing::thrown_code;
using V = ag::Var<double>;

// Zero-padded depthwise cross-correlation with a per-(n, c) filter,
// f laid out [N, C, k, k].
Tensor<double> depthwise_oracle(const Tensor<double>& x, const Tensor<double>& f, int k) {
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int pad = k / 2;
  Tensor<double> out(x.shape());
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t c = 0; c < C; ++c)
      for (std::int64_t y = 0; y < H; ++y)
        for (std::int64_t xx = 0; xx < W; ++xx) {
          double s = 0;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const std::int64_t sy = y + ky - pad, sx = xx + kx - pad;
              if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
              s += f[((n * C + c) * k + ky) * k + kx] * x(n, c, sy, sx);
            }
          out(n, c, y, xx) = s;
        }
  return out;
}

TEST(RegionConv, SingleRegionIsPlainDepthwise) {
  Rng rng(1);
  const auto x = random_tensor<double>({2, 3, 6, 5}, rng);
  const auto f = random_tensor<double>({2, 3 * 9}, rng);
  const auto got = ops::region_depthwise_conv(V::constant(x), V::constant(f), V(), 1, 3,
                                              ops::AssignmentGradient::kExact)
                       .value();
  const auto want = depthwise_oracle(x, f, 3);
  for (std::int64_t i = 0; i < got.numel(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(RegionConv, ConstantLogitsSelectOneRegion) {
  Rng rng(2);
  const auto x = random_tensor<double>({1, 2, 5, 5}, rng);
  const auto f = random_tensor<double>({1, 3 * 2 * 9}, rng);
  Tensor<double> logits({1, 3, 5, 5});
  for (std::int64_t p = 0; p < 25; ++p) logits[2 * 25 + p] = 1.0;
  const auto got = ops::region_depthwise_conv(V::constant(x), V::constant(f), V::constant(logits), 3, 3,
                                              ops::AssignmentGradient::kExact)
                       .value();
  Tensor<double> f2({1, 2 * 9});
  for (int i = 0; i < 18; ++i) f2[i] = f[2 * 18 + i];
  const auto want = depthwise_oracle(x, f2, 3);
  for (std::int64_t i = 0; i < got.numel(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(RegionConv, HandCheckedTwoRegionCase) {
  // 1 x 2 image, one channel, k = 3, m = 2. Pixel 0 goes to region 1, pixel 1 to region 0.
  Tensor<double> x({1, 1, 1, 2}, std::vector<double>{2.0, 3.0});
  Tensor<double> f({1, 18});
  f[4] = 10;       // region 0 centre tap
  f[5] = 100;      // region 0 right tap
  f[9 + 3] = 1;    // region 1 left tap
  f[9 + 5] = 7;    // region 1 right tap
  Tensor<double> logits({1, 2, 1, 2}, std::vector<double>{0.0, 1.0, 1.0, 0.0});
  const auto out = ops::region_depthwise_conv(V::constant(x), V::constant(f), V::constant(logits), 2, 3,
                                              ops::AssignmentGradient::kExact)
                       .value();
  EXPECT_DOUBLE_EQ(out[0], 7 * 3.0);        // region 1: left is padding, right is 3
  EXPECT_DOUBLE_EQ(out[1], 10 * 3.0 + 0.0);  // region 0: right is padding
}

TEST(RegionConv, TiesGoToTheLowerIndex) {
  Tensor<double> logits({1, 3, 1, 2}, std::vector<double>{0.5, 0.2, 0.5, 0.9, 0.1, 0.9});
  EXPECT_EQ(ops::region_assignment(logits), (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(ops::region_margin(logits), 0.0);
}

TEST(RegionConv, IdenticalFiltersMakeTheGuideIrrelevant) {
  Rng rng(3);
  const auto x = random_tensor<double>({1, 2, 6, 6}, rng);
  const auto one = random_tensor<double>({1, 18}, rng);
  Tensor<double> f({1, 4 * 18});
  for (int r = 0; r < 4; ++r)
    for (int i = 0; i < 18; ++i) f[r * 18 + i] = one[i];
  const auto a = ops::region_depthwise_conv(V::constant(x), V::constant(f),
                                            V::constant(random_tensor<double>({1, 4, 6, 6}, rng)), 4, 3,
                                            ops::AssignmentGradient::kExact)
                     .value();
  const auto b = ops::region_depthwise_conv(V::constant(x), V::constant(f),
                                            V::constant(random_tensor<double>({1, 4, 6, 6}, rng)), 4, 3,
                                            ops::AssignmentGradient::kExact)
                     .value();
  EXPECT_EQ(a, b);
}

TEST(RegionConv, ShapeErrors) {
  const auto x = V::constant(Tensor<double>({1, 2, 4, 4}));
  EXPECT_EQ(thrown_code([&] {
              ops::region_depthwise_conv(x, V::constant(Tensor<double>({1, 17})), V(), 1, 3,
                                         ops::AssignmentGradient::kExact);
            }),
            ErrorCode::kContract);
  EXPECT_EQ(thrown_code([&] {
              ops::region_depthwise_conv(x, V::constant(Tensor<double>({1, 36})), V(), 2, 3,
                                         ops::AssignmentGradient::kExact);
            }),
            ErrorCode::kContract);
}

TEST(DRConv, ShapesAndSingleRegionReduction) {
  Rng rng(4);
  nn::ParameterStore<double> store;
  DRConv<double> conv(store, "d", {3, 5, 3, 1}, rng);
  EXPECT_EQ(store.find("d.guide.weight"), nullptr);
  const auto x = V::constant(random_tensor<double>({2, 3, 8, 8}, rng));
  const auto out = conv.forward(x);
  EXPECT_EQ(out.shape(), (Shape{2, 5, 8, 8}));
  // m = 1: the depthwise stage is one plain depthwise conv per sample.
  const auto f = conv.generate_filters(x);
  EXPECT_EQ(f.shape(), (Shape{2, 27}));
  const auto want = depthwise_oracle(x.value(), f.value(), 3);
  const auto got = conv.depthwise(x, f, V(), ops::AssignmentGradient::kExact).value();
  for (std::int64_t i = 0; i < got.numel(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(DRConv, FiltersDependOnTheInput) {
  Rng rng(5);
  nn::ParameterStore<double> store;
  DRConv<double> conv(store, "d", {4, 4, 3, 4}, rng);
  const auto a = conv.generate_filters(V::constant(random_tensor<double>({1, 4, 8, 8}, rng))).value();
  const auto b = conv.generate_filters(V::constant(random_tensor<double>({1, 4, 8, 8}, rng, 2, 3))).value();
  EXPECT_NE(a, b);
  EXPECT_EQ(conv.guide_logits(V::constant(random_tensor<double>({1, 4, 8, 8}, rng))).shape(),
            (Shape{1, 4, 8, 8}));
}

TEST(DRConv, RejectsBadSettings) {
  EXPECT_EQ(thrown_code([] { DRConvSpec{3, 3, 2, 4}.validate(); }), ErrorCode::kConfig);
  EXPECT_EQ(thrown_code([] { DRConvSpec{3, 3, 3, 0}.validate(); }), ErrorCode::kConfig);
  EXPECT_EQ(thrown_code([] { DRConvSpec{0, 3, 3, 4}.validate(); }), ErrorCode::kConfig);
}

TEST(DRBlock, EvalModeIsDeterministicAndNonNegative) {
  Rng rng(6);
  nn::ParameterStore<double> store;
  DRBlock<double> block(store, "b", 3, 6, 3, 4, rng);
  const auto x = V::constant(random_tensor<double>({3, 3, 8, 8}, rng));
  block.forward(x, true);
  const auto a = block.forward(x, false).value();
  const auto b = block.forward(x, false).value();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.shape(), (Shape{3, 6, 8, 8}));
  for (std::int64_t i = 0; i < a.numel(); ++i) ASSERT_GE(a[i], 0.0);
}

TEST(DRBlock, GradientMatchesFiniteDifferencesAtStablePoints) {
  const auto check = testing::drblock_grad_check(7);
  EXPECT_GT(check.margin1, 1e-2);
  EXPECT_GT(check.margin2, 1e-2);
  EXPECT_GT(check.result.analytic_norm, 0);
  EXPECT_LT(check.result.relative_error, 1e-3) << "max abs " << check.result.max_abs_error;
}

}  // namespace
}  // namespace histcolor
