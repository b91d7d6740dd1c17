// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "histcolor/hist_grid.hpp"
#include "test_support.hpp"

namespace histcolor {
namespace {

using testing::random_tensor;
using testing::thrown_code;

void expect_rows_normalized(const HistGrid& grid) {
  const int bab = grid.config.ab_bins();
  const std::int64_t rows = grid.h.numel() / bab;
  for (std::int64_t r = 0; r < rows; ++r) {
    double s = 0;
    for (int k = 0; k < bab; ++k) {
      ASSERT_GE(grid.h[r * bab + k], 0.0f);
      s += grid.h[r * bab + k];
    }
    ASSERT_NEAR(s, 1.0, 1e-6) << "row " << r;
  }
}

void expect_descriptors_normalized(const Tensor<float>& d) {
  const std::int64_t c = d.dim(0), plane = d.dim(1) * d.dim(2);
  for (std::int64_t p = 0; p < plane; ++p) {
    double s = 0;
    for (std::int64_t k = 0; k < c; ++k) s += d[k * plane + p];
    ASSERT_NEAR(s, 1.0, 1e-6) << "pixel " << p;
  }
}

TEST(HistGrid, RandomInputIsNormalizedAndConservesMass) {
  Rng rng(1);
  const auto gray = random_tensor<float>({1, 24, 20}, rng, 0, 1);
  const auto ab = random_tensor<float>({2, 24, 20}, rng, -1, 1);
  const HistConfig cfg{4, 5, 6, 7};
  const auto mass = splat_hist(gray, ab, cfg);
  double total = 0;
  for (std::int64_t i = 0; i < mass.numel(); ++i) total += mass[i];
  EXPECT_NEAR(total, 24.0 * 20.0, 1e-9);
  const HistGrid grid = build_hist_grid(gray, ab, cfg);
  EXPECT_EQ(grid.h.shape(), (Shape{4, 4, 5, 42}));
  expect_rows_normalized(grid);
}

TEST(HistGrid, UniformImageIsOneHotAndEmptyRowsAreUniform) {
  const HistConfig cfg{2, 4, 4, 4};
  Tensor<float> gray({1, 8, 8}, 0.125f);  // center of L-bin 0
  Tensor<float> ab({2, 8, 8});
  for (std::int64_t p = 0; p < 64; ++p) {
    ab[p] = 0.3f;
    ab[64 + p] = -0.6f;
  }
  const int bin = ab_bin(cfg, 0.3f, -0.6f);
  EXPECT_EQ(bin, 2 * 4 + 0);
  const HistGrid grid = build_hist_grid(gray, ab, cfg);
  for (int gy = 0; gy < 2; ++gy)
    for (int gx = 0; gx < 2; ++gx) {
      for (int k = 0; k < 16; ++k) EXPECT_EQ(grid.at(gy, gx, 0, k), k == bin ? 1.0f : 0.0f);
      for (int l = 1; l < 4; ++l)
        for (int k = 0; k < 16; ++k) EXPECT_EQ(grid.at(gy, gx, l, k), 1.0f / 16);
    }
}

TEST(HistGrid, TwoByTwoLeftRightColors) {
  const HistConfig cfg{2, 1, 4, 4};
  Tensor<float> gray({1, 2, 2}, 0.5f);
  Tensor<float> ab({2, 2, 2});
  // Left column color A = (-0.9, 0.1), right column color B = (0.6, 0.9).
  for (int y = 0; y < 2; ++y) {
    ab(0, y, 0) = -0.9f;
    ab(1, y, 0) = 0.1f;
    ab(0, y, 1) = 0.6f;
    ab(1, y, 1) = 0.9f;
  }
  const int a = 0 * 4 + 2, b = 3 * 4 + 3;
  EXPECT_EQ(ab_bin(cfg, -0.9f, 0.1f), a);
  EXPECT_EQ(ab_bin(cfg, 0.6f, 0.9f), b);
  const HistGrid grid = build_hist_grid(gray, ab, cfg);
  for (int gy = 0; gy < 2; ++gy)
    for (int k = 0; k < 16; ++k) {
      EXPECT_EQ(grid.at(gy, 0, 0, k), k == a ? 1.0f : 0.0f);
      EXPECT_EQ(grid.at(gy, 1, 0, k), k == b ? 1.0f : 0.0f);
    }
}

TEST(HistGrid, NonPositiveBinsAreConfigErrors) {
  Tensor<float> gray({1, 4, 4}, 0.5f), ab({2, 4, 4});
  EXPECT_EQ(thrown_code([&] { build_hist_grid(gray, ab, HistConfig{0, 8, 16, 16}); }), ErrorCode::kConfig);
  EXPECT_EQ(thrown_code([&] { build_hist_grid(gray, ab, HistConfig{8, 8, -1, 16}); }), ErrorCode::kConfig);
}

TEST(HistGrid, SameBinAbChangesDoNotMoveTheGrid) {
  // Nearest-bin assignment: the reference carries no derivative in ab.
  Rng rng(2);
  const HistConfig cfg{2, 4, 8, 8};
  const auto gray = random_tensor<float>({1, 8, 8}, rng, 0, 1);
  Tensor<float> ab({2, 8, 8});
  for (std::int64_t i = 0; i < ab.numel(); ++i) ab[i] = -1.0f + 0.25f * static_cast<float>(rng.uniform_int(0, 7)) + 0.125f;
  Tensor<float> nudged = ab;
  for (std::int64_t i = 0; i < ab.numel(); ++i) nudged[i] += 0.01f;
  EXPECT_EQ(build_hist_grid(gray, ab, cfg).h, build_hist_grid(gray, nudged, cfg).h);
}

TEST(SliceHist, ConstantGridGivesConstantDescriptor) {
  const HistConfig cfg{3, 2, 2, 2};
  HistGrid grid{cfg, Tensor<float>({3, 3, 2, 4})};
  const float q[4] = {0.1f, 0.2f, 0.3f, 0.4f};
  for (std::int64_t i = 0; i < grid.h.numel(); ++i) grid.h[i] = q[i % 4];
  Rng rng(3);
  const auto d = slice_hist(grid, random_tensor<float>({1, 7, 5}, rng, 0, 1));
  for (int k = 0; k < 4; ++k)
    for (std::int64_t p = 0; p < 35; ++p) EXPECT_NEAR(d[k * 35 + p], q[k], 1e-6);
}

HistGrid hand_grid() {
  // G = 2, B_L = 2, 4 ab bins. L-bin 0 of cell (gy, gx) is one-hot at
  // 2 * gy + gx; L-bin 1 is uniform.
  const HistConfig cfg{2, 2, 2, 2};
  HistGrid grid{cfg, Tensor<float>({2, 2, 2, 4})};
  for (int gy = 0; gy < 2; ++gy)
    for (int gx = 0; gx < 2; ++gx)
      for (int k = 0; k < 4; ++k) {
        grid.at(gy, gx, 0, k) = k == 2 * gy + gx ? 1.0f : 0.0f;
        grid.at(gy, gx, 1, k) = 0.25f;
      }
  return grid;
}

TEST(SliceHist, CellCenterAndBinCenterReadsThatHistogram) {
  const HistGrid grid = hand_grid();
  // 2x2 frame: every pixel sits on a cell center; L = 0.25 is L-bin 0's center.
  Tensor<float> gray({1, 2, 2}, 0.25f);
  const auto d = slice_hist(grid, gray);
  for (int p = 0; p < 4; ++p)
    for (int k = 0; k < 4; ++k) EXPECT_EQ(d[k * 4 + p], k == p ? 1.0f : 0.0f);
}

TEST(SliceHist, HandComputedConvexCombination) {
  const HistGrid grid = hand_grid();
  Tensor<float> gray({1, 4, 4}, 0.5f);  // halfway between the two L-bin centers
  const auto d = slice_hist(grid, gray);
  // Pixel (x=1, y=2): cell weights along y (0.25, 0.75), along x (0.75, 0.25);
  // L weights (0.5, 0.5). Bin k gets 0.5 * w(cell k) + 0.5 * 0.25.
  const float expected[4] = {0.21875f, 0.15625f, 0.40625f, 0.21875f};
  const std::int64_t p = 2 * 4 + 1;
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(d[k * 16 + p], expected[k], 1e-6);
  expect_descriptors_normalized(d);
}

TEST(SliceHist, DescriptorsOfRandomGridSumToOne) {
  Rng rng(4);
  const HistConfig cfg{4, 4, 4, 4};
  const HistGrid grid = build_hist_grid(random_tensor<float>({1, 16, 16}, rng, 0, 1),
                                        random_tensor<float>({2, 16, 16}, rng, -1, 1), cfg);
  expect_descriptors_normalized(slice_hist(grid, random_tensor<float>({1, 12, 20}, rng, 0, 1)));
  Tensor<float> bad({1, 2, 2}, 0.5f);
  bad[1] = std::nanf("");
  EXPECT_EQ(thrown_code([&] { slice_hist(grid, bad); }), ErrorCode::kInputRange);
}

TEST(SliceHist, PiecewiseConstantImageIsOneHotAwayFromBoundaries) {
  const HistConfig cfg{4, 8, 16, 16};
  Tensor<float> gray({1, 64, 64}), ab({2, 64, 64});
  const float la = (1 + 0.5f) / 8, lb = (6 + 0.5f) / 8;
  for (std::int64_t y = 0; y < 64; ++y)
    for (std::int64_t x = 0; x < 64; ++x) {
      const bool left = x < 32;
      gray(0, y, x) = left ? la : lb;
      ab(0, y, x) = left ? -0.55f : 0.7f;
      ab(1, y, x) = left ? 0.2f : -0.8f;
    }
  const int bin_a = ab_bin(cfg, -0.55f, 0.2f), bin_b = ab_bin(cfg, 0.7f, -0.8f);
  const HistGrid grid = build_hist_grid(gray, ab, cfg);
  const auto d = slice_hist(grid, gray);
  const std::int64_t plane = 64 * 64;
  for (std::int64_t y = 0; y < 64; ++y)
    for (std::int64_t x = 0; x < 64; ++x) {
      if (x >= 24 && x < 40) continue;
      const int hot = x < 32 ? bin_a : bin_b;
      for (int k = 0; k < 256; ++k) ASSERT_NEAR(d[k * plane + y * 64 + x], k == hot ? 1.0f : 0.0f, 1e-6);
    }
}

TEST(HistPyramid, HandAveragedQuads) {
  Tensor<float> f({1, 4, 4});
  for (int i = 0; i < 16; ++i) f[i] = static_cast<float>(i);
  const auto levels = hist_pyramid(f, 1);
  ASSERT_EQ(levels.size(), 2u);
  EXPECT_EQ(levels[1].shape(), (Shape{1, 2, 2}));
  EXPECT_FLOAT_EQ(levels[1][0], (0 + 1 + 4 + 5) / 4.0f);
  EXPECT_FLOAT_EQ(levels[1][1], (2 + 3 + 6 + 7) / 4.0f);
  EXPECT_FLOAT_EQ(levels[1][2], (8 + 9 + 12 + 13) / 4.0f);
  EXPECT_FLOAT_EQ(levels[1][3], (10 + 11 + 14 + 15) / 4.0f);
}

TEST(HistPyramid, ConstantsNormalizationAndDivisibility) {
  Tensor<float> c({2, 8, 8}, 0.5f);
  for (const auto& l : hist_pyramid(c, 3))
    for (std::int64_t i = 0; i < l.numel(); ++i) EXPECT_EQ(l[i], 0.5f);
  Rng rng(5);
  const HistGrid grid = build_hist_grid(random_tensor<float>({1, 16, 16}, rng, 0, 1),
                                        random_tensor<float>({2, 16, 16}, rng, -1, 1), HistConfig{4, 4, 4, 4});
  for (const auto& l : hist_pyramid(slice_hist(grid, random_tensor<float>({1, 32, 32}, rng, 0, 1)), 3))
    expect_descriptors_normalized(l);
  EXPECT_EQ(thrown_code([&] { hist_pyramid(Tensor<float>({1, 12, 12}), 3); }), ErrorCode::kConfig);
}

TEST(HistPyramid, CommutesWithChannelPermutation) {
  Rng rng(6);
  const auto f = random_tensor<float>({3, 8, 8}, rng);
  Tensor<float> perm(f.shape());
  const int order[3] = {2, 0, 1};
  for (int c = 0; c < 3; ++c)
    for (int p = 0; p < 64; ++p) perm[c * 64 + p] = f[order[c] * 64 + p];
  const auto a = hist_pyramid(f, 2), b = hist_pyramid(perm, 2);
  for (std::size_t l = 0; l < a.size(); ++l) {
    const std::int64_t plane = a[l].dim(1) * a[l].dim(2);
    for (int c = 0; c < 3; ++c)
      for (std::int64_t p = 0; p < plane; ++p) EXPECT_EQ(b[l][c * plane + p], a[l][order[c] * plane + p]);
  }
}

TEST(HistFeatures, ScalesMatchHostingLevels) {
  Rng rng(7);
  const HistConfig cfg{4, 4, 4, 4};
  const HistGrid grid = build_hist_grid(random_tensor<float>({1, 16, 16}, rng, 0, 1),
                                        random_tensor<float>({2, 16, 16}, rng, -1, 1), cfg);
  const auto feats = hist_features(grid, random_tensor<float>({3, 1, 32, 32}, rng, 0, 1), 1, 3);
  ASSERT_EQ(feats.size(), 3u);
  EXPECT_EQ(feats[0].shape(), (Shape{3, 16, 16, 16}));
  EXPECT_EQ(feats[1].shape(), (Shape{3, 16, 8, 8}));
  EXPECT_EQ(feats[2].shape(), (Shape{3, 16, 4, 4}));
  const auto uni = uniform_hist_features(cfg, 3, 32, 32, 1, 3);
  EXPECT_EQ(uni[2].shape(), feats[2].shape());
  EXPECT_EQ(uni[0][0], 1.0f / 16);
}

TEST(HistGrid, SerializationRoundTripAndLayout) {
  Rng rng(8);
  const HistConfig cfg{2, 3, 2, 2};
  const HistGrid grid = build_hist_grid(random_tensor<float>({1, 8, 8}, rng, 0, 1),
                                        random_tensor<float>({2, 8, 8}, rng, -1, 1), cfg);
  const auto path = testing::temp_dir("hg") / "grid.hg";
  save_hist_grid(grid, path);
  EXPECT_EQ(std::filesystem::file_size(path), 16u + 4u * static_cast<unsigned>(grid.h.numel()));
  const HistGrid back = load_hist_grid(path);
  EXPECT_EQ(back.config.cells, 2);
  EXPECT_EQ(back.config.l_bins, 3);
  EXPECT_EQ(back.h, grid.h);
  std::filesystem::resize_file(path, 20);
  EXPECT_EQ(thrown_code([&] { load_hist_grid(path); }), ErrorCode::kFormat);
}

}  // namespace
}  // namespace histcolor
