// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "histcolor/experiment.hpp"
#include "histcolor/flow.hpp"
#include "histcolor/hist_grid.hpp"
#include "histcolor/ops.hpp"
#include "histcolor/training.hpp"

namespace histcolor {
namespace {

template <typename T>
Tensor<T> noise(const Shape& shape, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  Tensor<T> t(shape);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

void BM_Conv3x3(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  const auto x = ag::Var<float>::constant(noise<float>({5, c, 64, 64}, 1));
  const auto w = ag::Var<float>::constant(noise<float>({c, c, 3, 3}, 2));
  const auto b = ag::Var<float>::constant(noise<float>({c}, 3));
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 1).value().data());
  state.SetItemsProcessed(state.iterations() * 5 * 64 * 64);
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_WindowAttention(benchmark::State& state) {
  const auto mode = state.range(0) == 0 ? WindowMode::kSpatial : WindowMode::kTemporal;
  const int windows = mode == WindowMode::kSpatial ? 4 : 2;
  const auto q = ag::Var<float>::constant(noise<float>({5, 64, 32, 32}, 4));
  const auto k = ag::Var<float>::constant(noise<float>({5, 64, 32, 32}, 5));
  const auto v = ag::Var<float>::constant(noise<float>({5, 64, 32, 32}, 6));
  for (auto _ : state)
    benchmark::DoNotOptimize(ops::window_attention(q, k, v, mode, windows, 4).value().data());
}
BENCHMARK(BM_WindowAttention)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RegionDepthwise(benchmark::State& state) {
  const auto x = ag::Var<float>::constant(noise<float>({5, 32, 64, 64}, 7));
  const auto f = ag::Var<float>::constant(noise<float>({5, 4 * 32 * 9}, 8));
  const auto l = ag::Var<float>::constant(noise<float>({5, 4, 64, 64}, 9));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        ops::region_depthwise_conv(x, f, l, 4, 3, ops::AssignmentGradient::kStraightThrough).value().data());
}
BENCHMARK(BM_RegionDepthwise)->Unit(benchmark::kMillisecond);

void BM_EstimateFlow(benchmark::State& state) {
  const std::int64_t s = state.range(0);
  const auto a = noise<float>({1, s, s}, 10, 0, 1);
  Tensor<float> b(a.shape());
  for (std::int64_t y = 0; y < s; ++y)
    for (std::int64_t x = 0; x < s; ++x) b(0, y, x) = a(0, y, std::max<std::int64_t>(0, x - 3));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_flow(a, b, 0, 1).uv.data());
}
BENCHMARK(BM_EstimateFlow)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SliceHist(benchmark::State& state) {
  const auto gray = noise<float>({1, 64, 64}, 11, 0, 1);
  const auto ab = noise<float>({2, 64, 64}, 12, -0.8, 0.8);
  const HistGrid grid = build_hist_grid(gray, ab, HistConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(slice_hist(grid, gray).data());
}
BENCHMARK(BM_SliceHist)->Unit(benchmark::kMillisecond);

void BM_TrainingStep(benchmark::State& state) {
  RunConfig rc;
  rc.network.channels = state.range(0);
  rc.optimizer.steps = 1;
  const auto samples = synthetic_training_samples(rc, rc.network);
  Network<float> net(rc.network, 0);
  for (auto _ : state) benchmark::DoNotOptimize(train(net, samples, rc.loss, rc.optimizer, 0).size());
}
BENCHMARK(BM_TrainingStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
}  // namespace histcolor

BENCHMARK_MAIN();
