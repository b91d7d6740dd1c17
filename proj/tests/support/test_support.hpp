// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "histcolor/autograd.hpp"
#include "histcolor/error.hpp"
#include "histcolor/rng.hpp"
#include "histcolor/tensor.hpp"

namespace histcolor::testing {

template <typename T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline double max_abs_diff(const Tensor<float>& a, const Tensor<float>& b) {
  double m = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

/// Runs `fn` and returns the error code it threw, or nullopt.
template <typename Fn>
std::optional<ErrorCode> thrown_code(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// One coordinate probed by a finite-difference check.
struct Probe {
  ag::Var<double> var;
  std::int64_t index;
};

struct GradCheckResult {
  double relative_error = 0;  ///< ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double max_abs_error = 0;
  double analytic_norm = 0;
  std::size_t probes = 0;
};

/// Compares the reverse-mode gradient of the scalar `loss()` with central
/// differences at the given coordinates.
inline GradCheckResult grad_check(const std::function<ag::Var<double>()>& loss,
                                  const std::vector<Probe>& probes, double step) {
  for (auto p : probes) p.var.zero_grad();
  ag::backward(loss());
  std::vector<double> analytic;
  for (const auto& p : probes) analytic.push_back(p.var.grad().empty() ? 0.0 : p.var.grad()[p.index]);
  std::vector<double> numeric;
  for (const auto& p : probes) {
    auto var = p.var;
    double& x = var.mutable_value()[p.index];
    const double saved = x;
    x = saved + step;
    const double up = loss().value()[0];
    x = saved - step;
    const double down = loss().value()[0];
    x = saved;
    numeric.push_back((up - down) / (2 * step));
  }
  GradCheckResult r;
  r.probes = probes.size();
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double d = analytic[i] - numeric[i];
    diff += d * d;
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
    r.max_abs_error = std::max(r.max_abs_error, std::abs(d));
  }
  r.analytic_norm = std::sqrt(na);
  const double denom = std::max(std::sqrt(na), std::sqrt(nn));
  r.relative_error = denom > 0 ? std::sqrt(diff) / denom : std::sqrt(diff);
  return r;
}

/// `count` random coordinates of `var` (all of them when it is smaller).
inline void add_probes(std::vector<Probe>& out, const ag::Var<double>& var, std::size_t count, Rng& rng) {
  const std::int64_t n = var.value().numel();
  if (static_cast<std::int64_t>(count) >= n) {
    for (std::int64_t i = 0; i < n; ++i) out.push_back({var, i});
    return;
  }
  for (std::size_t k = 0; k < count; ++k) out.push_back({var, rng.uniform_int(0, n - 1)});
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("histcolor_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace histcolor::testing
