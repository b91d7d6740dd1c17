// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "histcolor/ops.hpp"
#include "histcolor/rng.hpp"

namespace histcolor::nn {

using ag::Var;

/// Named trainable parameters and non-trainable buffers (batch-norm running
/// statistics), kept in registration order. Buffer references stay valid.
template <typename T>
class ParameterStore {
 public:
  struct Parameter {
    std::string name;
    Var<T> var;
  };
  struct Buffer {
    std::string name;
    std::unique_ptr<Tensor<T>> value;
  };

  Var<T> add(const std::string& name, Tensor<T> init);
  Tensor<T>& add_buffer(const std::string& name, Tensor<T> init);

  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }
  std::vector<Buffer>& buffers() noexcept { return buffers_; }
  const std::vector<Buffer>& buffers() const noexcept { return buffers_; }

  const Var<T>* find(const std::string& name) const;
  /// Total number of trainable scalars.
  std::int64_t parameter_count() const;
  void zero_grad();

 private:
  void check_new(const std::string& name) const;

  std::vector<Parameter> params_;
  std::vector<Buffer> buffers_;
};

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), drawn in double.
template <typename T>
Tensor<T> uniform_init(const Shape& shape, std::int64_t fan_in, Rng& rng);

template <typename T>
struct Conv2d {
  Var<T> weight;
  Var<T> bias;
  int stride = 1;
  int pad = 0;

  Conv2d() = default;
  Conv2d(ParameterStore<T>& store, const std::string& name, std::int64_t in, std::int64_t out,
         int kernel, int stride, Rng& rng, bool with_bias = true);
  Var<T> operator()(const Var<T>& x) const { return ops::conv2d(x, weight, bias, stride, pad); }
};

template <typename T>
struct Linear {
  Var<T> weight;
  Var<T> bias;

  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, std::int64_t in, std::int64_t out,
         Rng& rng);
  Var<T> operator()(const Var<T>& x) const { return ops::linear(x, weight, bias); }
};

/// Per-pixel layer normalization over channels.
template <typename T>
struct LayerNorm2d {
  Var<T> gamma;
  Var<T> beta;
  T eps = T(1e-5);

  LayerNorm2d() = default;
  LayerNorm2d(ParameterStore<T>& store, const std::string& name, std::int64_t channels);
  Var<T> operator()(const Var<T>& x) const {
    return ops::layer_norm_channels(x, gamma, beta, eps);
  }
};

template <typename T>
struct BatchNorm2d {
  Var<T> gamma;
  Var<T> beta;
  Tensor<T>* running_mean = nullptr;
  Tensor<T>* running_var = nullptr;
  T momentum = T(0.1);
  T eps = T(1e-5);

  BatchNorm2d() = default;
  BatchNorm2d(ParameterStore<T>& store, const std::string& name, std::int64_t channels);
  Var<T> operator()(const Var<T>& x, bool training) const {
    return ops::batch_norm(x, gamma, beta, *running_mean, *running_var, training, momentum, eps);
  }
};

}  // namespace histcolor::nn
