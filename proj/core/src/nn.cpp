// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/nn.hpp"

#include <cmath>

namespace histcolor::nn {

template <typename T>
void ParameterStore<T>::check_new(const std::string& name) const {
  for (const auto& p : params_)
    require(p.name != name, ErrorCode::kContract, "duplicate parameter name " + name);
  for (const auto& b : buffers_)
    require(b.name != name, ErrorCode::kContract, "duplicate buffer name " + name);
}

template <typename T>
Var<T> ParameterStore<T>::add(const std::string& name, Tensor<T> init) {
  check_new(name);
  params_.push_back({name, Var<T>::leaf(std::move(init))});
  return params_.back().var;
}

template <typename T>
Tensor<T>& ParameterStore<T>::add_buffer(const std::string& name, Tensor<T> init) {
  check_new(name);
  buffers_.push_back({name, std::make_unique<Tensor<T>>(std::move(init))});
  return *buffers_.back().value;
}

template <typename T>
const Var<T>* ParameterStore<T>::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p.var;
  return nullptr;
}

template <typename T>
std::int64_t ParameterStore<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.var.value().numel();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

template <typename T>
Tensor<T> uniform_init(const Shape& shape, std::int64_t fan_in, Rng& rng) {
  Tensor<T> t(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
Conv2d<T>::Conv2d(ParameterStore<T>& store, const std::string& name, std::int64_t in,
                  std::int64_t out, int kernel, int stride_, Rng& rng, bool with_bias)
    : stride(stride_), pad(kernel / 2) {
  const std::int64_t fan_in = in * kernel * kernel;
  weight = store.add(name + ".weight", uniform_init<T>({out, in, kernel, kernel}, fan_in, rng));
  if (with_bias) bias = store.add(name + ".bias", uniform_init<T>({out}, fan_in, rng));
}

template <typename T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& name, std::int64_t in,
                  std::int64_t out, Rng& rng) {
  weight = store.add(name + ".weight", uniform_init<T>({out, in}, in, rng));
  bias = store.add(name + ".bias", uniform_init<T>({out}, in, rng));
}

template <typename T>
LayerNorm2d<T>::LayerNorm2d(ParameterStore<T>& store, const std::string& name,
                            std::int64_t channels) {
  gamma = store.add(name + ".gamma", Tensor<T>({channels}, T(1)));
  beta = store.add(name + ".beta", Tensor<T>({channels}, T(0)));
}

template <typename T>
BatchNorm2d<T>::BatchNorm2d(ParameterStore<T>& store, const std::string& name,
                            std::int64_t channels) {
  gamma = store.add(name + ".gamma", Tensor<T>({channels}, T(1)));
  beta = store.add(name + ".beta", Tensor<T>({channels}, T(0)));
  running_mean = &store.add_buffer(name + ".running_mean", Tensor<T>({channels}, T(0)));
  running_var = &store.add_buffer(name + ".running_var", Tensor<T>({channels}, T(1)));
}

#define HISTCOLOR_INSTANTIATE_NN(T)                                        \
  template class ParameterStore<T>;                                        \
  template Tensor<T> uniform_init<T>(const Shape&, std::int64_t, Rng&);    \
  template struct Conv2d<T>;                                               \
  template struct Linear<T>;                                               \
  template struct LayerNorm2d<T>;                                          \
  template struct BatchNorm2d<T>;

HISTCOLOR_INSTANTIATE_NN(float)
HISTCOLOR_INSTANTIATE_NN(double)

#undef HISTCOLOR_INSTANTIATE_NN

}  // namespace histcolor::nn
