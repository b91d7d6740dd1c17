// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/drconv.hpp"

namespace histcolor {

void DRConvSpec::validate() const {
  require(regions >= 1, ErrorCode::kConfig, "drconv: region count must be >= 1");
  require(kernel >= 1 && kernel % 2 == 1, ErrorCode::kConfig, "drconv: kernel size must be odd");
  require(in_channels >= 1 && out_channels >= 1, ErrorCode::kConfig,
          "drconv: channel counts must be positive");
}

template <typename T>
DRConv<T>::DRConv(nn::ParameterStore<T>& store, const std::string& prefix, DRConvSpec spec,
                  Rng& rng)
    : spec_(spec) {
  spec_.validate();
  const std::int64_t cin = spec_.in_channels;
  const std::int64_t taps = static_cast<std::int64_t>(spec_.kernel) * spec_.kernel;
  if (spec_.regions > 1) guide = nn::Conv2d<T>(store, prefix + ".guide", cin, spec_.regions, 3, 1, rng);
  fc1 = nn::Linear<T>(store, prefix + ".filter.fc1", cin, cin, rng);
  const std::int64_t gen = spec_.regions * cin * taps;
  fc2.weight = store.add(prefix + ".filter.fc2.weight",
                         nn::uniform_init<T>({gen, cin}, cin * taps, rng));
  Tensor<T> bias({gen});
  const double bias_std = 1.0 / spec_.kernel;
  for (std::int64_t i = 0; i < gen; ++i) bias[i] = static_cast<T>(bias_std * rng.normal());
  fc2.bias = store.add(prefix + ".filter.fc2.bias", std::move(bias));
  pointwise = nn::Conv2d<T>(store, prefix + ".pointwise", cin, spec_.out_channels, 1, 1, rng);
}

template <typename T>
typename DRConv<T>::Var DRConv<T>::guide_logits(const Var& x) const {
  if (spec_.regions == 1) return Var();
  return guide(x);
}

template <typename T>
typename DRConv<T>::Var DRConv<T>::generate_filters(const Var& x) const {
  return fc2(ops::relu(fc1(ops::global_avg_pool(x))));
}

template <typename T>
typename DRConv<T>::Var DRConv<T>::depthwise(const Var& x, const Var& filters, const Var& logits,
                                             ops::AssignmentGradient mode) const {
  return ops::region_depthwise_conv(x, filters, logits, spec_.regions, spec_.kernel, mode);
}

template <typename T>
typename DRConv<T>::Var DRConv<T>::forward(const Var& x, ops::AssignmentGradient mode) const {
  require(x.shape().size() == 4 && x.dim(1) == spec_.in_channels, ErrorCode::kContract,
          "drconv: expected " + std::to_string(spec_.in_channels) + " input channels, got " +
              shape_string(x.shape()));
  return pointwise(depthwise(x, generate_filters(x), guide_logits(x), mode));
}

template <typename T>
DRBlock<T>::DRBlock(nn::ParameterStore<T>& store, const std::string& prefix, std::int64_t in,
                    std::int64_t out, int kernel, int regions, Rng& rng) {
  conv1 = DRConv<T>(store, prefix + ".conv1", {in, out, kernel, regions}, rng);
  bn1 = nn::BatchNorm2d<T>(store, prefix + ".bn1", out);
  conv2 = DRConv<T>(store, prefix + ".conv2", {out, out, kernel, regions}, rng);
  bn2 = nn::BatchNorm2d<T>(store, prefix + ".bn2", out);
}

template <typename T>
typename DRBlock<T>::Var DRBlock<T>::forward(const Var& x, bool training,
                                             ops::AssignmentGradient mode) const {
  const Var h = ops::relu(bn1(conv1.forward(x, mode), training));
  return ops::relu(bn2(conv2.forward(h, mode), training));
}

template class DRConv<float>;
template class DRConv<double>;
template class DRBlock<float>;
template class DRBlock<double>;

}  // namespace histcolor
