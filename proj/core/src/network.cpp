// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/network.hpp"

namespace histcolor {

namespace {
constexpr float kEncoderSlope = 0.1f;
}

JfhmConfig NetworkConfig::jfhm(std::int64_t c) const {
  JfhmConfig j;
  j.channels = c;
  j.hist_channels = hist.ab_bins();
  j.heads = heads;
  j.spatial_windows = spatial_windows;
  j.temporal_windows = temporal_windows;
  j.use_histogram = use_histogram;
  j.use_flow = use_flow;
  j.use_spatial_attn = use_spatial_attn;
  j.use_temporal_attn = use_temporal_attn;
  return j;
}

void NetworkConfig::validate() const {
  require(channels >= 1, ErrorCode::kConfig, "network: channels must be positive");
  require(tau >= 1, ErrorCode::kConfig, "network: tau must be >= 1");
  hist.validate();
  jfhm(channels * 2).validate();
  DRConvSpec{channels, channels, drconv_kernel, drconv_regions}.validate();
  const std::int64_t div = 8 * static_cast<std::int64_t>(spatial_windows);
  require(height > 0 && width > 0 && height % div == 0 && width % div == 0, ErrorCode::kConfig,
          "network: frame size " + std::to_string(height) + "x" + std::to_string(width) +
              " must be divisible by 8 * spatial windows = " + std::to_string(div));
}

const std::vector<std::string>& ablation_flags() {
  static const std::vector<std::string> flags{"histogram", "flow", "spatial-attn", "temporal-attn"};
  return flags;
}

NetworkConfig ablate(NetworkConfig config, const std::string& flag) {
  if (flag == "histogram")
    config.use_histogram = false;
  else if (flag == "flow")
    config.use_flow = false;
  else if (flag == "spatial-attn" || flag == "spatial_attn")
    config.use_spatial_attn = false;
  else if (flag == "temporal-attn" || flag == "temporal_attn")
    config.use_temporal_attn = false;
  else
    fail(ErrorCode::kConfig,
         "unknown ablation flag '" + flag + "' (histogram|flow|spatial-attn|temporal-attn)");
  return config;
}

template <typename T>
Tensor<T> flow_at_level(const Tensor<T>& flow, int level) {
  require(flow.rank() == 4 && flow.dim(1) == 2, ErrorCode::kContract,
          "flow_at_level expects [T, 2, H, W]");
  if (level == 0) return flow;
  const std::int64_t t = flow.dim(0), h = flow.dim(2) >> level, w = flow.dim(3) >> level;
  Tensor<T> out({t, 2, h, w});
  for (std::int64_t i = 0; i < t; ++i) {
    const FlowField f(take_leading(flow, i).template cast<float>(), 0, 0);
    put_leading(out, i, resize_flow(f, h, w).uv.template cast<T>());
  }
  return out;
}

template Tensor<float> flow_at_level<float>(const Tensor<float>&, int);
template Tensor<double> flow_at_level<double>(const Tensor<double>&, int);

template <typename T>
Network<T>::Network(NetworkConfig config, std::uint64_t seed)
    : config_(std::move(config)), store_(std::make_unique<nn::ParameterStore<T>>()) {
  config_.validate();
  Rng rng(seed);
  auto& s = *store_;
  const std::int64_t c = config_.channels;
  const std::int64_t widths[4] = {c, 2 * c, 4 * c, 8 * c};
  std::int64_t in = config_.input_channels();
  for (int l = 0; l < 4; ++l) {
    const std::string p = "enc." + std::to_string(l);
    enc_[l].a = nn::Conv2d<T>(s, p + ".conv_a", in, widths[l], 3, l == 0 ? 1 : 2, rng);
    enc_[l].b = nn::Conv2d<T>(s, p + ".conv_b", widths[l], widths[l], 3, 1, rng);
    in = widths[l];
  }
  for (int l = 0; l < 3; ++l)
    skip_[l] = Jfhm<T>(s, "jfhm.skip" + std::to_string(l + 1), config_.jfhm(widths[l + 1]), rng);
  bottleneck_ = Jfhm<T>(s, "jfhm.bottleneck", config_.jfhm(widths[3]), rng);
  merge_ = nn::Conv2d<T>(s, "dec.3.merge", 2 * widths[3], widths[3], 1, 1, rng);
  const int k = config_.drconv_kernel, m = config_.drconv_regions;
  dec_[3] = DRBlock<T>(s, "dec.3.block", widths[3], widths[3], k, m, rng);
  for (int l = 2; l >= 0; --l) {
    const std::string p = "dec." + std::to_string(l);
    up_[l] = nn::Conv2d<T>(s, p + ".up", widths[l + 1], widths[l], 3, 1, rng);
    dec_[l] = DRBlock<T>(s, p + ".block", 2 * widths[l], widths[l], k, m, rng);
  }
  head_ = nn::Conv2d<T>(s, "head", c, 2, 3, 1, rng);
}

template <typename T>
typename Network<T>::Var Network<T>::forward(const NetworkInputs<T>& inputs, bool training,
                                             ops::AssignmentGradient mode) const {
  const Tensor<T>& frames = inputs.frames;
  require(frames.rank() == 4 && frames.dim(1) == config_.input_channels(), ErrorCode::kContract,
          "network: expected [T, " + std::to_string(config_.input_channels()) +
              ", H, W] input, got " + shape_string(frames.shape()));
  const std::int64_t t = frames.dim(0), h = frames.dim(2), w = frames.dim(3);
  const std::int64_t div = 8 * static_cast<std::int64_t>(config_.spatial_windows);
  require(h % div == 0 && w % div == 0, ErrorCode::kConfig,
          "network: frame size not divisible by " + std::to_string(div));
  require(inputs.flow.shape() == Shape{t, 2, h, w}, ErrorCode::kContract,
          "network: flow must be [T, 2, H, W], got " + shape_string(inputs.flow.shape()));
  if (config_.use_histogram)
    require(inputs.hist.size() == 3, ErrorCode::kContract,
            "network: expected histogram features at three scales");

  const T slope = static_cast<T>(kEncoderSlope);
  Var e[4];
  Var h_cur = Var::constant(frames);
  for (int l = 0; l < 4; ++l) {
    h_cur = ops::leaky_relu(enc_[l].b(ops::leaky_relu(enc_[l].a(h_cur), slope)), slope);
    e[l] = h_cur;
  }
  static const Tensor<T> kNoHist;
  auto hist_at = [&](int level) -> const Tensor<T>& {
    return config_.use_histogram ? inputs.hist[static_cast<std::size_t>(level - kFirstHistLevel)]
                                 : kNoHist;
  };
  Tensor<T> flows[4];
  for (int l = 1; l < 4; ++l) flows[l] = flow_at_level(inputs.flow, l);
  Var skips[3];
  for (int l = 0; l < 3; ++l) skips[l] = skip_[l].forward(e[l + 1], flows[l + 1], hist_at(l + 1));
  const Var b = bottleneck_.forward(e[3], flows[3], hist_at(3));

  Var d = dec_[3].forward(merge_(ops::concat_channels<T>({b, skips[2]})), training, mode);
  for (int l = 2; l >= 0; --l) {
    const Var u = up_[l](ops::upsample_nearest2x(d));
    const Var& skip = l == 0 ? e[0] : skips[l - 1];
    d = dec_[l].forward(ops::concat_channels<T>({u, skip}), training, mode);
  }
  return ops::tanh(head_(d));
}

template <typename T>
std::vector<ParameterInfo> Network<T>::manifest() const {
  std::vector<ParameterInfo> out;
  for (const auto& p : store_->parameters()) out.push_back({p.name, p.var.shape()});
  return out;
}

template class Network<float>;
template class Network<double>;

}  // namespace histcolor
