// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/jfhm.hpp"

namespace histcolor {

namespace {
constexpr float kRefineSlope = 0.1f;
}

void JfhmConfig::validate() const {
  require(channels >= 1, ErrorCode::kConfig, "jfhm: channels must be positive");
  require(heads >= 1 && channels % heads == 0, ErrorCode::kConfig,
          "jfhm: head count " + std::to_string(heads) + " does not divide " +
              std::to_string(channels) + " channels");
  require(spatial_windows >= 1 && temporal_windows >= 1, ErrorCode::kConfig,
          "jfhm: window counts must be >= 1");
  require(temporal_windows < spatial_windows, ErrorCode::kConfig,
          "jfhm: temporal window count must be smaller than the spatial one");
  require(!use_histogram || hist_channels >= 1, ErrorCode::kConfig,
          "jfhm: histogram channels must be positive");
}

void JfhmConfig::validate_size(std::int64_t height, std::int64_t width) const {
  for (int s : {spatial_windows, temporal_windows})
    require(height % s == 0 && width % s == 0, ErrorCode::kConfig,
            "jfhm: window count " + std::to_string(s) + " does not divide " +
                std::to_string(height) + "x" + std::to_string(width));
}

template <typename T>
Jfhm<T>::Jfhm(nn::ParameterStore<T>& store, const std::string& prefix, JfhmConfig config,
              Rng& rng)
    : config_(config) {
  config_.validate();
  const std::int64_t c = config_.channels;
  ln1 = nn::LayerNorm2d<T>(store, prefix + ".ln1", c);
  auto make_attention = [&](const std::string& name) {
    Attention a;
    a.q = nn::Conv2d<T>(store, name + ".q", c, c, 1, 1, rng);
    a.k = nn::Conv2d<T>(store, name + ".k", c, c, 1, 1, rng);
    a.v = nn::Conv2d<T>(store, name + ".v", c, c, 1, 1, rng);
    a.o = nn::Conv2d<T>(store, name + ".o", c, c, 1, 1, rng);
    return a;
  };
  int slots = 1;
  if (config_.use_temporal_attn) {
    ta = make_attention(prefix + ".ta");
    ++slots;
  }
  if (config_.use_spatial_attn) {
    sa = make_attention(prefix + ".sa");
    if (config_.use_flow) flow_proj = nn::Conv2d<T>(store, prefix + ".sa.flow_proj", 2, c, 1, 1, rng);
    ++slots;
  }
  p1 = nn::Conv2d<T>(store, prefix + ".p1", slots * c, c, 1, 1, rng);
  std::int64_t refine_in = c;
  if (config_.use_histogram) {
    hist_proj = nn::Conv2d<T>(store, prefix + ".refine.hist_proj", config_.hist_channels, c, 1, 1,
                              rng, false);
    refine_in = 2 * c;
  }
  for (int i = 0; i < 3; ++i)
    refine[i] = nn::Conv2d<T>(store, prefix + ".refine.conv" + std::to_string(i),
                              i == 0 ? refine_in : c, c, 3, 1, rng);
  p3 = nn::Conv2d<T>(store, prefix + ".p3", 2 * c, c, 1, 1, rng);
  ln2 = nn::LayerNorm2d<T>(store, prefix + ".ln2", c);
  ffn1 = nn::Conv2d<T>(store, prefix + ".ffn.fc1", c, 2 * c, 1, 1, rng);
  ffn2 = nn::Conv2d<T>(store, prefix + ".ffn.fc2", 2 * c, c, 1, 1, rng);
  p2 = nn::Conv2d<T>(store, prefix + ".p2", 2 * c, c, 1, 1, rng);
}

template <typename T>
typename Jfhm<T>::Var Jfhm<T>::attend(const Attention& a, const Var& qk_in, const Var& v_in,
                                      WindowMode mode, int windows,
                                      ops::AttentionProbe<T>* probe) const {
  const Var out = ops::window_attention(a.q(qk_in), a.k(qk_in), a.v(v_in), mode, windows,
                                        config_.heads, probe);
  return a.o(out);
}

template <typename T>
typename Jfhm<T>::Var Jfhm<T>::spatial_attention(const Var& x_norm, const Tensor<T>& flow,
                                                 ops::AttentionProbe<T>* probe) const {
  require(config_.use_spatial_attn, ErrorCode::kContract, "spatial attention is disabled");
  config_.validate_size(x_norm.dim(2), x_norm.dim(3));
  Var qk_in = x_norm;
  if (config_.use_flow) {
    require(flow.shape() == Shape{x_norm.dim(0), 2, x_norm.dim(2), x_norm.dim(3)},
            ErrorCode::kContract,
            "spatial attention: flow " + shape_string(flow.shape()) + " does not match features " +
                shape_string(x_norm.shape()));
    qk_in = ops::add(x_norm, flow_proj(Var::constant(flow)));
  }
  return attend(sa, qk_in, x_norm, WindowMode::kSpatial, config_.spatial_windows, probe);
}

template <typename T>
typename Jfhm<T>::Var Jfhm<T>::temporal_attention(const Var& x_norm,
                                                  ops::AttentionProbe<T>* probe) const {
  require(config_.use_temporal_attn, ErrorCode::kContract, "temporal attention is disabled");
  config_.validate_size(x_norm.dim(2), x_norm.dim(3));
  return attend(ta, x_norm, x_norm, WindowMode::kTemporal, config_.temporal_windows, probe);
}

template <typename T>
typename Jfhm<T>::Var Jfhm<T>::feature_refine(const Var& m1, const Tensor<T>& hist) const {
  Var h = m1;
  if (config_.use_histogram) {
    require(hist.rank() == 4 && hist.dim(0) == m1.dim(0) && hist.dim(1) == config_.hist_channels &&
                hist.dim(2) == m1.dim(2) && hist.dim(3) == m1.dim(3),
            ErrorCode::kContract,
            "feature refine: histogram " + shape_string(hist.shape()) +
                " does not match features " + shape_string(m1.shape()));
    h = ops::concat_channels<T>({hist_proj(Var::constant(hist)), m1});
  }
  for (const auto& conv : refine) h = ops::leaky_relu(conv(h), static_cast<T>(kRefineSlope));
  return h;
}

template <typename T>
typename Jfhm<T>::Var Jfhm<T>::forward(const Var& x, const Tensor<T>& flow, const Tensor<T>& hist,
                                       JfhmTrace<T>* trace) const {
  require(x.shape().size() == 4 && x.dim(1) == config_.channels, ErrorCode::kContract,
          "jfhm: expected [T, " + std::to_string(config_.channels) + ", H, W], got " +
              shape_string(x.shape()));
  config_.validate_size(x.dim(2), x.dim(3));
  const Var norm = ln1(x);
  std::vector<Var> parts{x};
  if (config_.use_temporal_attn)
    parts.push_back(temporal_attention(norm, trace ? &trace->temporal : nullptr));
  if (config_.use_spatial_attn)
    parts.push_back(spatial_attention(norm, flow, trace ? &trace->spatial : nullptr));
  const Var m1 = p1(parts.size() == 1 ? parts.front() : ops::concat_channels(parts));
  const Var m_fr = feature_refine(m1, hist);
  const Var mixed = p3(ops::concat_channels<T>({m1, m_fr}));
  const Var ffn = ffn2(ops::gelu(ffn1(ln2(mixed))));
  return p2(ops::concat_channels<T>({m1, ffn}));
}

template class Jfhm<float>;
template class Jfhm<double>;

}  // namespace histcolor
