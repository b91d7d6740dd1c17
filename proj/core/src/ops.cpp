// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace histcolor::ops {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

void check_same_shape(const Shape& a, const Shape& b, const char* op) {
  require(a == b, ErrorCode::kContract,
          std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

void check_rank4(const Shape& s, const char* op) {
  require(s.size() == 4, ErrorCode::kContract,
          std::string(op) + ": expected [N, C, H, W], got " + shape_string(s));
}

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  for (std::int64_t i = 0; i < dst.numel(); ++i) d[i] += s[i];
}

template <typename T, typename Fn, typename Dfn>
Var<T> unary(const Var<T>& x, Fn f, Dfn df) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::int64_t i = 0; i < xv.numel(); ++i) out[i] = f(xv[i]);
  return ag::make_result<T>(std::move(out), {x}, [df](ag::Node<T>& self) {
    auto* in = self.inputs[0].get();
    if (!in->requires_grad) return;
    auto& g = in->grad_buffer();
    const Tensor<T>& xv = in->value;
    for (std::int64_t i = 0; i < xv.numel(); ++i) g[i] += self.grad[i] * df(xv[i], self.value[i]);
  });
}

// im2col for one sample: x [C, H, W] -> col [C*k*k, Ho*Wo].
template <typename T>
void im2col(const T* x, std::int64_t channels, std::int64_t height, std::int64_t width, int k,
            int stride, int pad, std::int64_t out_h, std::int64_t out_w, T* col) {
  for (std::int64_t c = 0; c < channels; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* row = col + ((c * k + ky) * k + kx) * out_h * out_w;
        const T* plane = x + c * height * width;
        for (std::int64_t oy = 0; oy < out_h; ++oy) {
          const std::int64_t iy = oy * stride - pad + ky;
          T* dst = row + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, T(0));
            continue;
          }
          const T* src = plane + iy * width;
          for (std::int64_t ox = 0; ox < out_w; ++ox) {
            const std::int64_t ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < width) ? src[ix] : T(0);
          }
        }
      }
}

template <typename T>
void col2im(const T* col, std::int64_t channels, std::int64_t height, std::int64_t width, int k,
            int stride, int pad, std::int64_t out_h, std::int64_t out_w, T* x) {
  for (std::int64_t c = 0; c < channels; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col + ((c * k + ky) * k + kx) * out_h * out_w;
        T* plane = x + c * height * width;
        for (std::int64_t oy = 0; oy < out_h; ++oy) {
          const std::int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= height) continue;
          const T* src = row + oy * out_w;
          T* dst = plane + iy * width;
          for (std::int64_t ox = 0; ox < out_w; ++ox) {
            const std::int64_t ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < width) dst[ix] += src[ox];
          }
        }
      }
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out(a.value());
  accumulate(out, b.value());
  return ag::make_result<T>(std::move(out), {a, b}, [](ag::Node<T>& self) {
    for (auto& in : self.inputs)
      if (in->requires_grad) accumulate(in->grad_buffer(), self.grad);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a.shape(), b.shape(), "sub");
  Tensor<T> out(a.value());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
  return ag::make_result<T>(std::move(out), {a, b}, [](ag::Node<T>& self) {
    if (self.inputs[0]->requires_grad) accumulate(self.inputs[0]->grad_buffer(), self.grad);
    if (self.inputs[1]->requires_grad) {
      auto& g = self.inputs[1]->grad_buffer();
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a.shape(), b.shape(), "mul");
  Tensor<T> out(a.value());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  return ag::make_result<T>(std::move(out), {a, b}, [](ag::Node<T>& self) {
    auto* na = self.inputs[0].get();
    auto* nb = self.inputs[1].get();
    if (na->requires_grad) {
      auto& g = na->grad_buffer();
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * nb->value[i];
    }
    if (nb->requires_grad) {
      auto& g = nb->grad_buffer();
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * na->value[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  return unary<T>(
      a, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total = 0;
  for (auto v : x.value().span()) total += v;
  return ag::make_result<T>(Tensor<T>({1}, total), {x}, [](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const T s = self.grad[0];
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += s;
  });
}

template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights) {
  check_same_shape(x.shape(), weights.shape(), "weighted_sum");
  T total = 0;
  for (std::int64_t i = 0; i < weights.numel(); ++i) total += x.value()[i] * weights[i];
  return ag::make_result<T>(Tensor<T>({1}, total), {x}, [weights](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const T s = self.grad[0];
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += s * weights[i];
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return v > 0 ? v : T(0); }, [](T v, T) { return v > 0 ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return unary<T>(
      x, [slope](T v) { return v > 0 ? v : v * slope; },
      [slope](T v, T) { return v > 0 ? T(1) : slope; });
}

template <typename T>
Var<T> gelu(const Var<T>& x) {
  constexpr T kInvSqrt2 = T(0.70710678118654752440);
  constexpr T kInvSqrt2Pi = T(0.39894228040143267794);
  return unary<T>(
      x, [](T v) { return T(0.5) * v * (T(1) + std::erf(v * kInvSqrt2)); },
      [](T v, T) {
        const T cdf = T(0.5) * (T(1) + std::erf(v * kInvSqrt2));
        return cdf + v * kInvSqrt2Pi * std::exp(T(-0.5) * v * v);
      });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  require(!parts.empty(), ErrorCode::kContract, "concat_channels: no inputs");
  const Shape& s0 = parts.front().shape();
  check_rank4(s0, "concat_channels");
  std::int64_t channels = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    check_rank4(s, "concat_channels");
    require(s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3], ErrorCode::kContract,
            "concat_channels: N/H/W mismatch " + shape_string(s) + " vs " + shape_string(s0));
    channels += s[1];
  }
  const std::int64_t n = s0[0];
  const std::int64_t plane = s0[2] * s0[3];
  Tensor<T> out({n, channels, s0[2], s0[3]});
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    const std::int64_t c = p.dim(1);
    for (std::int64_t i = 0; i < n; ++i)
      std::copy(p.value().data() + i * c * plane, p.value().data() + (i + 1) * c * plane,
                out.data() + (i * channels + offset) * plane);
    offset += c;
  }
  return ag::make_result<T>(std::move(out), parts, [channels, plane, n](ag::Node<T>& self) {
    std::int64_t offset = 0;
    for (auto& in : self.inputs) {
      const std::int64_t c = in->value.dim(1);
      if (in->requires_grad) {
        auto& g = in->grad_buffer();
        for (std::int64_t i = 0; i < n; ++i) {
          const T* src = self.grad.data() + (i * channels + offset) * plane;
          T* dst = g.data() + i * c * plane;
          for (std::int64_t j = 0; j < c * plane; ++j) dst[j] += src[j];
        }
      }
      offset += c;
    }
  });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  check_rank4(xs, "conv2d");
  require(ws.size() == 4 && ws[1] == xs[1] && ws[2] == ws[3], ErrorCode::kContract,
          "conv2d: weight " + shape_string(ws) + " incompatible with input " + shape_string(xs));
  require(stride >= 1 && pad >= 0, ErrorCode::kContract, "conv2d: bad stride/padding");
  const std::int64_t n = xs[0], cin = xs[1], h = xs[2], w = xs[3];
  const std::int64_t cout = ws[0];
  const int k = static_cast<int>(ws[2]);
  const std::int64_t oh = (h + 2 * pad - k) / stride + 1;
  const std::int64_t ow = (w + 2 * pad - k) / stride + 1;
  require(oh > 0 && ow > 0, ErrorCode::kContract, "conv2d: output would be empty");
  if (bias.defined())
    require(bias.value().numel() == cout, ErrorCode::kContract, "conv2d: bias size mismatch");
  const bool direct = (k == 1 && stride == 1 && pad == 0);
  const std::int64_t kdim = cin * k * k;
  const std::int64_t opix = oh * ow;

  Tensor<T> out({n, cout, oh, ow});
  AlignedVector<T> col(direct ? 0 : static_cast<std::size_t>(kdim * opix));
  CMapR<T> wm(weight.value().data(), cout, kdim);
  for (std::int64_t i = 0; i < n; ++i) {
    const T* xi = x.value().data() + i * cin * h * w;
    if (!direct) im2col(xi, cin, h, w, k, stride, pad, oh, ow, col.data());
    CMapR<T> cm(direct ? xi : col.data(), kdim, opix);
    MapR<T> om(out.data() + i * cout * opix, cout, opix);
    om.noalias() = wm * cm;
    if (bias.defined()) {
      const T* b = bias.value().data();
      for (std::int64_t c = 0; c < cout; ++c) om.row(c).array() += b[c];
    }
  }

  std::vector<Var<T>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return ag::make_result<T>(
      std::move(out), inputs,
      [n, cin, h, w, cout, k, stride, pad, oh, ow, kdim, opix, direct](ag::Node<T>& self) {
        auto* xn = self.inputs[0].get();
        auto* wn = self.inputs[1].get();
        auto* bn = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
        AlignedVector<T> col(direct ? 0 : static_cast<std::size_t>(kdim * opix));
        AlignedVector<T> dcol(direct ? 0 : static_cast<std::size_t>(kdim * opix));
        CMapR<T> wm(wn->value.data(), cout, kdim);
        for (std::int64_t i = 0; i < n; ++i) {
          CMapR<T> gm(self.grad.data() + i * cout * opix, cout, opix);
          const T* xi = xn->value.data() + i * cin * h * w;
          if (wn->requires_grad) {
            if (!direct) im2col(xi, cin, h, w, k, stride, pad, oh, ow, col.data());
            CMapR<T> cm(direct ? xi : col.data(), kdim, opix);
            MapR<T> dw(wn->grad_buffer().data(), cout, kdim);
            dw.noalias() += gm * cm.transpose();
          }
          if (bn && bn->requires_grad) {
            T* db = bn->grad_buffer().data();
            for (std::int64_t c = 0; c < cout; ++c) db[c] += gm.row(c).sum();
          }
          if (xn->requires_grad) {
            T* dx = xn->grad_buffer().data() + i * cin * h * w;
            if (direct) {
              MapR<T> dxm(dx, kdim, opix);
              dxm.noalias() += wm.transpose() * gm;
            } else {
              MapR<T> dcm(dcol.data(), kdim, opix);
              dcm.noalias() = wm.transpose() * gm;
              col2im(dcol.data(), cin, h, w, k, stride, pad, oh, ow, dx);
            }
          }
        }
      });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  require(x.shape().size() == 2 && weight.shape().size() == 2 && weight.dim(1) == x.dim(1),
          ErrorCode::kContract,
          "linear: weight " + shape_string(weight.shape()) + " vs input " + shape_string(x.shape()));
  const std::int64_t n = x.dim(0), cin = x.dim(1), cout = weight.dim(0);
  Tensor<T> out({n, cout});
  MapR<T> om(out.data(), n, cout);
  om.noalias() = CMapR<T>(x.value().data(), n, cin) *
                 CMapR<T>(weight.value().data(), cout, cin).transpose();
  if (bias.defined()) {
    require(bias.value().numel() == cout, ErrorCode::kContract, "linear: bias size mismatch");
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t c = 0; c < cout; ++c) out(i, c) += bias.value()[c];
  }
  std::vector<Var<T>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return ag::make_result<T>(std::move(out), inputs, [n, cin, cout](ag::Node<T>& self) {
    auto* xn = self.inputs[0].get();
    auto* wn = self.inputs[1].get();
    CMapR<T> gm(self.grad.data(), n, cout);
    if (xn->requires_grad)
      MapR<T>(xn->grad_buffer().data(), n, cin).noalias() +=
          gm * CMapR<T>(wn->value.data(), cout, cin);
    if (wn->requires_grad)
      MapR<T>(wn->grad_buffer().data(), cout, cin).noalias() +=
          gm.transpose() * CMapR<T>(xn->value.data(), n, cin);
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
      T* db = self.inputs[2]->grad_buffer().data();
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t c = 0; c < cout; ++c) db[c] += gm(i, c);
    }
  });
}

template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  check_rank4(x.shape(), "global_avg_pool");
  const std::int64_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor<T> out({n, c});
  for (std::int64_t i = 0; i < n * c; ++i) {
    const T* p = x.value().data() + i * plane;
    T s = 0;
    for (std::int64_t j = 0; j < plane; ++j) s += p[j];
    out[i] = s / static_cast<T>(plane);
  }
  return ag::make_result<T>(std::move(out), {x}, [n, c, plane](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::int64_t i = 0; i < n * c; ++i) {
      const T v = self.grad[i] / static_cast<T>(plane);
      T* p = g.data() + i * plane;
      for (std::int64_t j = 0; j < plane; ++j) p[j] += v;
    }
  });
}

template <typename T>
Var<T> upsample_nearest2x(const Var<T>& x) {
  check_rank4(x.shape(), "upsample_nearest2x");
  const std::int64_t nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> out({x.dim(0), x.dim(1), 2 * h, 2 * w});
  for (std::int64_t p = 0; p < nc; ++p)
    for (std::int64_t y = 0; y < 2 * h; ++y)
      for (std::int64_t xx = 0; xx < 2 * w; ++xx)
        out[(p * 2 * h + y) * 2 * w + xx] = x.value()[(p * h + y / 2) * w + xx / 2];
  return ag::make_result<T>(std::move(out), {x}, [nc, h, w](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::int64_t p = 0; p < nc; ++p)
      for (std::int64_t y = 0; y < 2 * h; ++y)
        for (std::int64_t xx = 0; xx < 2 * w; ++xx)
          g[(p * h + y / 2) * w + xx / 2] += self.grad[(p * 2 * h + y) * 2 * w + xx];
  });
}

template <typename T>
Var<T> layer_norm_channels(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  check_rank4(x.shape(), "layer_norm_channels");
  const std::int64_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  require(gamma.value().numel() == c && beta.value().numel() == c, ErrorCode::kContract,
          "layer_norm_channels: affine size mismatch");
  Tensor<T> out(x.shape());
  // Normalized values and inverse std are kept for the backward pass.
  auto xhat = std::make_shared<Tensor<T>>(x.shape());
  auto inv_std = std::make_shared<AlignedVector<T>>(static_cast<std::size_t>(n * plane));
  const T* xv = x.value().data();
  const T* gv = gamma.value().data();
  const T* bv = beta.value().data();
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t p = 0; p < plane; ++p) {
      const T* base = xv + i * c * plane + p;
      T mean = 0;
      for (std::int64_t ch = 0; ch < c; ++ch) mean += base[ch * plane];
      mean /= static_cast<T>(c);
      T var = 0;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const T d = base[ch * plane] - mean;
        var += d * d;
      }
      var /= static_cast<T>(c);
      const T is = T(1) / std::sqrt(var + eps);
      (*inv_std)[static_cast<std::size_t>(i * plane + p)] = is;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const std::int64_t idx = i * c * plane + ch * plane + p;
        const T xh = (xv[idx] - mean) * is;
        (*xhat)[idx] = xh;
        out[idx] = xh * gv[ch] + bv[ch];
      }
    }
  return ag::make_result<T>(
      std::move(out), {x, gamma, beta}, [n, c, plane, xhat, inv_std](ag::Node<T>& self) {
        auto* xn = self.inputs[0].get();
        auto* gn = self.inputs[1].get();
        auto* bn = self.inputs[2].get();
        const T* g = self.grad.data();
        const T* gv = gn->value.data();
        if (gn->requires_grad || bn->requires_grad) {
          T* dg = gn->requires_grad ? gn->grad_buffer().data() : nullptr;
          T* db = bn->requires_grad ? bn->grad_buffer().data() : nullptr;
          for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t ch = 0; ch < c; ++ch)
              for (std::int64_t p = 0; p < plane; ++p) {
                const std::int64_t idx = i * c * plane + ch * plane + p;
                if (dg) dg[ch] += g[idx] * (*xhat)[idx];
                if (db) db[ch] += g[idx];
              }
        }
        if (!xn->requires_grad) return;
        T* dx = xn->grad_buffer().data();
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t p = 0; p < plane; ++p) {
            T sum_d = 0, sum_dx = 0;
            for (std::int64_t ch = 0; ch < c; ++ch) {
              const std::int64_t idx = i * c * plane + ch * plane + p;
              const T d = g[idx] * gv[ch];
              sum_d += d;
              sum_dx += d * (*xhat)[idx];
            }
            const T is = (*inv_std)[static_cast<std::size_t>(i * plane + p)];
            const T inv_c = T(1) / static_cast<T>(c);
            for (std::int64_t ch = 0; ch < c; ++ch) {
              const std::int64_t idx = i * c * plane + ch * plane + p;
              const T d = g[idx] * gv[ch];
              dx[idx] += is * (d - inv_c * sum_d - (*xhat)[idx] * inv_c * sum_dx);
            }
          }
      });
}

template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training, T momentum,
                  T eps) {
  check_rank4(x.shape(), "batch_norm");
  const std::int64_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  require(gamma.value().numel() == c && beta.value().numel() == c &&
              running_mean.numel() == c && running_var.numel() == c,
          ErrorCode::kContract, "batch_norm: channel count mismatch");
  const std::int64_t count = n * plane;
  std::vector<T> mean(static_cast<std::size_t>(c)), inv_std(static_cast<std::size_t>(c));
  const T* xv = x.value().data();
  for (std::int64_t ch = 0; ch < c; ++ch) {
    if (training) {
      T m = 0;
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t p = 0; p < plane; ++p) m += xv[(i * c + ch) * plane + p];
      m /= static_cast<T>(count);
      T v = 0;
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t p = 0; p < plane; ++p) {
          const T d = xv[(i * c + ch) * plane + p] - m;
          v += d * d;
        }
      v /= static_cast<T>(count);
      mean[static_cast<std::size_t>(ch)] = m;
      inv_std[static_cast<std::size_t>(ch)] = T(1) / std::sqrt(v + eps);
      const T unbiased = count > 1 ? v * static_cast<T>(count) / static_cast<T>(count - 1) : v;
      running_mean[ch] = (T(1) - momentum) * running_mean[ch] + momentum * m;
      running_var[ch] = (T(1) - momentum) * running_var[ch] + momentum * unbiased;
    } else {
      mean[static_cast<std::size_t>(ch)] = running_mean[ch];
      inv_std[static_cast<std::size_t>(ch)] = T(1) / std::sqrt(running_var[ch] + eps);
    }
  }
  Tensor<T> out(x.shape());
  auto xhat = std::make_shared<Tensor<T>>(x.shape());
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T m = mean[static_cast<std::size_t>(ch)], is = inv_std[static_cast<std::size_t>(ch)];
      const T gm = gamma.value()[ch], bt = beta.value()[ch];
      for (std::int64_t p = 0; p < plane; ++p) {
        const std::int64_t idx = (i * c + ch) * plane + p;
        const T xh = (xv[idx] - m) * is;
        (*xhat)[idx] = xh;
        out[idx] = xh * gm + bt;
      }
    }
  return ag::make_result<T>(
      std::move(out), {x, gamma, beta},
      [n, c, plane, count, training, xhat, inv_std](ag::Node<T>& self) {
        auto* xn = self.inputs[0].get();
        auto* gn = self.inputs[1].get();
        auto* bn = self.inputs[2].get();
        const T* g = self.grad.data();
        for (std::int64_t ch = 0; ch < c; ++ch) {
          T sum_d = 0, sum_dx = 0;
          for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t p = 0; p < plane; ++p) {
              const std::int64_t idx = (i * c + ch) * plane + p;
              sum_d += g[idx];
              sum_dx += g[idx] * (*xhat)[idx];
            }
          if (gn->requires_grad) gn->grad_buffer()[ch] += sum_dx;
          if (bn->requires_grad) bn->grad_buffer()[ch] += sum_d;
          if (!xn->requires_grad) continue;
          T* dx = xn->grad_buffer().data();
          const T gm = gn->value[ch];
          const T is = inv_std[static_cast<std::size_t>(ch)];
          const T inv_m = T(1) / static_cast<T>(count);
          for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t p = 0; p < plane; ++p) {
              const std::int64_t idx = (i * c + ch) * plane + p;
              if (training)
                dx[idx] += gm * is * (g[idx] - inv_m * sum_d - (*xhat)[idx] * inv_m * sum_dx);
              else
                dx[idx] += gm * is * g[idx];
            }
        }
      });
}

template <typename T>
Var<T> window_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, WindowMode mode,
                        int windows, int heads, AttentionProbe<T>* probe) {
  check_rank4(q.shape(), "window_attention");
  check_same_shape(q.shape(), k.shape(), "window_attention");
  check_same_shape(q.shape(), v.shape(), "window_attention");
  const std::int64_t channels = q.dim(1);
  require(heads >= 1 && channels % heads == 0, ErrorCode::kConfig,
          "attention: head count " + std::to_string(heads) + " does not divide " +
              std::to_string(channels) + " channels");
  auto layout = std::make_shared<WindowLayout>(make_window_layout(q.shape(), windows, mode));
  const std::int64_t groups = layout->groups;
  const std::int64_t tokens = layout->tokens;
  const std::int64_t dh = channels / heads;
  const T scale_factor = T(1) / std::sqrt(static_cast<T>(dh));
  const std::int64_t pp = tokens * tokens;
  auto probs = std::make_shared<AlignedVector<T>>(static_cast<std::size_t>(groups * heads * pp));

  auto gather = [layout](const T* src, MatR<T>& dst, std::int64_t g) {
    const std::int64_t L = layout->tokens, C = layout->channels, plane = layout->plane;
    for (std::int64_t l = 0; l < L; ++l) {
      const T* base = src + layout->offsets[static_cast<std::size_t>(g * L + l)];
      for (std::int64_t c = 0; c < C; ++c) dst(l, c) = base[c * plane];
    }
  };
  auto scatter_add = [layout](const MatR<T>& src, T* dst, std::int64_t g) {
    const std::int64_t L = layout->tokens, C = layout->channels, plane = layout->plane;
    for (std::int64_t l = 0; l < L; ++l) {
      T* base = dst + layout->offsets[static_cast<std::size_t>(g * L + l)];
      for (std::int64_t c = 0; c < C; ++c) base[c * plane] += src(l, c);
    }
  };

  Tensor<T> out(q.shape());
  MatR<T> qg(tokens, channels), kg(tokens, channels), vg(tokens, channels), og(tokens, channels);
  // Row blocks keep the score tile in cache; probabilities are written once.
  constexpr std::int64_t kRowBlock = 128;
  Eigen::Matrix<T, Eigen::Dynamic, 1> rowv;
  MatR<T> qh(tokens, dh), kh(tokens, dh), vh(tokens, dh);
  for (std::int64_t g = 0; g < groups; ++g) {
    gather(q.value().data(), qg, g);
    gather(k.value().data(), kg, g);
    gather(v.value().data(), vg, g);
    for (int h = 0; h < heads; ++h) {
      qh = qg.middleCols(h * dh, dh) * scale_factor;
      kh = kg.middleCols(h * dh, dh);
      vh = vg.middleCols(h * dh, dh);
      for (std::int64_t r0 = 0; r0 < tokens; r0 += kRowBlock) {
        const std::int64_t rows = std::min(kRowBlock, tokens - r0);
        MapR<T> s(probs->data() + (g * heads + h) * pp + r0 * tokens, rows, tokens);
        s.noalias() = qh.middleRows(r0, rows) * kh.transpose();
        rowv = s.rowwise().maxCoeff();
        s.array().colwise() -= rowv.array();
        s.array() = s.array().exp();
        rowv = s.rowwise().sum();
        s.array().colwise() /= rowv.array();
        og.block(r0, h * dh, rows, dh).noalias() = s * vh;
      }
    }
    scatter_add(og, out.data(), g);
  }
  if (probe)
    probe->probabilities = Tensor<T>({groups, heads, tokens, tokens}, *probs);

  return ag::make_result<T>(
      std::move(out), {q, k, v},
      [layout, probs, groups, tokens, channels, heads, dh, scale_factor, pp, gather,
       scatter_add](ag::Node<T>& self) {
        constexpr std::int64_t kRowBlock = 128;
        auto* qn = self.inputs[0].get();
        auto* kn = self.inputs[1].get();
        auto* vn = self.inputs[2].get();
        MatR<T> qg(tokens, channels), kg(tokens, channels), vg(tokens, channels);
        MatR<T> dog(tokens, channels), dq(tokens, channels), dk(tokens, channels),
            dv(tokens, channels);
        MatR<T> dp_buf(std::min(kRowBlock, tokens), tokens);
        MatR<T> qh(tokens, dh), kh(tokens, dh), vh(tokens, dh), doh(tokens, dh), dvh(tokens, dh),
            dkh(tokens, dh);
        Eigen::Matrix<T, Eigen::Dynamic, 1> dot;
        T* dq_out = qn->requires_grad ? qn->grad_buffer().data() : nullptr;
        T* dk_out = kn->requires_grad ? kn->grad_buffer().data() : nullptr;
        T* dv_out = vn->requires_grad ? vn->grad_buffer().data() : nullptr;
        for (std::int64_t g = 0; g < groups; ++g) {
          gather(qn->value.data(), qg, g);
          gather(kn->value.data(), kg, g);
          gather(vn->value.data(), vg, g);
          gather(self.grad.data(), dog, g);
          for (int h = 0; h < heads; ++h) {
            qh = qg.middleCols(h * dh, dh);
            kh = kg.middleCols(h * dh, dh);
            vh = vg.middleCols(h * dh, dh);
            doh = dog.middleCols(h * dh, dh);
            dvh.setZero();
            dkh.setZero();
            for (std::int64_t r0 = 0; r0 < tokens; r0 += kRowBlock) {
              const std::int64_t rows = std::min(kRowBlock, tokens - r0);
              CMapR<T> p(probs->data() + (g * heads + h) * pp + r0 * tokens, rows, tokens);
              auto dO = doh.middleRows(r0, rows);
              dvh.noalias() += p.transpose() * dO;
              auto dp = dp_buf.topRows(rows);
              dp.noalias() = dO * vh.transpose();
              // softmax backward: dS = P .* (dP - rowsum(P .* dP))
              dot = (p.array() * dp.array()).rowwise().sum();
              dp.array().colwise() -= dot.array();
              dp.array() *= p.array();
              dq.block(r0, h * dh, rows, dh).noalias() = scale_factor * (dp * kh);
              dkh.noalias() += scale_factor * (dp.transpose() * qh.middleRows(r0, rows));
            }
            dv.middleCols(h * dh, dh) = dvh;
            dk.middleCols(h * dh, dh) = dkh;
          }
          if (dq_out) scatter_add(dq, dq_out, g);
          if (dk_out) scatter_add(dk, dk_out, g);
          if (dv_out) scatter_add(dv, dv_out, g);
        }
      });
}

template <typename T>
std::vector<int> region_assignment(const Tensor<T>& logits) {
  require(logits.rank() == 4, ErrorCode::kContract, "region_assignment expects [N, m, H, W]");
  const std::int64_t n = logits.dim(0), m = logits.dim(1), plane = logits.dim(2) * logits.dim(3);
  std::vector<int> region(static_cast<std::size_t>(n * plane), 0);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t p = 0; p < plane; ++p) {
      int best = 0;
      T best_v = logits[(i * m) * plane + p];
      for (std::int64_t r = 1; r < m; ++r) {
        const T val = logits[(i * m + r) * plane + p];
        if (val > best_v) {
          best_v = val;
          best = static_cast<int>(r);
        }
      }
      region[static_cast<std::size_t>(i * plane + p)] = best;
    }
  return region;
}

template <typename T>
T region_margin(const Tensor<T>& logits) {
  require(logits.rank() == 4, ErrorCode::kContract, "region_margin expects [N, m, H, W]");
  const std::int64_t n = logits.dim(0), m = logits.dim(1), plane = logits.dim(2) * logits.dim(3);
  if (m < 2) return std::numeric_limits<T>::infinity();
  T margin = std::numeric_limits<T>::infinity();
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t p = 0; p < plane; ++p) {
      T first = -std::numeric_limits<T>::infinity(), second = first;
      for (std::int64_t r = 0; r < m; ++r) {
        const T val = logits[(i * m + r) * plane + p];
        if (val > first) {
          second = first;
          first = val;
        } else if (val > second) {
          second = val;
        }
      }
      margin = std::min(margin, first - second);
    }
  return margin;
}

template <typename T>
Var<T> region_depthwise_conv(const Var<T>& x, const Var<T>& filters, const Var<T>& logits,
                             int regions, int kernel, AssignmentGradient mode) {
  check_rank4(x.shape(), "region_depthwise_conv");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t m = regions;
  const std::int64_t kk = static_cast<std::int64_t>(kernel) * kernel;
  require(regions >= 1 && kernel >= 1 && kernel % 2 == 1, ErrorCode::kConfig,
          "region_depthwise_conv: need regions >= 1 and an odd kernel");
  require(filters.value().numel() == n * m * c * kk, ErrorCode::kContract,
          "region_depthwise_conv: filter tensor has wrong size " +
              shape_string(filters.shape()));
  const bool has_logits = logits.defined();
  require(has_logits || m == 1, ErrorCode::kContract,
          "region_depthwise_conv: logits required when regions > 1");
  if (has_logits)
    require(logits.shape() == Shape{n, m, h, w}, ErrorCode::kContract,
            "region_depthwise_conv: logits shape " + shape_string(logits.shape()));
  const int pad = kernel / 2;
  const std::int64_t plane = h * w, wp = w + 2 * pad, hp = h + 2 * pad;
  auto region = std::make_shared<std::vector<int>>(
      has_logits ? region_assignment(logits.value())
                 : std::vector<int>(static_cast<std::size_t>(n * plane), 0));

  // Zero-padded copy of one plane.
  auto pad_plane = [=](const T* src, T* dst) {
    std::fill(dst, dst + hp * wp, T(0));
    for (std::int64_t y = 0; y < h; ++y) std::copy(src + y * w, src + (y + 1) * w, dst + (y + pad) * wp + pad);
  };
  // resp[p] = sum_tap f[tap] * xp[p + tap]
  auto respond = [=](const T* xp, const T* f, T* resp) {
    std::fill(resp, resp + plane, T(0));
    for (int ky = 0; ky < kernel; ++ky)
      for (int kx = 0; kx < kernel; ++kx) {
        const T fk = f[ky * kernel + kx];
        for (std::int64_t y = 0; y < h; ++y) {
          const T* row = xp + (y + ky) * wp + kx;
          T* o = resp + y * w;
          for (std::int64_t xx = 0; xx < w; ++xx) o[xx] += fk * row[xx];
        }
      }
  };

  Tensor<T> out(x.shape());
  {
    AlignedVector<T> xp(static_cast<std::size_t>(hp * wp)), resp(static_cast<std::size_t>(plane));
    const T* xv = x.value().data();
    const T* fv = filters.value().data();
    for (std::int64_t i = 0; i < n; ++i) {
      const int* reg = region->data() + i * plane;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        pad_plane(xv + (i * c + ch) * plane, xp.data());
        T* o = out.data() + (i * c + ch) * plane;
        for (std::int64_t r = 0; r < m; ++r) {
          respond(xp.data(), fv + ((i * m + r) * c + ch) * kk, resp.data());
          for (std::int64_t p = 0; p < plane; ++p)
            if (reg[p] == r) o[p] = resp[static_cast<std::size_t>(p)];
        }
      }
    }
  }

  std::vector<Var<T>> inputs{x, filters};
  if (has_logits) inputs.push_back(logits);
  return ag::make_result<T>(
      std::move(out), inputs,
      [=](ag::Node<T>& self) {
        auto* xn = self.inputs[0].get();
        auto* fn = self.inputs[1].get();
        auto* ln = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
        const bool straight = ln && ln->requires_grad && mode == AssignmentGradient::kStraightThrough;
        const T* xv = xn->value.data();
        const T* fv = fn->value.data();
        const T* g = self.grad.data();
        T* dx = xn->requires_grad ? xn->grad_buffer().data() : nullptr;
        T* df = fn->requires_grad ? fn->grad_buffer().data() : nullptr;
        T* dl = straight ? ln->grad_buffer().data() : nullptr;
        const T* lv = straight ? ln->value.data() : nullptr;
        AlignedVector<T> xp(static_cast<std::size_t>(hp * wp)), dxp(xp.size());
        AlignedVector<T> gor(static_cast<std::size_t>(plane));
        AlignedVector<T> resp(static_cast<std::size_t>(straight ? m * plane : 0));
        AlignedVector<T> sigma(static_cast<std::size_t>(straight ? m * plane : 0));
        for (std::int64_t i = 0; i < n; ++i) {
          const int* reg = region->data() + i * plane;
          if (straight) {
            // Per-pixel softmax over region logits.
            for (std::int64_t p = 0; p < plane; ++p) {
              T mx = lv[(i * m) * plane + p];
              for (std::int64_t r = 1; r < m; ++r) mx = std::max(mx, lv[(i * m + r) * plane + p]);
              T z = 0;
              for (std::int64_t r = 0; r < m; ++r) {
                const T e = std::exp(lv[(i * m + r) * plane + p] - mx);
                sigma[static_cast<std::size_t>(r * plane + p)] = e;
                z += e;
              }
              for (std::int64_t r = 0; r < m; ++r) sigma[static_cast<std::size_t>(r * plane + p)] /= z;
            }
          }
          for (std::int64_t ch = 0; ch < c; ++ch) {
            const T* go = g + (i * c + ch) * plane;
            pad_plane(xv + (i * c + ch) * plane, xp.data());
            if (dx) std::fill(dxp.begin(), dxp.end(), T(0));
            for (std::int64_t r = 0; r < m; ++r) {
              const std::int64_t fo = ((i * m + r) * c + ch) * kk;
              bool any = false;
              for (std::int64_t p = 0; p < plane; ++p) {
                const T v = reg[p] == r ? go[p] : T(0);
                gor[static_cast<std::size_t>(p)] = v;
                any = any || v != T(0);
              }
              if (straight) respond(xp.data(), fv + fo, resp.data() + r * plane);
              if (!any) continue;
              for (int ky = 0; ky < kernel; ++ky)
                for (int kx = 0; kx < kernel; ++kx) {
                  const std::int64_t tap = ky * kernel + kx;
                  const T fk = fv[fo + tap];
                  T acc = 0;
                  for (std::int64_t y = 0; y < h; ++y) {
                    const T* gr = gor.data() + y * w;
                    const std::int64_t base = (y + ky) * wp + kx;
                    if (df)
                      acc += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(gr, w).dot(
                          Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(xp.data() + base, w));
                    if (dx) {
                      T* drow = dxp.data() + base;
                      for (std::int64_t xx = 0; xx < w; ++xx) drow[xx] += fk * gr[xx];
                    }
                  }
                  if (df) df[fo + tap] += acc;
                }
            }
            if (dx) {
              T* d = dx + (i * c + ch) * plane;
              for (std::int64_t y = 0; y < h; ++y) {
                const T* src = dxp.data() + (y + pad) * wp + pad;
                for (std::int64_t xx = 0; xx < w; ++xx) d[y * w + xx] += src[xx];
              }
            }
            if (straight) {
              // d out / d logit_j = sigma_j * (y_j - sum_r sigma_r y_r)
              T* mean = gor.data();
              std::fill(mean, mean + plane, T(0));
              for (std::int64_t r = 0; r < m; ++r) {
                const T* sg = sigma.data() + r * plane;
                const T* rs = resp.data() + r * plane;
                for (std::int64_t p = 0; p < plane; ++p) mean[p] += sg[p] * rs[p];
              }
              for (std::int64_t r = 0; r < m; ++r) {
                const T* sg = sigma.data() + r * plane;
                const T* rs = resp.data() + r * plane;
                T* d = dl + (i * m + r) * plane;
                for (std::int64_t p = 0; p < plane; ++p) d[p] += go[p] * sg[p] * (rs[p] - mean[p]);
              }
            }
          }
        }
      });
}

#define HISTCOLOR_INSTANTIATE_OPS(T)                                                            \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                         \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                                         \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                         \
  template Var<T> scale<T>(const Var<T>&, T);                                                   \
  template Var<T> sum<T>(const Var<T>&);                                                        \
  template Var<T> weighted_sum<T>(const Var<T>&, const Tensor<T>&);                             \
  template Var<T> relu<T>(const Var<T>&);                                                       \
  template Var<T> leaky_relu<T>(const Var<T>&, T);                                              \
  template Var<T> gelu<T>(const Var<T>&);                                                       \
  template Var<T> tanh<T>(const Var<T>&);                                                       \
  template Var<T> concat_channels<T>(const std::vector<Var<T>>&);                               \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int, int);             \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);                       \
  template Var<T> global_avg_pool<T>(const Var<T>&);                                            \
  template Var<T> upsample_nearest2x<T>(const Var<T>&);                                         \
  template Var<T> layer_norm_channels<T>(const Var<T>&, const Var<T>&, const Var<T>&, T);       \
  template Var<T> batch_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&, Tensor<T>&,        \
                                Tensor<T>&, bool, T, T);                                        \
  template Var<T> window_attention<T>(const Var<T>&, const Var<T>&, const Var<T>&, WindowMode,  \
                                      int, int, AttentionProbe<T>*);                            \
  template Var<T> region_depthwise_conv<T>(const Var<T>&, const Var<T>&, const Var<T>&, int,    \
                                           int, AssignmentGradient);                            \
  template std::vector<int> region_assignment<T>(const Tensor<T>&);                             \
  template T region_margin<T>(const Tensor<T>&);

HISTCOLOR_INSTANTIATE_OPS(float)
HISTCOLOR_INSTANTIATE_OPS(double)

#undef HISTCOLOR_INSTANTIATE_OPS

}  // namespace histcolor::ops
