/**
 * Copyright 2026 The HetSL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "error.hpp"

namespace hetsl {
namespace {

// Same-padded stride-1 convolution over `n` independent images.
// in: [n, cin, h, w], weight: [cout, cin, k, k], out: [n, cout, h, w].
// Each output row gathers all k taps of one source row before it is
// written back, so interior columns run without bounds checks.
void conv_forward(const double *in, std::size_t n, std::size_t cin, std::size_t h,
                  std::size_t w, const double *weight, const double *bias,
                  std::size_t cout, std::size_t k, double *out) {
  const std::size_t plane = h * w;
  const long pad = static_cast<long>(k / 2);
  const long hh = static_cast<long>(h);
  const long ww = static_cast<long>(w);
  const long kk = static_cast<long>(k);
  const long lo = std::min(pad, ww);
  const long hi = std::max(lo, ww - pad);
  for (std::size_t img = 0; img < n; ++img) {
    const double *src_img = in + img * cin * plane;
    for (std::size_t co = 0; co < cout; ++co) {
      double *dst = out + (img * cout + co) * plane;
      std::fill(dst, dst + plane, bias ? bias[co] : 0.0);
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double *src = src_img + ci * plane;
        const double *wk = weight + (co * cin + ci) * k * k;
        for (long y = 0; y < hh; ++y) {
          double *drow = dst + y * ww;
          for (long ky = 0; ky < kk; ++ky) {
            const long sy = y + ky - pad;
            if (sy < 0 || sy >= hh) continue;
            const double *srow = src + sy * ww;
            const double *wr = wk + ky * kk;
            auto edge = [&](long x) {
              double acc = 0.0;
              for (long kx = 0; kx < kk; ++kx) {
                const long sx = x + kx - pad;
                if (sx >= 0 && sx < ww) acc += wr[kx] * srow[sx];
              }
              drow[x] += acc;
            };
            for (long x = 0; x < lo; ++x) edge(x);
            if (k == 3) {
              const double w0 = wr[0], w1 = wr[1], w2 = wr[2];
              for (long x = lo; x < hi; ++x) {
                drow[x] += w0 * srow[x - 1] + w1 * srow[x] + w2 * srow[x + 1];
              }
            } else {
              for (long x = lo; x < hi; ++x) {
                const double *s0 = srow + x - pad;
                double acc = 0.0;
                for (long kx = 0; kx < kk; ++kx) acc += wr[kx] * s0[kx];
                drow[x] += acc;
              }
            }
            for (long x = hi; x < ww; ++x) edge(x);
          }
        }
      }
    }
  }
}

// Accumulates into gin (may be null), gweight and gbias.
void conv_backward(const double *in, const double *gout, std::size_t n, std::size_t cin,
                   std::size_t h, std::size_t w, const double *weight, std::size_t cout,
                   std::size_t k, double *gin, double *gweight, double *gbias) {
  const std::size_t plane = h * w;
  const long pad = static_cast<long>(k / 2);
  const long hh = static_cast<long>(h);
  const long ww = static_cast<long>(w);
  const long kk = static_cast<long>(k);
  const long lo = std::min(pad, ww);
  const long hi = std::max(lo, ww - pad);
  std::vector<double> acc_w(k * k);
  for (std::size_t img = 0; img < n; ++img) {
    const double *src_img = in + img * cin * plane;
    double *gin_img = gin ? gin + img * cin * plane : nullptr;
    for (std::size_t co = 0; co < cout; ++co) {
      const double *g = gout + (img * cout + co) * plane;
      double bsum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) bsum += g[i];
      gbias[co] += bsum;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double *src = src_img + ci * plane;
        const double *wk = weight + (co * cin + ci) * k * k;
        double *gwk = gweight + (co * cin + ci) * k * k;
        double *gsrc = gin_img ? gin_img + ci * plane : nullptr;

        // Weight gradient: correlate the output gradient with each tap.
        std::fill(acc_w.begin(), acc_w.end(), 0.0);
        for (long y = 0; y < hh; ++y) {
          const double *grow = g + y * ww;
          for (long ky = 0; ky < kk; ++ky) {
            const long sy = y + ky - pad;
            if (sy < 0 || sy >= hh) continue;
            const double *srow = src + sy * ww;
            double *ar = acc_w.data() + ky * kk;
            for (long kx = 0; kx < kk; ++kx) {
              const long dx = kx - pad;
              const long x0 = std::max(0L, -dx);
              const long x1 = std::min(ww, ww - dx);
              const double *s0 = srow + dx;
              double acc = 0.0;
              for (long x = x0; x < x1; ++x) acc += grow[x] * s0[x];
              ar[kx] += acc;
            }
          }
        }
        for (std::size_t i = 0; i < k * k; ++i) gwk[i] += acc_w[i];

        if (!gsrc) continue;
        // Input gradient: gin[sy][sx] += sum_t w[ky][kx] g[sy - ky + pad][sx - kx + pad].
        for (long sy = 0; sy < hh; ++sy) {
          double *irow = gsrc + sy * ww;
          for (long ky = 0; ky < kk; ++ky) {
            const long y = sy - ky + pad;
            if (y < 0 || y >= hh) continue;
            const double *grow = g + y * ww;
            const double *wr = wk + ky * kk;
            auto edge = [&](long sx) {
              double acc = 0.0;
              for (long kx = 0; kx < kk; ++kx) {
                const long x = sx - kx + pad;
                if (x >= 0 && x < ww) acc += wr[kx] * grow[x];
              }
              irow[sx] += acc;
            };
            for (long sx = 0; sx < lo; ++sx) edge(sx);
            if (k == 3) {
              const double w0 = wr[0], w1 = wr[1], w2 = wr[2];
              for (long sx = lo; sx < hi; ++sx) {
                irow[sx] += w0 * grow[sx + 1] + w1 * grow[sx] + w2 * grow[sx - 1];
              }
            } else {
              for (long sx = lo; sx < hi; ++sx) {
                double acc = 0.0;
                for (long kx = 0; kx < kk; ++kx) acc += wr[kx] * grow[sx - kx + pad];
                irow[sx] += acc;
              }
            }
            for (long sx = hi; sx < ww; ++sx) edge(sx);
          }
        }
      }
    }
  }
}

void glorot_uniform(Tensor &t, double fan_in, double fan_out, std::mt19937_64 &rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double &v : t.values()) v = dist(rng);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_rank(const Tensor &t, std::size_t rank, std::string_view where) {
  if (t.rank() != rank) {
    fail(ErrorCode::kShape, std::string(where) + ": expected rank " + std::to_string(rank) +
                                " input, got " + shape_str(t.shape()));
  }
}

void require_cached(bool ok, std::string_view where) {
  if (!ok) fail(ErrorCode::kState, std::string(where) + ": backward called before forward");
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2D: return "Conv2D";
    case LayerKind::kBatchNorm: return "BatchNorm";
    case LayerKind::kAvgPool: return "AvgPool";
    case LayerKind::kConvLSTM: return "ConvLSTM";
    case LayerKind::kFullyConnected: return "FullyConnected";
    case LayerKind::kReLU: return "ReLU";
  }
  return "?";
}

Shape output_shape(const LayerSpec &spec, const Shape &input) {
  const auto name = std::string(layer_kind_name(spec.kind));
  switch (spec.kind) {
    case LayerKind::kConv2D:
    case LayerKind::kBatchNorm:
    case LayerKind::kConvLSTM:
    case LayerKind::kAvgPool: {
      if (input.size() != 4 || input[1] != spec.in_channels) {
        fail(ErrorCode::kShape, name + ": input " + shape_str(input) + " incompatible with " +
                                    std::to_string(spec.in_channels) + " channels");
      }
      Shape out = input;
      out[1] = spec.out_channels;
      if (spec.kind == LayerKind::kAvgPool) {
        if (input[2] % spec.pool || input[3] % spec.pool) {
          fail(ErrorCode::kShape, "AvgPool: spatial dims " + shape_str(input) +
                                      " not divisible by window");
        }
        out[2] /= spec.pool;
        out[3] /= spec.pool;
      }
      return out;
    }
    case LayerKind::kFullyConnected:
    case LayerKind::kReLU: {
      if (shape_size(input) != spec.in_channels) {
        fail(ErrorCode::kShape, name + ": input " + shape_str(input) + " has " +
                                    std::to_string(shape_size(input)) + " elements, expected " +
                                    std::to_string(spec.in_channels));
      }
      return {spec.out_channels};
    }
  }
  return input;
}

// ---------------------------------------------------------------------------
// Conv2D

Conv2D::Conv2D(std::size_t in_channels, std::size_t filters, std::size_t kernel)
    : spec_(LayerSpec::conv2d(in_channels, filters, kernel)),
      weight_("weight", Tensor({filters, in_channels, kernel, kernel})),
      bias_("bias", Tensor({filters})) {
  if (kernel % 2 == 0) fail(ErrorCode::kInvalidArgument, "Conv2D: kernel must be odd");
}

void Conv2D::init_glorot(std::mt19937_64 &rng) {
  const double k2 = static_cast<double>(spec_.kernel * spec_.kernel);
  glorot_uniform(weight_.value, spec_.in_channels * k2, spec_.out_channels * k2, rng);
  bias_.value.fill(0.0);
}

Tensor Conv2D::forward(const Tensor &input, Mode) {
  require_rank(input, 5, "Conv2D");
  const auto &s = input.shape();
  if (s[2] != spec_.in_channels) {
    fail(ErrorCode::kShape, "Conv2D: input has " + std::to_string(s[2]) +
                                " channels, layer expects " + std::to_string(spec_.in_channels));
  }
  input_ = input;
  Tensor out({s[0], s[1], spec_.out_channels, s[3], s[4]});
  conv_forward(input.data(), s[0] * s[1], s[2], s[3], s[4], weight_.value.data(),
               bias_.value.data(), spec_.out_channels, spec_.kernel, out.data());
  require_finite(out, "Conv2D forward");
  return out;
}

Tensor Conv2D::backward(const Tensor &grad_output) {
  require_cached(!input_.empty(), "Conv2D");
  const auto &s = input_.shape();
  require_shape(grad_output, {s[0], s[1], spec_.out_channels, s[3], s[4]}, "Conv2D backward");
  Tensor gin(s);
  conv_backward(input_.data(), grad_output.data(), s[0] * s[1], s[2], s[3], s[4],
                weight_.value.data(), spec_.out_channels, spec_.kernel, gin.data(),
                weight_.grad.data(), bias_.grad.data());
  require_finite(gin, "Conv2D backward");
  return gin;
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::size_t channels)
    : spec_(LayerSpec::batch_norm(channels)),
      gamma_("gamma", Tensor({channels}, 1.0)),
      beta_("beta", Tensor({channels}, 0.0)),
      running_mean_({channels}, 0.0),
      running_var_({channels}, 1.0) {}

Tensor BatchNorm::forward(const Tensor &input, Mode mode) {
  require_rank(input, 5, "BatchNorm");
  const auto &s = input.shape();
  const std::size_t channels = spec_.in_channels;
  if (s[2] != channels) fail(ErrorCode::kShape, "BatchNorm: channel mismatch " + shape_str(s));
  const std::size_t outer = s[0] * s[1];
  const std::size_t plane = s[3] * s[4];
  const double count = static_cast<double>(outer * plane);

  std::vector<double> mean(channels), var(channels);
  if (mode == Mode::kTrain) {
    for (std::size_t c = 0; c < channels; ++c) {
      double sum = 0.0;
      for (std::size_t o = 0; o < outer; ++o) {
        const double *p = input.data() + (o * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean[c] = sum / count;
      double sq = 0.0;
      for (std::size_t o = 0; o < outer; ++o) {
        const double *p = input.data() + (o * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean[c];
          sq += d * d;
        }
      }
      var[c] = sq / count;
      const double unbiased = count > 1.0 ? sq / (count - 1.0) : var[c];
      running_mean_[c] = (1.0 - kMomentum) * running_mean_[c] + kMomentum * mean[c];
      running_var_[c] = (1.0 - kMomentum) * running_var_[c] + kMomentum * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = running_mean_[c];
      var[c] = running_var_[c];
    }
  }

  inv_std_.assign(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) inv_std_[c] = 1.0 / std::sqrt(var[c] + kEpsilon);

  normalized_ = Tensor(s);
  Tensor out(s);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (o * channels + c) * plane;
      const double g = gamma_.value[c];
      const double b = beta_.value[c];
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (input[base + i] - mean[c]) * inv_std_[c];
        normalized_[base + i] = xh;
        out[base + i] = g * xh + b;
      }
    }
  }
  last_mode_ = mode;
  require_finite(out, "BatchNorm forward");
  return out;
}

Tensor BatchNorm::backward(const Tensor &grad_output) {
  require_cached(!normalized_.empty(), "BatchNorm");
  require_shape(grad_output, normalized_.shape(), "BatchNorm backward");
  const auto &s = normalized_.shape();
  const std::size_t channels = spec_.in_channels;
  const std::size_t outer = s[0] * s[1];
  const std::size_t plane = s[3] * s[4];
  const double count = static_cast<double>(outer * plane);

  Tensor gin(s);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t base = (o * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += grad_output[base + i];
        sum_dy_xh += grad_output[base + i] * normalized_[base + i];
      }
    }
    gamma_.grad[c] += sum_dy_xh;
    beta_.grad[c] += sum_dy;
    const double g = gamma_.value[c];
    const double inv = inv_std_[c];
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t base = (o * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double dy = grad_output[base + i];
        if (last_mode_ == Mode::kTrain) {
          gin[base + i] = g * inv *
                          (dy - sum_dy / count - normalized_[base + i] * sum_dy_xh / count);
        } else {
          gin[base + i] = g * inv * dy;
        }
      }
    }
  }
  require_finite(gin, "BatchNorm backward");
  return gin;
}

// ---------------------------------------------------------------------------
// AvgPool

AvgPool::AvgPool(std::size_t channels, std::size_t window)
    : spec_(LayerSpec::avg_pool(channels, window)) {
  if (window == 0) fail(ErrorCode::kInvalidArgument, "AvgPool: zero window");
}

Tensor AvgPool::forward(const Tensor &input, Mode) {
  require_rank(input, 5, "AvgPool");
  const auto &s = input.shape();
  const std::size_t p = spec_.pool;
  if (s[3] % p || s[4] % p) {
    fail(ErrorCode::kShape, "AvgPool: spatial dims of " + shape_str(s) +
                                " not divisible by window " + std::to_string(p));
  }
  input_shape_ = s;
  const std::size_t oh = s[3] / p, ow = s[4] / p;
  const std::size_t planes = s[0] * s[1] * s[2];
  Tensor out({s[0], s[1], s[2], oh, ow});
  const double scale = 1.0 / static_cast<double>(p * p);
  for (std::size_t n = 0; n < planes; ++n) {
    const double *src = input.data() + n * s[3] * s[4];
    double *dst = out.data() + n * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < p; ++dy) {
          for (std::size_t dx = 0; dx < p; ++dx) acc += src[(y * p + dy) * s[4] + x * p + dx];
        }
        dst[y * ow + x] = acc * scale;
      }
    }
  }
  return out;
}

Tensor AvgPool::backward(const Tensor &grad_output) {
  require_cached(!input_shape_.empty(), "AvgPool");
  const auto &s = input_shape_;
  const std::size_t p = spec_.pool;
  const std::size_t oh = s[3] / p, ow = s[4] / p;
  require_shape(grad_output, {s[0], s[1], s[2], oh, ow}, "AvgPool backward");
  Tensor gin(s);
  const double scale = 1.0 / static_cast<double>(p * p);
  const std::size_t planes = s[0] * s[1] * s[2];
  for (std::size_t n = 0; n < planes; ++n) {
    const double *g = grad_output.data() + n * oh * ow;
    double *dst = gin.data() + n * s[3] * s[4];
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const double v = g[y * ow + x] * scale;
        for (std::size_t dy = 0; dy < p; ++dy) {
          for (std::size_t dx = 0; dx < p; ++dx) dst[(y * p + dy) * s[4] + x * p + dx] = v;
        }
      }
    }
  }
  return gin;
}

// ---------------------------------------------------------------------------
// ConvLSTM

ConvLSTM::ConvLSTM(std::size_t in_channels, std::size_t hidden_channels, std::size_t kernel)
    : spec_(LayerSpec::conv_lstm(in_channels, hidden_channels, kernel)),
      weight_("weight",
              Tensor({4 * hidden_channels, in_channels + hidden_channels, kernel, kernel})),
      bias_("bias", Tensor({4 * hidden_channels})) {
  if (kernel % 2 == 0) fail(ErrorCode::kInvalidArgument, "ConvLSTM: kernel must be odd");
}

void ConvLSTM::init_glorot(std::mt19937_64 &rng) {
  const double k2 = static_cast<double>(spec_.kernel * spec_.kernel);
  const std::size_t hc = spec_.out_channels;
  glorot_uniform(weight_.value, (spec_.in_channels + hc) * k2, 4.0 * hc * k2, rng);
  bias_.value.fill(0.0);
  // Forget-gate bias starts at 1 so early training keeps cell memory.
  for (std::size_t c = hc; c < 2 * hc; ++c) bias_.value[c] = 1.0;
}

Tensor ConvLSTM::forward(const Tensor &input, Mode) {
  require_rank(input, 5, "ConvLSTM");
  const auto &s = input.shape();
  const std::size_t batch = s[0], steps = s[1], cin = s[2], h = s[3], w = s[4];
  if (cin != spec_.in_channels) {
    fail(ErrorCode::kShape, "ConvLSTM: input has " + std::to_string(cin) +
                                " channels, layer expects " + std::to_string(spec_.in_channels));
  }
  const std::size_t hc = spec_.out_channels;
  const std::size_t plane = h * w;
  const std::size_t zc = cin + hc;
  input_shape_ = s;
  stacked_.assign(steps, {});
  gates_.assign(steps, {});
  cells_.assign(steps, {});

  Tensor out({batch, steps, hc, h, w});
  std::vector<double> hidden(batch * hc * plane, 0.0);
  std::vector<double> cell(batch * hc * plane, 0.0);
  std::vector<double> pre(batch * 4 * hc * plane);

  for (std::size_t t = 0; t < steps; ++t) {
    auto &z = stacked_[t];
    z.resize(batch * zc * plane);
    for (std::size_t b = 0; b < batch; ++b) {
      const double *x = input.data() + ((b * steps + t) * cin) * plane;
      std::copy(x, x + cin * plane, z.begin() + b * zc * plane);
      std::copy(hidden.begin() + b * hc * plane, hidden.begin() + (b + 1) * hc * plane,
                z.begin() + (b * zc + cin) * plane);
    }
    conv_forward(z.data(), batch, zc, h, w, weight_.value.data(), bias_.value.data(), 4 * hc,
                 spec_.kernel, pre.data());
    auto &gate = gates_[t];
    gate.resize(pre.size());
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < hc; ++c) {
        const std::size_t gi = (b * 4 * hc + c) * plane;
        const std::size_t gf = (b * 4 * hc + hc + c) * plane;
        const std::size_t go = (b * 4 * hc + 2 * hc + c) * plane;
        const std::size_t gg = (b * 4 * hc + 3 * hc + c) * plane;
        const std::size_t sc = (b * hc + c) * plane;
        double *y = out.data() + ((b * steps + t) * hc + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double ig = sigmoid(pre[gi + i]);
          const double fg = sigmoid(pre[gf + i]);
          const double og = sigmoid(pre[go + i]);
          const double cg = std::tanh(pre[gg + i]);
          gate[gi + i] = ig;
          gate[gf + i] = fg;
          gate[go + i] = og;
          gate[gg + i] = cg;
          cell[sc + i] = fg * cell[sc + i] + ig * cg;
          hidden[sc + i] = og * std::tanh(cell[sc + i]);
          y[i] = hidden[sc + i];
        }
      }
    }
    cells_[t] = cell;
  }
  require_finite(out, "ConvLSTM forward");
  return out;
}

Tensor ConvLSTM::backward(const Tensor &grad_output) {
  require_cached(!input_shape_.empty() && !stacked_.empty(), "ConvLSTM");
  const auto &s = input_shape_;
  const std::size_t batch = s[0], steps = s[1], cin = s[2], h = s[3], w = s[4];
  const std::size_t hc = spec_.out_channels;
  const std::size_t plane = h * w;
  const std::size_t zc = cin + hc;
  require_shape(grad_output, {batch, steps, hc, h, w}, "ConvLSTM backward");

  Tensor gin(s);
  std::vector<double> dh_next(batch * hc * plane, 0.0);
  std::vector<double> dc_next(batch * hc * plane, 0.0);
  std::vector<double> dpre(batch * 4 * hc * plane);
  std::vector<double> dz(batch * zc * plane);

  for (std::size_t step = steps; step-- > 0;) {
    const auto &gate = gates_[step];
    const auto &cell = cells_[step];
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < hc; ++c) {
        const std::size_t gi = (b * 4 * hc + c) * plane;
        const std::size_t gf = (b * 4 * hc + hc + c) * plane;
        const std::size_t go = (b * 4 * hc + 2 * hc + c) * plane;
        const std::size_t gg = (b * 4 * hc + 3 * hc + c) * plane;
        const std::size_t sc = (b * hc + c) * plane;
        const double *gy = grad_output.data() + ((b * steps + step) * hc + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double ig = gate[gi + i], fg = gate[gf + i], og = gate[go + i];
          const double cg = gate[gg + i];
          const double c_prev = step > 0 ? cells_[step - 1][sc + i] : 0.0;
          const double tc = std::tanh(cell[sc + i]);
          const double dh = gy[i] + dh_next[sc + i];
          const double dc = dh * og * (1.0 - tc * tc) + dc_next[sc + i];
          dpre[gi + i] = dc * cg * ig * (1.0 - ig);
          dpre[gf + i] = dc * c_prev * fg * (1.0 - fg);
          dpre[go + i] = dh * tc * og * (1.0 - og);
          dpre[gg + i] = dc * ig * (1.0 - cg * cg);
          dc_next[sc + i] = dc * fg;
        }
      }
    }
    std::fill(dz.begin(), dz.end(), 0.0);
    conv_backward(stacked_[step].data(), dpre.data(), batch, zc, h, w, weight_.value.data(),
                  4 * hc, spec_.kernel, dz.data(), weight_.grad.data(), bias_.grad.data());
    for (std::size_t b = 0; b < batch; ++b) {
      double *gx = gin.data() + ((b * steps + step) * cin) * plane;
      std::copy(dz.begin() + b * zc * plane, dz.begin() + (b * zc + cin) * plane, gx);
      std::copy(dz.begin() + (b * zc + cin) * plane, dz.begin() + (b + 1) * zc * plane,
                dh_next.begin() + b * hc * plane);
    }
  }
  require_finite(gin, "ConvLSTM backward");
  return gin;
}

// ---------------------------------------------------------------------------
// Dense / ReLU

Dense::Dense(std::size_t inputs, std::size_t units)
    : spec_(LayerSpec::fully_connected(inputs, units)),
      weight_("weight", Tensor({units, inputs})),
      bias_("bias", Tensor({units})) {}

void Dense::init_glorot(std::mt19937_64 &rng) {
  glorot_uniform(weight_.value, static_cast<double>(spec_.in_channels),
                 static_cast<double>(spec_.out_channels), rng);
  bias_.value.fill(0.0);
}

Tensor Dense::forward(const Tensor &input, Mode) {
  require_rank(input, 2, "Dense");
  const std::size_t batch = input.dim(0), in = input.dim(1);
  if (in != spec_.in_channels) {
    fail(ErrorCode::kShape, "Dense: input dim " + std::to_string(in) + ", layer expects " +
                                std::to_string(spec_.in_channels));
  }
  input_ = input;
  const std::size_t units = spec_.out_channels;
  Tensor out({batch, units});
  for (std::size_t b = 0; b < batch; ++b) {
    const double *x = input.data() + b * in;
    for (std::size_t u = 0; u < units; ++u) {
      const double *wr = weight_.value.data() + u * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * x[i];
      out[b * units + u] = acc + bias_.value[u];
    }
  }
  require_finite(out, "Dense forward");
  return out;
}

Tensor Dense::backward(const Tensor &grad_output) {
  require_cached(!input_.empty(), "Dense");
  const std::size_t batch = input_.dim(0), in = input_.dim(1);
  const std::size_t units = spec_.out_channels;
  require_shape(grad_output, {batch, units}, "Dense backward");
  Tensor gin({batch, in});
  for (std::size_t b = 0; b < batch; ++b) {
    const double *x = input_.data() + b * in;
    double *gx = gin.data() + b * in;
    for (std::size_t u = 0; u < units; ++u) {
      const double g = grad_output[b * units + u];
      bias_.grad[u] += g;
      if (g == 0.0) continue;
      double *gw = weight_.grad.data() + u * in;
      const double *wr = weight_.value.data() + u * in;
      for (std::size_t i = 0; i < in; ++i) {
        gw[i] += g * x[i];
        gx[i] += g * wr[i];
      }
    }
  }
  require_finite(gin, "Dense backward");
  return gin;
}

Tensor ReLU::forward(const Tensor &input, Mode) {
  input_ = input;
  Tensor out = input;
  for (double &v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor ReLU::backward(const Tensor &grad_output) {
  require_cached(!input_.empty(), "ReLU");
  require_shape(grad_output, input_.shape(), "ReLU backward");
  Tensor gin = grad_output;
  for (std::size_t i = 0; i < gin.size(); ++i) {
    if (input_[i] <= 0.0) gin[i] = 0.0;
  }
  return gin;
}

}  // namespace hetsl
