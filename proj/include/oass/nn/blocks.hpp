// Copyright 2026 The OASS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "oass/common.hpp"
#include "oass/nn/tensor.hpp"
#include "oass/rng.hpp"

namespace oass::nn {

// ---------------------------------------------------------------------------
// Primitive layers (forward + hand-written backward)
// ---------------------------------------------------------------------------

struct LinearParams {
  Mat w;                  // in x out
  std::vector<double> b;  // out; empty = bias-free layer

  LinearParams() = default;
  LinearParams(std::size_t in, std::size_t out, bool bias = true)
      : w(in, out), b(bias ? out : 0, 0.0) {}
};

inline LinearParams init_linear(std::size_t in, std::size_t out, Rng& rng, bool bias = true) {
  LinearParams p(in, out, bias);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : p.w.v) v = rng.uniform(-bound, bound);
  for (auto& v : p.b) v = rng.uniform(-bound, bound);
  return p;
}

inline Mat linear_forward(const Mat& x, const LinearParams& p) {
  detail::require(x.cols == p.w.rows, "linear layer input width mismatch");
  Mat y = matmul(x, p.w);
  if (!p.b.empty())
    for (std::size_t i = 0; i < y.rows; ++i)
      for (std::size_t j = 0; j < y.cols; ++j) y.at(i, j) += p.b[j];
  return y;
}

inline void linear_backward(const Mat& x, const LinearParams& p, const Mat& dy, Mat& dx,
                            LinearParams& dp) {
  add_inplace(dx, matmul(dy, transpose(p.w)));
  add_inplace(dp.w, matmul(transpose(x), dy));
  if (!dp.b.empty())
    for (std::size_t i = 0; i < dy.rows; ++i)
      for (std::size_t j = 0; j < dy.cols; ++j) dp.b[j] += dy.at(i, j);
}

struct LayerNormParams {
  std::vector<double> gamma, beta;

  LayerNormParams() = default;
  explicit LayerNormParams(std::size_t dim) : gamma(dim, 1.0), beta(dim, 0.0) {}
};

struct LayerNormCache {
  Mat xhat;
  std::vector<double> inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

inline Mat layer_norm_forward(const Mat& x, const LayerNormParams& p, LayerNormCache& cache) {
  detail::require(x.cols == p.gamma.size(), "layer norm width mismatch");
  const std::size_t d = x.cols;
  Mat y(x.rows, d);
  cache.xhat = Mat(x.rows, d);
  cache.inv_std.assign(x.rows, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x.at(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double delta = x.at(i, j) - mean;
      var += delta * delta;
    }
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std[i] = inv_std;
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (x.at(i, j) - mean) * inv_std;
      cache.xhat.at(i, j) = xhat;
      y.at(i, j) = p.gamma[j] * xhat + p.beta[j];
    }
  }
  return y;
}

inline void layer_norm_backward(const LayerNormCache& cache, const LayerNormParams& p,
                                const Mat& dy, Mat& dx, LayerNormParams& dp) {
  const std::size_t d = dy.cols;
  for (std::size_t i = 0; i < dy.rows; ++i) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double g = dy.at(i, j) * p.gamma[j];
      sum_g += g;
      sum_gx += g * cache.xhat.at(i, j);
      dp.gamma[j] += dy.at(i, j) * cache.xhat.at(i, j);
      dp.beta[j] += dy.at(i, j);
    }
    const double scale = cache.inv_std[i] / static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double g = dy.at(i, j) * p.gamma[j];
      dx.at(i, j) += scale * (static_cast<double>(d) * g - sum_g -
                              cache.xhat.at(i, j) * sum_gx);
    }
  }
}

inline Mat softmax_rows(const Mat& s) {
  Mat y(s.rows, s.cols);
  for (std::size_t i = 0; i < s.rows; ++i) {
    double mx = s.at(i, 0);
    for (std::size_t j = 1; j < s.cols; ++j) mx = std::max(mx, s.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < s.cols; ++j) {
      const double e = std::exp(s.at(i, j) - mx);
      y.at(i, j) = e;
      sum += e;
    }
    for (std::size_t j = 0; j < s.cols; ++j) y.at(i, j) /= sum;
  }
  return y;
}

inline Mat softmax_backward(const Mat& y, const Mat& dy) {
  Mat ds(y.rows, y.cols);
  for (std::size_t i = 0; i < y.rows; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < y.cols; ++j) dot += dy.at(i, j) * y.at(i, j);
    for (std::size_t j = 0; j < y.cols; ++j)
      ds.at(i, j) = y.at(i, j) * (dy.at(i, j) - dot);
  }
  return ds;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Exact (erf-based) GELU and its derivative.
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

// ---------------------------------------------------------------------------
// Global average pooling
// ---------------------------------------------------------------------------

/// Per-channel spatial mean: H x W x C -> 1 x 1 x C.
inline Tensor global_avg_pool(const Tensor& x) {
  detail::require(x.rank() == 3, "global_avg_pool expects a rank-3 tensor");
  const std::size_t hw = x.shape[0] * x.shape[1];
  const std::size_t c = x.shape[2];
  Tensor out({1, 1, c});
  for (std::size_t t = 0; t < hw; ++t)
    for (std::size_t ch = 0; ch < c; ++ch) out.data[ch] += x.data[t * c + ch];
  for (std::size_t ch = 0; ch < c; ++ch) out.data[ch] /= static_cast<double>(hw);
  return out;
}

inline Tensor global_avg_pool_backward(const Tensor& x, const Tensor& dout) {
  const std::size_t hw = x.shape[0] * x.shape[1];
  const std::size_t c = x.shape[2];
  Tensor dx(x.shape);
  for (std::size_t t = 0; t < hw; ++t)
    for (std::size_t ch = 0; ch < c; ++ch)
      dx.data[t * c + ch] = dout.data[ch] / static_cast<double>(hw);
  return dx;
}

// ---------------------------------------------------------------------------
// Self-attention (single head, pre-norm, residual)
// ---------------------------------------------------------------------------

struct SelfAttentionParams {
  LayerNormParams ln;
  LinearParams wq, wk, wv, wo;

  SelfAttentionParams() = default;
  // The key projection is bias-free: a key bias shifts every attention score
  // in a row equally, which row softmax cancels exactly.
  explicit SelfAttentionParams(std::size_t c)
      : ln(c), wq(c, c), wk(c, c, false), wv(c, c), wo(c, c) {}
};

struct SelfAttentionCache {
  Mat x, xn, q, k, v, attn, ctx;
  LayerNormCache ln;
};

inline Mat self_attention_forward(const Mat& x, const SelfAttentionParams& p,
                                  SelfAttentionCache& cache) {
  cache.x = x;
  cache.xn = layer_norm_forward(x, p.ln, cache.ln);
  cache.q = linear_forward(cache.xn, p.wq);
  cache.k = linear_forward(cache.xn, p.wk);
  cache.v = linear_forward(cache.xn, p.wv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.cols));
  Mat scores = matmul(cache.q, transpose(cache.k));
  for (auto& v : scores.v) v *= scale;
  cache.attn = softmax_rows(scores);
  cache.ctx = matmul(cache.attn, cache.v);
  Mat out = linear_forward(cache.ctx, p.wo);
  add_inplace(out, x);  // residual
  return out;
}

inline void self_attention_backward(const SelfAttentionCache& cache, const SelfAttentionParams& p,
                                    const Mat& dout, Mat& dx, SelfAttentionParams& dp) {
  add_inplace(dx, dout);  // residual path
  Mat dctx(cache.ctx.rows, cache.ctx.cols);
  linear_backward(cache.ctx, p.wo, dout, dctx, dp.wo);

  Mat dattn = matmul(dctx, transpose(cache.v));
  Mat dv = matmul(transpose(cache.attn), dctx);
  Mat dscores = softmax_backward(cache.attn, dattn);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cache.x.cols));
  for (auto& v : dscores.v) v *= scale;
  Mat dq = matmul(dscores, cache.k);
  Mat dk = matmul(transpose(dscores), cache.q);

  Mat dxn(cache.xn.rows, cache.xn.cols);
  linear_backward(cache.xn, p.wq, dq, dxn, dp.wq);
  linear_backward(cache.xn, p.wk, dk, dxn, dp.wk);
  linear_backward(cache.xn, p.wv, dv, dxn, dp.wv);
  layer_norm_backward(cache.ln, p.ln, dxn, dx, dp.ln);
}

// ---------------------------------------------------------------------------
// Pooling attention: one pooled query attends over all tokens
// ---------------------------------------------------------------------------

struct PoolingAttentionParams {
  LinearParams wq, wk, wv;  // q from the pooled feature, k/v from tokens

  PoolingAttentionParams() = default;
  explicit PoolingAttentionParams(std::size_t c) : wq(c, c), wk(c, c, false), wv(c, c) {}
};

struct PoolingAttentionCache {
  Mat x, pooled, q, k, v, attn;
};

/// q = W_q GAP(X'), keys/values are projections of the tokens; the attended
/// query q' = softmax(q k^T / sqrt(C)) v comes back as a 1 x C row.
inline Mat pooling_attention_forward(const Mat& x, const PoolingAttentionParams& p,
                                     PoolingAttentionCache& cache) {
  cache.x = x;
  Mat pooled(1, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) pooled.at(0, j) += x.at(i, j);
  for (auto& v : pooled.v) v /= static_cast<double>(x.rows);
  cache.pooled = pooled;
  cache.q = linear_forward(pooled, p.wq);
  cache.k = linear_forward(x, p.wk);
  cache.v = linear_forward(x, p.wv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.cols));
  Mat scores = matmul(cache.q, transpose(cache.k));
  for (auto& v : scores.v) v *= scale;
  cache.attn = softmax_rows(scores);
  return matmul(cache.attn, cache.v);  // 1 x C
}

inline void pooling_attention_backward(const PoolingAttentionCache& cache,
                                       const PoolingAttentionParams& p, const Mat& dout,
                                       Mat& dx, PoolingAttentionParams& dp) {
  Mat dattn = matmul(dout, transpose(cache.v));
  Mat dv = matmul(transpose(cache.attn), dout);
  Mat dscores = softmax_backward(cache.attn, dattn);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cache.x.cols));
  for (auto& v : dscores.v) v *= scale;
  Mat dq = matmul(dscores, cache.k);
  Mat dk = matmul(transpose(dscores), cache.q);

  Mat dpooled(1, cache.x.cols);
  linear_backward(cache.pooled, p.wq, dq, dpooled, dp.wq);
  linear_backward(cache.x, p.wk, dk, dx, dp.wk);
  linear_backward(cache.x, p.wv, dv, dx, dp.wv);
  for (std::size_t i = 0; i < cache.x.rows; ++i)
    for (std::size_t j = 0; j < cache.x.cols; ++j)
      dx.at(i, j) += dpooled.at(0, j) / static_cast<double>(cache.x.rows);
}

// ---------------------------------------------------------------------------
// The full attention block with the sigmoid channel gate
// ---------------------------------------------------------------------------

struct UaParams {
  SelfAttentionParams attn;
  PoolingAttentionParams pool;
  LayerNormParams ln2;
  LinearParams mlp1, mlp2;

  UaParams() = default;
  UaParams(std::size_t c, std::size_t hidden)
      : attn(c), pool(c), ln2(c), mlp1(c, hidden), mlp2(hidden, c) {}
};

inline UaParams init_ua_params(std::size_t c, std::size_t hidden, Rng& rng) {
  UaParams p(c, hidden);
  p.attn.wq = init_linear(c, c, rng);
  p.attn.wk = init_linear(c, c, rng, false);
  p.attn.wv = init_linear(c, c, rng);
  p.attn.wo = init_linear(c, c, rng);
  p.pool.wq = init_linear(c, c, rng);
  p.pool.wk = init_linear(c, c, rng, false);
  p.pool.wv = init_linear(c, c, rng);
  p.mlp1 = init_linear(c, hidden, rng);
  p.mlp2 = init_linear(hidden, c, rng);
  return p;
}

struct UaBlockCache {
  SelfAttentionCache attn;
  PoolingAttentionCache pool;
  Mat x1;      // after self-attention
  Mat qprime;  // 1 x C
  Mat gate;    // sigmoid(qprime), 1 x C
  Mat x2;      // gated feature
  Mat xn2, z1, g1;
  LayerNormCache ln2;
};

/// X -> self-attention -> sigmoid(pooled attention) channel gate -> MLP,
/// with a residual around the MLP. Shape preserving.
inline Mat ua_block_forward(const Mat& x, const UaParams& p, UaBlockCache& cache) {
  cache.x1 = self_attention_forward(x, p.attn, cache.attn);
  cache.qprime = pooling_attention_forward(cache.x1, p.pool, cache.pool);
  cache.gate = Mat(1, x.cols);
  for (std::size_t j = 0; j < x.cols; ++j) cache.gate.at(0, j) = sigmoid(cache.qprime.at(0, j));
  cache.x2 = Mat(cache.x1.rows, cache.x1.cols);
  for (std::size_t i = 0; i < cache.x1.rows; ++i)
    for (std::size_t j = 0; j < cache.x1.cols; ++j)
      cache.x2.at(i, j) = cache.x1.at(i, j) * cache.gate.at(0, j);

  cache.xn2 = layer_norm_forward(cache.x2, p.ln2, cache.ln2);
  cache.z1 = linear_forward(cache.xn2, p.mlp1);
  cache.g1 = Mat(cache.z1.rows, cache.z1.cols);
  for (std::size_t i = 0; i < cache.z1.v.size(); ++i) cache.g1.v[i] = gelu(cache.z1.v[i]);
  Mat out = linear_forward(cache.g1, p.mlp2);
  add_inplace(out, cache.x2);  // residual
  return out;
}

inline void ua_block_backward(const UaBlockCache& cache, const UaParams& p, const Mat& dout,
                              Mat& dx, UaParams& dp) {
  // MLP branch
  Mat dg1(cache.g1.rows, cache.g1.cols);
  linear_backward(cache.g1, p.mlp2, dout, dg1, dp.mlp2);
  Mat dz1(cache.z1.rows, cache.z1.cols);
  for (std::size_t i = 0; i < dz1.v.size(); ++i) dz1.v[i] = dg1.v[i] * gelu_grad(cache.z1.v[i]);
  Mat dxn2(cache.xn2.rows, cache.xn2.cols);
  linear_backward(cache.xn2, p.mlp1, dz1, dxn2, dp.mlp1);
  Mat dx2(cache.x2.rows, cache.x2.cols);
  layer_norm_backward(cache.ln2, p.ln2, dxn2, dx2, dp.ln2);
  add_inplace(dx2, dout);  // residual

  // Channel gate: x2 = x1 * gate (gate broadcast over rows).
  Mat dx1(cache.x1.rows, cache.x1.cols);
  Mat dgate(1, cache.x1.cols);
  for (std::size_t i = 0; i < cache.x1.rows; ++i)
    for (std::size_t j = 0; j < cache.x1.cols; ++j) {
      dx1.at(i, j) += dx2.at(i, j) * cache.gate.at(0, j);
      dgate.at(0, j) += dx2.at(i, j) * cache.x1.at(i, j);
    }
  Mat dqprime(1, cache.x1.cols);
  for (std::size_t j = 0; j < cache.x1.cols; ++j) {
    const double s = cache.gate.at(0, j);
    dqprime.at(0, j) = dgate.at(0, j) * s * (1.0 - s);
  }
  pooling_attention_backward(cache.pool, p.pool, dqprime, dx1, dp.pool);
  self_attention_backward(cache.attn, p.attn, dx1, dx, dp.attn);
}

// Tensor-level wrappers (H x W x C in, same shape out).

inline Tensor self_attention(const Tensor& x, const SelfAttentionParams& p) {
  SelfAttentionCache cache;
  return tensor_of(self_attention_forward(tokens_of(x), p, cache), x.shape[0], x.shape[1]);
}

inline Tensor pooling_attention(const Tensor& x, const PoolingAttentionParams& p) {
  PoolingAttentionCache cache;
  Mat q = pooling_attention_forward(tokens_of(x), p, cache);
  return tensor_of(q, 1, 1);
}

inline Tensor ua_block(const Tensor& x, const UaParams& p) {
  UaBlockCache cache;
  return tensor_of(ua_block_forward(tokens_of(x), p, cache), x.shape[0], x.shape[1]);
}

}  // namespace oass::nn
