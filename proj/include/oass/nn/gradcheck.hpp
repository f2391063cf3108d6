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
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oass/common.hpp"
#include "oass/nn/blocks.hpp"
#include "oass/nn/dpe.hpp"
#include "oass/nn/tensor.hpp"
#include "oass/rng.hpp"

namespace oass::nn {

enum class GradCheckBlock { kGap, kPool, kUa, kDpe };

inline const char* to_string(GradCheckBlock b) {
  switch (b) {
    case GradCheckBlock::kGap: return "gap";
    case GradCheckBlock::kPool: return "pool";
    case GradCheckBlock::kUa: return "ua";
    case GradCheckBlock::kDpe: return "dpe";
  }
  return "?";
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

namespace detail_gc {

/// Mutable views over every tensor the check differentiates against.
struct LeafSet {
  std::vector<std::pair<double*, std::size_t>> leaves;

  void add(std::vector<double>& v) {
    if (!v.empty()) leaves.emplace_back(v.data(), v.size());
  }
  void add(Mat& m) { add(m.v); }
  void add(Tensor& t) { add(t.data); }
  void add(LinearParams& p) {
    add(p.w);
    add(p.b);
  }
  void add(LayerNormParams& p) {
    add(p.gamma);
    add(p.beta);
  }
  void add(SelfAttentionParams& p) {
    add(p.ln);
    add(p.wq);
    add(p.wk);
    add(p.wv);
    add(p.wo);
  }
  void add(PoolingAttentionParams& p) {
    add(p.wq);
    add(p.wk);
    add(p.wv);
  }
  void add(UaParams& p) {
    add(p.attn);
    add(p.pool);
    add(p.ln2);
    add(p.mlp1);
    add(p.mlp2);
  }
  void add(DpeParams& p) {
    add(p.offsets);
    add(p.embed);
  }
};

struct Fixture {
  LeafSet leaves;
  std::function<double()> loss;
  std::function<std::vector<std::vector<double>>()> analytic;
};

inline double mat_sum(const Mat& m) {
  double s = 0.0;
  for (const auto v : m.v) s += v;
  return s;
}

inline Mat ones_like(const Mat& m) {
  Mat o(m.rows, m.cols);
  for (auto& v : o.v) v = 1.0;
  return o;
}

inline std::vector<std::vector<double>> flatten(const LeafSet& set) {
  std::vector<std::vector<double>> out;
  for (const auto& [ptr, n] : set.leaves) out.emplace_back(ptr, ptr + n);
  return out;
}

inline void fill_uniform(Tensor& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (auto& v : t.data) v = rng.uniform(lo, hi);
}

inline Fixture make_gap_fixture(std::uint64_t seed) {
  auto st = std::make_shared<Tensor>(Tensor({4, 4, 3}));
  Rng rng(seed);
  fill_uniform(*st, rng);
  Fixture fx;
  fx.leaves.add(*st);
  fx.loss = [st] {
    const Tensor out = global_avg_pool(*st);
    double s = 0.0;
    for (const auto v : out.data) s += v;
    return s;
  };
  fx.analytic = [st] {
    Tensor dout({1, 1, st->shape[2]});
    for (auto& v : dout.data) v = 1.0;
    const Tensor dx = global_avg_pool_backward(*st, dout);
    return std::vector<std::vector<double>>{dx.data};
  };
  return fx;
}

inline Fixture make_pool_fixture(std::uint64_t seed) {
  struct State {
    Tensor x;
    PoolingAttentionParams params;
  };
  auto st = std::make_shared<State>();
  Rng rng(seed);
  st->x = Tensor({4, 4, 3});
  fill_uniform(st->x, rng);
  st->params.wq = init_linear(3, 3, rng);
  st->params.wk = init_linear(3, 3, rng, false);
  st->params.wv = init_linear(3, 3, rng);
  Fixture fx;
  fx.leaves.add(st->x);
  fx.leaves.add(st->params);
  fx.loss = [st] {
    PoolingAttentionCache cache;
    return mat_sum(pooling_attention_forward(tokens_of(st->x), st->params, cache));
  };
  fx.analytic = [st] {
    PoolingAttentionCache cache;
    const Mat out = pooling_attention_forward(tokens_of(st->x), st->params, cache);
    Mat dx(cache.x.rows, cache.x.cols);
    PoolingAttentionParams dp(st->x.shape[2]);
    pooling_attention_backward(cache, st->params, ones_like(out), dx, dp);
    LeafSet grads;
    Tensor dxt(st->x.shape);
    dxt.data = dx.v;
    grads.add(dxt);
    grads.add(dp);
    return flatten(grads);
  };
  return fx;
}

inline Fixture make_ua_fixture(std::uint64_t seed) {
  struct State {
    Tensor x;
    UaParams params;
  };
  auto st = std::make_shared<State>();
  Rng rng(seed);
  st->x = Tensor({4, 4, 3});
  fill_uniform(st->x, rng);
  st->params = init_ua_params(3, 6, rng);
  Fixture fx;
  fx.leaves.add(st->x);
  fx.leaves.add(st->params);
  fx.loss = [st] {
    UaBlockCache cache;
    return mat_sum(ua_block_forward(tokens_of(st->x), st->params, cache));
  };
  fx.analytic = [st] {
    UaBlockCache cache;
    const Mat out = ua_block_forward(tokens_of(st->x), st->params, cache);
    Mat dx(out.rows, out.cols);
    UaParams dp(st->x.shape[2], st->params.mlp1.b.size());
    // the parameter constructor seeds layer-norm scales at 1; grads start at 0
    for (auto& v : dp.attn.ln.gamma) v = 0.0;
    for (auto& v : dp.ln2.gamma) v = 0.0;
    ua_block_backward(cache, st->params, ones_like(out), dx, dp);
    LeafSet grads;
    Tensor dxt(st->x.shape);
    dxt.data = dx.v;
    grads.add(dxt);
    grads.add(dp);
    return flatten(grads);
  };
  return fx;
}

/// Bilinear sampling is non-differentiable on the pixel lattice and at the
/// clamp boundary; the fixture retries deterministically until every offset
/// sits safely away from both.
inline Fixture make_dpe_fixture(std::uint64_t seed) {
  struct State {
    Tensor x;
    DpeParams params;
  };
  auto st = std::make_shared<State>();
  const double margin = 1e-3;
  bool safe = false;
  for (std::uint64_t attempt = 0; attempt < 1000 && !safe; ++attempt) {
    Rng rng(seed + 1000003ull * attempt);
    st->x = Tensor({8, 8, 2});
    fill_uniform(st->x, rng);
    st->params = init_dpe_params(2, 2, 4.0, 2, 4, rng);
    const double bound = 0.25 / std::sqrt(8.0);
    for (auto& v : st->params.offsets.w.v) v = rng.uniform(-bound, bound);
    st->params.offsets.b[0] = rng.uniform(-0.4, 0.4);
    st->params.offsets.b[1] = rng.uniform(-0.4, 0.4);

    const Tensor offs = dpe_offsets(st->x, st->params);
    const double bound_v = 8.0 / 4.0, bound_h = 8.0 / 4.0;
    safe = true;
    for (std::size_t pi = 0; pi < offs.shape[0] && safe; ++pi) {
      for (int axis = 0; axis < 2; ++axis) {
        const double off = offs.data[pi * 2 + static_cast<std::size_t>(axis)];
        const double bnd = axis == 0 ? bound_v : bound_h;
        const double frac = off - std::floor(off);
        if (std::abs(off) > bnd - margin || frac < margin || frac > 1.0 - margin) {
          safe = false;
          break;
        }
      }
    }
  }
  detail::require(safe, "could not build a differentiable dpe fixture");

  Fixture fx;
  fx.leaves.add(st->x);
  fx.leaves.add(st->params);
  fx.loss = [st] {
    DpeCache cache;
    return mat_sum(dpe_embed_forward(st->x, st->params, cache));
  };
  fx.analytic = [st] {
    DpeCache cache;
    const Mat out = dpe_embed_forward(st->x, st->params, cache);
    Tensor dx(st->x.shape);
    DpeParams dp(st->params.patch, st->params.stride, st->params.offset_limit, st->x.shape[2],
                 st->params.embed.b.size());
    dpe_embed_backward(cache, st->params, ones_like(out), dx, dp);
    LeafSet grads;
    grads.add(dx);
    grads.add(dp);
    return flatten(grads);
  };
  return fx;
}

}  // namespace detail_gc

/// Compares analytic gradients of the scalar loss sum(block output) against
/// central finite differences for every input element and every parameter.
/// Relative error uses the denominator max(|analytic|, |numeric|, 1e-8).
/// `inject_fault` flips the sign of the largest analytic gradient entry to
/// demonstrate that the harness detects a broken backward pass.
inline GradCheckReport grad_check(GradCheckBlock block, std::uint64_t seed, double eps,
                                  bool inject_fault = false) {
  detail::require(eps >= 1e-7 && eps <= 1e-3, "eps must be in [1e-7, 1e-3]");

  detail_gc::Fixture fx;
  switch (block) {
    case GradCheckBlock::kGap: fx = detail_gc::make_gap_fixture(seed); break;
    case GradCheckBlock::kPool: fx = detail_gc::make_pool_fixture(seed); break;
    case GradCheckBlock::kUa: fx = detail_gc::make_ua_fixture(seed); break;
    case GradCheckBlock::kDpe: fx = detail_gc::make_dpe_fixture(seed); break;
  }

  auto analytic = fx.analytic();
  detail::require(analytic.size() == fx.leaves.leaves.size(),
                  "analytic gradient leaf count mismatch");

  if (inject_fault) {
    double best = -1.0;
    std::size_t bl = 0, bi = 0;
    for (std::size_t l = 0; l < analytic.size(); ++l)
      for (std::size_t i = 0; i < analytic[l].size(); ++i)
        if (std::abs(analytic[l][i]) > best) {
          best = std::abs(analytic[l][i]);
          bl = l;
          bi = i;
        }
    analytic[bl][bi] = -analytic[bl][bi];  // one sign flip
  }

  GradCheckReport report;
  for (std::size_t l = 0; l < fx.leaves.leaves.size(); ++l) {
    auto [ptr, n] = fx.leaves.leaves[l];
    detail::require(analytic[l].size() == n, "analytic gradient size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      const double saved = ptr[i];
      ptr[i] = saved + eps;
      const double up = fx.loss();
      ptr[i] = saved - eps;
      const double down = fx.loss();
      ptr[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[l][i];
      if (!std::isfinite(numeric) || !std::isfinite(a))
        throw Error("non-finite value in gradient check");
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.coords_checked;
    }
  }
  return report;
}

}  // namespace oass::nn
