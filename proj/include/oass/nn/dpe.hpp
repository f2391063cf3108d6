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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "oass/common.hpp"
#include "oass/nn/blocks.hpp"
#include "oass/nn/tensor.hpp"
#include "oass/rng.hpp"

namespace oass::nn {

/// Deformable patch embedding: each k x k patch predicts a 2d offset from its
/// own (undisplaced) content, the offset is clamped to +-H/r vertically and
/// +-W/r horizontally, the patch resamples its neighbourhood at the displaced
/// position (bilinear, zero outside the image), and a linear projection maps
/// the samples to the embedding width.
struct DpeParams {
  std::size_t patch = 2;    // k
  std::size_t stride = 2;   // s
  double offset_limit = 4;  // r
  LinearParams offsets;     // (k*k*C) x 2 predictor g(.)
  LinearParams embed;       // (k*k*C) x E projection

  DpeParams() = default;
  DpeParams(std::size_t k, std::size_t s, double r, std::size_t channels, std::size_t embed_dim)
      : patch(k), stride(s), offset_limit(r),
        offsets(k * k * channels, 2), embed(k * k * channels, embed_dim) {
    detail::require(k >= 1 && s >= 1, "patch size and stride must be >= 1");
    detail::require(r > 0.0, "offset limit divisor must be positive");
  }
};

/// Offset predictor starts at zero so an untrained layer reduces to plain
/// patch embedding; the projection gets the usual fan-in uniform init.
inline DpeParams init_dpe_params(std::size_t k, std::size_t s, double r, std::size_t channels,
                                 std::size_t embed_dim, Rng& rng) {
  DpeParams p(k, s, r, channels, embed_dim);
  p.embed = init_linear(k * k * channels, embed_dim, rng);
  return p;
}

struct PatchGrid {
  std::size_t rows = 0, cols = 0;
  std::size_t count() const { return rows * cols; }
};

inline PatchGrid patch_grid(const Tensor& x, std::size_t k, std::size_t s) {
  detail::require(x.rank() == 3, "patch embedding expects a rank-3 tensor");
  detail::require(x.shape[0] >= k && x.shape[1] >= k, "image smaller than patch");
  detail::require((x.shape[0] - k) % s == 0 && (x.shape[1] - k) % s == 0,
                  "patch grid does not tile the input (check dims, patch, stride)");
  return {(x.shape[0] - k) / s + 1, (x.shape[1] - k) / s + 1};
}

namespace detail_dpe {

/// Flattened k x k x C window anchored at (r0, c0); the anchor is always in
/// bounds for valid-mode grids.
inline std::vector<double> window_of(const Tensor& x, std::size_t r0, std::size_t c0,
                                     std::size_t k) {
  const std::size_t c = x.shape[2];
  std::vector<double> out(k * k * c);
  std::size_t idx = 0;
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < k; ++v)
      for (std::size_t ch = 0; ch < c; ++ch) out[idx++] = x.at3(r0 + u, c0 + v, ch);
  return out;
}

struct BilinearSample {
  double value = 0.0;
  double dv_dy = 0.0;  // derivative wrt the (real-valued) row coordinate
  double dv_dx = 0.0;
};

inline BilinearSample bilinear(const Tensor& x, double y, double xx, std::size_t ch) {
  const auto h = static_cast<std::ptrdiff_t>(x.shape[0]);
  const auto w = static_cast<std::ptrdiff_t>(x.shape[1]);
  const double fy = std::floor(y);
  const double fx = std::floor(xx);
  const auto r0 = static_cast<std::ptrdiff_t>(fy);
  const auto c0 = static_cast<std::ptrdiff_t>(fx);
  const double ay = y - fy;
  const double ax = xx - fx;
  auto value_at = [&](std::ptrdiff_t r, std::ptrdiff_t c) -> double {
    if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
    return x.at3(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch);
  };
  const double v00 = value_at(r0, c0);
  const double v01 = value_at(r0, c0 + 1);
  const double v10 = value_at(r0 + 1, c0);
  const double v11 = value_at(r0 + 1, c0 + 1);
  BilinearSample s;
  s.value = (1 - ay) * (1 - ax) * v00 + (1 - ay) * ax * v01 + ay * (1 - ax) * v10 + ay * ax * v11;
  s.dv_dy = -(1 - ax) * v00 - ax * v01 + (1 - ax) * v10 + ax * v11;
  s.dv_dx = -(1 - ay) * v00 + (1 - ay) * v01 - ay * v10 + ay * v11;
  return s;
}

/// Scatters `g` into dx at the four bilinear corners of (y, x).
inline void bilinear_backward_value(Tensor& dx, double y, double xx, std::size_t ch, double g) {
  const auto h = static_cast<std::ptrdiff_t>(dx.shape[0]);
  const auto w = static_cast<std::ptrdiff_t>(dx.shape[1]);
  const double fy = std::floor(y);
  const double fx = std::floor(xx);
  const auto r0 = static_cast<std::ptrdiff_t>(fy);
  const auto c0 = static_cast<std::ptrdiff_t>(fx);
  const double ay = y - fy;
  const double ax = xx - fx;
  auto add = [&](std::ptrdiff_t r, std::ptrdiff_t c, double wgt) {
    if (r < 0 || r >= h || c < 0 || c >= w) return;
    dx.at3(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch) += g * wgt;
  };
  add(r0, c0, (1 - ay) * (1 - ax));
  add(r0, c0 + 1, (1 - ay) * ax);
  add(r0 + 1, c0, ay * (1 - ax));
  add(r0 + 1, c0 + 1, ay * ax);
}

}  // namespace detail_dpe

/// Raw offsets g(X) per patch, clamped elementwise: row offsets to
/// [-H/r, H/r], column offsets to [-W/r, W/r]. Output is (patches x 2).
inline Tensor dpe_offsets(const Tensor& x, const DpeParams& p) {
  const PatchGrid grid = patch_grid(x, p.patch, p.stride);
  const double bound_v = static_cast<double>(x.shape[0]) / p.offset_limit;
  const double bound_h = static_cast<double>(x.shape[1]) / p.offset_limit;
  Tensor out({grid.count(), 2});
  std::size_t pi = 0;
  for (std::size_t i = 0; i < grid.rows; ++i) {
    for (std::size_t j = 0; j < grid.cols; ++j, ++pi) {
      const auto window = detail_dpe::window_of(x, i * p.stride, j * p.stride, p.patch);
      double raw_v = p.offsets.b[0], raw_h = p.offsets.b[1];
      for (std::size_t n = 0; n < window.size(); ++n) {
        raw_v += window[n] * p.offsets.w.at(n, 0);
        raw_h += window[n] * p.offsets.w.at(n, 1);
      }
      out.data[pi * 2] = std::clamp(raw_v, -bound_v, bound_v);
      out.data[pi * 2 + 1] = std::clamp(raw_h, -bound_h, bound_h);
    }
  }
  return out;
}

struct DpeCache {
  Tensor x;
  PatchGrid grid;
  std::vector<double> raw;      // unclamped offsets, patches x 2
  Tensor offsets;               // clamped, patches x 2
  Mat samples;                  // patches x (k*k*C), displaced window values
};

inline Mat dpe_embed_forward(const Tensor& x, const DpeParams& p, DpeCache& cache) {
  cache.x = x;
  cache.grid = patch_grid(x, p.patch, p.stride);
  const std::size_t c = x.shape[2];
  const std::size_t flat = p.patch * p.patch * c;
  detail::require(p.offsets.w.rows == flat && p.embed.w.rows == flat,
                  "parameter width does not match patch * channels");
  const double bound_v = static_cast<double>(x.shape[0]) / p.offset_limit;
  const double bound_h = static_cast<double>(x.shape[1]) / p.offset_limit;

  cache.raw.assign(cache.grid.count() * 2, 0.0);
  cache.offsets = Tensor({cache.grid.count(), 2});
  cache.samples = Mat(cache.grid.count(), flat);

  std::size_t pi = 0;
  for (std::size_t i = 0; i < cache.grid.rows; ++i) {
    for (std::size_t j = 0; j < cache.grid.cols; ++j, ++pi) {
      const std::size_t r0 = i * p.stride, c0 = j * p.stride;
      const auto window = detail_dpe::window_of(x, r0, c0, p.patch);
      double raw_v = p.offsets.b[0], raw_h = p.offsets.b[1];
      for (std::size_t n = 0; n < flat; ++n) {
        raw_v += window[n] * p.offsets.w.at(n, 0);
        raw_h += window[n] * p.offsets.w.at(n, 1);
      }
      cache.raw[pi * 2] = raw_v;
      cache.raw[pi * 2 + 1] = raw_h;
      const double off_v = std::clamp(raw_v, -bound_v, bound_v);
      const double off_h = std::clamp(raw_h, -bound_h, bound_h);
      cache.offsets.data[pi * 2] = off_v;
      cache.offsets.data[pi * 2 + 1] = off_h;

      std::size_t n = 0;
      for (std::size_t u = 0; u < p.patch; ++u)
        for (std::size_t v = 0; v < p.patch; ++v)
          for (std::size_t ch = 0; ch < c; ++ch, ++n)
            cache.samples.at(pi, n) =
                detail_dpe::bilinear(x, static_cast<double>(r0 + u) + off_v,
                                     static_cast<double>(c0 + v) + off_h, ch)
                    .value;
    }
  }
  return linear_forward(cache.samples, p.embed);
}

/// Tokens (patches x embed_dim) from the displaced patches.
inline Tensor dpe_embed(const Tensor& x, const DpeParams& p) {
  DpeCache cache;
  Mat tokens = dpe_embed_forward(x, p, cache);
  Tensor out({tokens.rows, tokens.cols});
  out.data = tokens.v;
  return out;
}

inline void dpe_embed_backward(const DpeCache& cache, const DpeParams& p, const Mat& dout,
                               Tensor& dx, DpeParams& dp) {
  const std::size_t c = cache.x.shape[2];
  const double bound_v = static_cast<double>(cache.x.shape[0]) / p.offset_limit;
  const double bound_h = static_cast<double>(cache.x.shape[1]) / p.offset_limit;

  Mat dsamples(cache.samples.rows, cache.samples.cols);
  linear_backward(cache.samples, p.embed, dout, dsamples, dp.embed);

  std::size_t pi = 0;
  for (std::size_t i = 0; i < cache.grid.rows; ++i) {
    for (std::size_t j = 0; j < cache.grid.cols; ++j, ++pi) {
      const std::size_t r0 = i * p.stride, c0 = j * p.stride;
      const double off_v = cache.offsets.data[pi * 2];
      const double off_h = cache.offsets.data[pi * 2 + 1];

      // Value path into X plus position path into the offsets.
      double doff_v = 0.0, doff_h = 0.0;
      std::size_t n = 0;
      for (std::size_t u = 0; u < p.patch; ++u)
        for (std::size_t v = 0; v < p.patch; ++v)
          for (std::size_t ch = 0; ch < c; ++ch, ++n) {
            const double g = dsamples.at(pi, n);
            if (g == 0.0) continue;
            const double y = static_cast<double>(r0 + u) + off_v;
            const double xx = static_cast<double>(c0 + v) + off_h;
            const auto s = detail_dpe::bilinear(cache.x, y, xx, ch);
            doff_v += g * s.dv_dy;
            doff_h += g * s.dv_dx;
            detail_dpe::bilinear_backward_value(dx, y, xx, ch, g);
          }

      // Clamp passes gradient only strictly inside the bounds.
      const double raw_v = cache.raw[pi * 2];
      const double raw_h = cache.raw[pi * 2 + 1];
      double draw_v = (raw_v > -bound_v && raw_v < bound_v) ? doff_v : 0.0;
      double draw_h = (raw_h > -bound_h && raw_h < bound_h) ? doff_h : 0.0;
      if (draw_v == 0.0 && draw_h == 0.0) continue;

      const auto window = detail_dpe::window_of(cache.x, r0, c0, p.patch);
      dp.offsets.b[0] += draw_v;
      dp.offsets.b[1] += draw_h;
      std::size_t m = 0;
      for (std::size_t u = 0; u < p.patch; ++u)
        for (std::size_t v = 0; v < p.patch; ++v)
          for (std::size_t ch = 0; ch < c; ++ch, ++m) {
            dp.offsets.w.at(m, 0) += window[m] * draw_v;
            dp.offsets.w.at(m, 1) += window[m] * draw_h;
            dx.at3(r0 + u, c0 + v, ch) +=
                p.offsets.w.at(m, 0) * draw_v + p.offsets.w.at(m, 1) * draw_h;
          }
    }
  }
}

/// Plain patch embedding: fixed integer windows, same projection layout.
inline Tensor patch_embed(const Tensor& x, std::size_t k, std::size_t s,
                          const LinearParams& embed) {
  const PatchGrid grid = patch_grid(x, k, s);
  Mat windows(grid.count(), k * k * x.shape[2]);
  std::size_t pi = 0;
  for (std::size_t i = 0; i < grid.rows; ++i)
    for (std::size_t j = 0; j < grid.cols; ++j, ++pi) {
      const auto w = detail_dpe::window_of(x, i * s, j * s, k);
      for (std::size_t n = 0; n < w.size(); ++n) windows.at(pi, n) = w[n];
    }
  Mat tokens = linear_forward(windows, embed);
  Tensor out({tokens.rows, tokens.cols});
  out.data = tokens.v;
  return out;
}

// ---------------------------------------------------------------------------
// Four-stage backbone
// ---------------------------------------------------------------------------

struct StageConfig {
  std::size_t patch = 2;
  std::size_t stride = 2;
  std::size_t embed_dim = 8;
  std::size_t num_blocks = 1;
  bool use_dpe = false;
  double offset_limit = 4.0;
};

/// The default arrangement places deformable embeddings in stages 2 and 4.
inline std::vector<StageConfig> default_stage_configs(std::size_t base_dim = 8) {
  std::vector<StageConfig> cfg(4);
  for (std::size_t s = 0; s < 4; ++s) {
    cfg[s].embed_dim = base_dim << s;
    cfg[s].use_dpe = (s == 1 || s == 3);
  }
  return cfg;
}

struct StageParams {
  DpeParams embed;
  std::vector<UaParams> blocks;
};

struct BackboneParams {
  std::vector<StageConfig> configs;
  std::vector<StageParams> stages;
};

inline BackboneParams init_backbone(const std::vector<StageConfig>& configs,
                                    std::size_t in_channels, Rng& rng) {
  detail::require(configs.size() == 4, "backbone expects exactly four stages");
  BackboneParams p;
  p.configs = configs;
  std::size_t channels = in_channels;
  for (const auto& cfg : configs) {
    StageParams stage;
    stage.embed = init_dpe_params(cfg.patch, cfg.stride, cfg.offset_limit, channels,
                                  cfg.embed_dim, rng);
    if (cfg.use_dpe) {
      // small nonzero offset predictor so the deformation is active
      const double bound = 0.05 / std::sqrt(static_cast<double>(cfg.patch * cfg.patch * channels));
      for (auto& v : stage.embed.offsets.w.v) v = rng.uniform(-bound, bound);
    }
    for (std::size_t b = 0; b < cfg.num_blocks; ++b)
      stage.blocks.push_back(init_ua_params(cfg.embed_dim, 2 * cfg.embed_dim, rng));
    p.stages.push_back(std::move(stage));
    channels = cfg.embed_dim;
  }
  return p;
}

/// Runs the four stages and returns the per-stage feature maps.
inline std::vector<Tensor> backbone_forward(const Tensor& x, const BackboneParams& params) {
  detail::require(params.configs.size() == 4 && params.stages.size() == 4,
                  "backbone expects exactly four stages");
  std::vector<Tensor> features;
  Tensor cur = x;
  for (std::size_t s = 0; s < 4; ++s) {
    const auto& cfg = params.configs[s];
    const auto& stage = params.stages[s];
    detail::require(cur.shape[2] == stage.embed.offsets.w.rows / (cfg.patch * cfg.patch),
                    "stage input channels do not match its parameters");
    const PatchGrid grid = patch_grid(cur, cfg.patch, cfg.stride);
    Tensor tokens = cfg.use_dpe ? dpe_embed(cur, stage.embed)
                                : patch_embed(cur, cfg.patch, cfg.stride, stage.embed.embed);
    Mat tok(tokens.shape[0], tokens.shape[1]);
    tok.v = tokens.data;
    for (const auto& block : stage.blocks) {
      UaBlockCache cache;
      tok = ua_block_forward(tok, block, cache);
    }
    cur = tensor_of(tok, grid.rows, grid.cols);
    features.push_back(cur);
  }
  return features;
}

}  // namespace oass::nn
