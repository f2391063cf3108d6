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

#include <gtest/gtest.h>

#include <cmath>

#include "oass/nn/blocks.hpp"
#include "oass/nn/dpe.hpp"
#include "oass/nn/gradcheck.hpp"
#include "oass/rng.hpp"

namespace oass::nn {
namespace {

TEST(GlobalAvgPool, ConstantAndHandComputed) {
  Tensor constant({3, 5, 2});
  for (std::size_t i = 0; i < constant.data.size(); ++i)
    constant.data[i] = i % 2 == 0 ? 4.25 : -1.5;
  const Tensor pooled = global_avg_pool(constant);
  EXPECT_DOUBLE_EQ(pooled.data[0], 4.25);
  EXPECT_DOUBLE_EQ(pooled.data[1], -1.5);

  Tensor x({2, 2, 1});
  x.data = {1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(global_avg_pool(x).data[0], 2.5);
}

TEST(GlobalAvgPool, GradientIsUniform) {
  Tensor x({2, 2, 1});
  x.data = {1.0, 2.0, 3.0, 4.0};
  Tensor dout({1, 1, 1});
  dout.data = {1.0};
  const Tensor dx = global_avg_pool_backward(x, dout);
  for (const auto v : dx.data) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(GlobalAvgPool, RejectsWrongRank) {
  Tensor flat({4, 4});
  EXPECT_THROW(global_avg_pool(flat), ValidationError);
}

TEST(SelfAttention, ShapePreservedAndZeroWeightsGiveResidual) {
  Rng rng(3);
  Tensor x({4, 4, 3});
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);

  SelfAttentionParams zero(3);  // all projections zero, layer norm default
  const Tensor out = self_attention(x, zero);
  ASSERT_EQ(out.shape, x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) EXPECT_DOUBLE_EQ(out.data[i], x.data[i]);
}

TEST(SelfAttention, SoftmaxRowsSumToOne) {
  Rng rng(4);
  Tensor x({3, 3, 4});
  for (auto& v : x.data) v = rng.uniform(-2.0, 2.0);
  SelfAttentionParams p(4);
  p.wq = init_linear(4, 4, rng);
  p.wk = init_linear(4, 4, rng);
  p.wv = init_linear(4, 4, rng);
  p.wo = init_linear(4, 4, rng);
  SelfAttentionCache cache;
  (void)self_attention_forward(tokens_of(x), p, cache);
  for (std::size_t i = 0; i < cache.attn.rows; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cache.attn.cols; ++j) sum += cache.attn.at(i, j);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(PoolingAttention, OutputShapeAndConstantInput) {
  Rng rng(5);
  PoolingAttentionParams p(3);
  p.wq = init_linear(3, 3, rng);
  p.wk = init_linear(3, 3, rng);
  p.wv = init_linear(3, 3, rng);

  Tensor x({4, 4, 3});
  for (std::size_t t = 0; t < 16; ++t)
    for (std::size_t c = 0; c < 3; ++c) x.data[t * 3 + c] = 0.3 * static_cast<double>(c) - 0.1;
  const Tensor q = pooling_attention(x, p);
  ASSERT_EQ(q.shape, (std::vector<std::size_t>{1, 1, 3}));

  // With spatially constant input every token value row is identical, so the
  // attended output equals the value projection of any token regardless of
  // the attention weights.
  PoolingAttentionCache cache;
  (void)pooling_attention_forward(tokens_of(x), p, cache);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(q.data[c], cache.v.at(0, c), 1e-12);
}

TEST(UaBlock, GateBoundsAndAnnihilation) {
  Rng rng(6);
  Tensor x({4, 4, 3});
  for (auto& v : x.data) v = rng.uniform(-3.0, 3.0);
  UaParams p = init_ua_params(3, 6, rng);
  UaBlockCache cache;
  (void)ua_block_forward(tokens_of(x), p, cache);
  for (const auto g : cache.gate.v) {
    EXPECT_GT(g, 0.0);
    EXPECT_LT(g, 1.0);
  }
  // X' = 0 everywhere makes the gated feature vanish.
  Mat zero(16, 3);
  Mat x2(zero.rows, zero.cols);
  for (std::size_t i = 0; i < zero.rows; ++i)
    for (std::size_t j = 0; j < zero.cols; ++j) x2.at(i, j) = zero.at(i, j) * cache.gate.at(0, j);
  for (const auto v : x2.v) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(UaBlock, ShapePreserved) {
  Rng rng(7);
  Tensor x({5, 3, 4});
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  const UaParams p = init_ua_params(4, 8, rng);
  EXPECT_EQ(ua_block(x, p).shape, x.shape);
}

TEST(UaBlock, FrozenGateScalesChannelsExactly) {
  // With the gate held fixed, scaling channel c of X' scales channel c of
  // the gated feature by the same factor.
  Rng rng(8);
  Mat x1(16, 3);
  for (auto& v : x1.v) v = rng.uniform(-1.0, 1.0);
  Mat gate(1, 3);
  gate.v = {0.3, 0.6, 0.9};
  const double lambda = 2.5;
  for (std::size_t j = 0; j < 3; ++j) {
    Mat scaled = x1;
    for (std::size_t i = 0; i < 16; ++i) scaled.at(i, j) *= lambda;
    for (std::size_t i = 0; i < 16; ++i) {
      EXPECT_DOUBLE_EQ(scaled.at(i, j) * gate.at(0, j), lambda * x1.at(i, j) * gate.at(0, j));
    }
  }
}

TEST(DpeOffsets, ClampBoundsHandValues) {
  // H = 16, r = 4: vertical bound 4. A raw prediction of 7.2 clamps to 4,
  // -10 clamps to -4, 1.5 passes through.
  Tensor x({16, 16, 1});
  DpeParams p(2, 2, 4.0, 1, 2);
  // zero weights; drive raw values via the bias.
  p.offsets.b[0] = 7.2;
  p.offsets.b[1] = 1.5;
  Tensor off = dpe_offsets(x, p);
  EXPECT_DOUBLE_EQ(off.data[0], 4.0);
  EXPECT_DOUBLE_EQ(off.data[1], 1.5);
  p.offsets.b[0] = -10.0;
  off = dpe_offsets(x, p);
  EXPECT_DOUBLE_EQ(off.data[0], -4.0);
}

TEST(DpeOffsets, AllOffsetsWithinBounds) {
  Rng rng(11);
  Tensor x({16, 32, 2});
  for (auto& v : x.data) v = rng.uniform(-4.0, 4.0);
  DpeParams p(2, 2, 4.0, 2, 3);
  for (auto& v : p.offsets.w.v) v = rng.uniform(-2.0, 2.0);
  const Tensor off = dpe_offsets(x, p);
  for (std::size_t pi = 0; pi < off.shape[0]; ++pi) {
    EXPECT_LE(std::abs(off.data[pi * 2]), 16.0 / 4.0);
    EXPECT_LE(std::abs(off.data[pi * 2 + 1]), 32.0 / 4.0);
  }
}

TEST(DpeEmbed, ZeroOffsetsEqualPlainPatchEmbedding) {
  Rng rng(12);
  Tensor x({8, 8, 2});
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  DpeParams p = init_dpe_params(2, 2, 4.0, 2, 4, rng);  // offset predictor stays zero
  const Tensor deformed = dpe_embed(x, p);
  const Tensor plain = patch_embed(x, 2, 2, p.embed);
  ASSERT_EQ(deformed.shape, plain.shape);
  for (std::size_t i = 0; i < plain.data.size(); ++i)
    EXPECT_NEAR(deformed.data[i], plain.data[i], 1e-12);
}

TEST(DpeEmbed, IntegerOffsetsShiftExactly) {
  // An integer offset samples the window translated by exactly that amount.
  Tensor x({6, 6, 1});
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c) x.at3(r, c, 0) = static_cast<double>(r * 10 + c);
  DpeParams p(2, 2, 2.0, 1, 1);
  p.offsets.b[0] = 1.0;  // shift down one row
  p.embed.w.at(0, 0) = 1.0;  // embedding picks the window's top-left sample
  DpeCache cache;
  (void)dpe_embed_forward(x, p, cache);
  // patch (0,0) anchored at (0,0) now samples (1,0) for its first element
  EXPECT_DOUBLE_EQ(cache.samples.at(0, 0), x.at3(1, 0, 0));
}

TEST(Backbone, StagesHalveSpatialDims) {
  Rng rng(13);
  Tensor x({32, 32, 3});
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  auto configs = default_stage_configs(4);
  const BackboneParams params = init_backbone(configs, 3, rng);
  const auto features = backbone_forward(x, params);
  ASSERT_EQ(features.size(), 4u);
  std::size_t expect = 16;
  for (std::size_t s = 0; s < 4; ++s) {
    EXPECT_EQ(features[s].shape[0], expect);
    EXPECT_EQ(features[s].shape[1], expect);
    EXPECT_EQ(features[s].shape[2], configs[s].embed_dim);
    expect /= 2;
  }
}

TEST(Backbone, AllPlainConfigRunsAndConfigErrorsCaught) {
  Rng rng(14);
  Tensor x({16, 16, 2});
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  auto configs = default_stage_configs(4);
  for (auto& c : configs) c.use_dpe = false;  // ablation baseline
  const BackboneParams params = init_backbone(configs, 2, rng);
  EXPECT_EQ(backbone_forward(x, params).size(), 4u);

  std::vector<StageConfig> three(3);
  EXPECT_THROW(init_backbone(three, 2, rng), ValidationError);
}

TEST(GradCheck, GapIsExactToRoundoff) {
  const auto report = grad_check(GradCheckBlock::kGap, 0, 1e-5);
  EXPECT_LT(report.max_rel_error, 1e-9);
}

TEST(GradCheck, PoolingAttentionMatchesFiniteDifferences) {
  for (const std::uint64_t seed : {0, 1, 2}) {
    const auto report = grad_check(GradCheckBlock::kPool, seed, 1e-5);
    EXPECT_LT(report.max_rel_error, 1e-6) << "seed " << seed;
  }
}

TEST(GradCheck, UaBlockMatchesFiniteDifferences) {
  for (const std::uint64_t seed : {0, 1, 2}) {
    const auto report = grad_check(GradCheckBlock::kUa, seed, 1e-5);
    EXPECT_LT(report.max_rel_error, 1e-5) << "seed " << seed;
  }
}

TEST(GradCheck, DpeMatchesFiniteDifferences) {
  for (const std::uint64_t seed : {0, 1, 2}) {
    const auto report = grad_check(GradCheckBlock::kDpe, seed, 1e-5);
    EXPECT_LT(report.max_rel_error, 1e-5) << "seed " << seed;
  }
}

TEST(GradCheck, InjectedFaultIsDetected) {
  for (const auto block : {GradCheckBlock::kGap, GradCheckBlock::kPool, GradCheckBlock::kUa,
                           GradCheckBlock::kDpe}) {
    const auto report = grad_check(block, 0, 1e-5, /*inject_fault=*/true);
    EXPECT_GT(report.max_rel_error, 1e-2) << to_string(block);
  }
}

TEST(GradCheck, RejectsOutOfRangeEps) {
  EXPECT_THROW(grad_check(GradCheckBlock::kGap, 0, 1e-8), ValidationError);
  EXPECT_THROW(grad_check(GradCheckBlock::kGap, 0, 1e-2), ValidationError);
}

}  // namespace
}  // namespace oass::nn
