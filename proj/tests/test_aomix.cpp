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

#include "oass/aomix.hpp"

#include <gtest/gtest.h>

#include "oass/classes.hpp"

namespace oass {
namespace {

BinaryMask rect_mask(int h, int w, int r0, int c0, int r1, int c1) {
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(h) * w, 0);
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) grid[static_cast<std::size_t>(r) * w + c] = 1;
  return BinaryMask::from_dense(grid, h, w);
}

detail::MaskBBox bbox_of(const BinaryMask& m) {
  return detail::tight_bbox(m.to_dense(), m.height(), m.width());
}

Image noise_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

TEST(AoMixConfig, DefaultsAndValidation) {
  const AoMixConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.scale_min, 0.1);
  EXPECT_DOUBLE_EQ(cfg.scale_max, 0.8);
  EXPECT_DOUBLE_EQ(cfg.class_fraction, 0.5);
  EXPECT_EQ(cfg.fill_value, (Rgb{0, 0, 0}));
  EXPECT_NO_THROW(cfg.validate());
  AoMixConfig bad = cfg;
  bad.scale_min = 0.9;  // above scale_max
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(RandomScale, DrawnScaleControlsBBoxHeight) {
  // 10-px-tall object in a 100-px image; forcing s = 0.5 via a degenerate
  // range must produce a 50-px-tall mask.
  const BinaryMask m = rect_mask(100, 100, 20, 30, 30, 40);
  AoMixConfig cfg;
  cfg.scale_min = cfg.scale_max = 0.5;
  Rng rng(1);
  const BinaryMask scaled = random_scale(m, cfg, rng);
  EXPECT_EQ(bbox_of(scaled).height(), 50);
  EXPECT_EQ(bbox_of(scaled).width(), 50);  // aspect preserved (square input)
}

TEST(RandomScale, IdentityScaleKeepsGeometry) {
  // scale equals the original relative height: content unchanged modulo
  // resampling, which is exact at factor 1.
  const BinaryMask m = rect_mask(40, 40, 5, 7, 15, 19);
  AoMixConfig cfg;
  cfg.scale_min = cfg.scale_max = 10.0 / 40.0;
  Rng rng(2);
  const BinaryMask scaled = random_scale(m, cfg, rng);
  const auto box = bbox_of(scaled);
  EXPECT_EQ(box.height(), 10);
  EXPECT_EQ(box.width(), 12);
  // content anchored at the origin with identical shape
  const BinaryMask expected = rect_mask(40, 40, 0, 0, 10, 12);
  EXPECT_EQ(scaled, expected);
}

TEST(RandomScale, DeterministicUnderFixedSeed) {
  const BinaryMask m = rect_mask(64, 64, 10, 10, 30, 26);
  const AoMixConfig cfg;
  Rng a(42), b(42);
  EXPECT_EQ(random_scale(m, cfg, a), random_scale(m, cfg, b));
}

TEST(RandomScale, EmptyMaskThrows) {
  const BinaryMask empty(8, 8, {64});
  const AoMixConfig cfg;
  Rng rng(0);
  EXPECT_THROW(random_scale(empty, cfg, rng), ValidationError);
}

TEST(RandomPad, ZeroSlackPlacesAtOrigin) {
  const BinaryMask full = rect_mask(6, 6, 0, 0, 6, 6);
  Rng rng(3);
  EXPECT_EQ(random_pad(full, rng), full);
}

TEST(RandomPad, PreservesPixelCountAndDeterminism) {
  const BinaryMask m = rect_mask(32, 32, 0, 0, 5, 9);
  Rng a(7), b(7), c(8);
  const BinaryMask pa = random_pad(m, a);
  EXPECT_EQ(pa.area(), m.area());
  EXPECT_EQ(pa, random_pad(m, b));
  // a different seed should generally move the content
  const BinaryMask pc = random_pad(m, c);
  EXPECT_EQ(pc.area(), m.area());
}

TEST(BuildRandomMask, SingleMaskEqualsItsPlacement) {
  const BinaryMask m = rect_mask(40, 40, 2, 2, 10, 12);
  const AoMixConfig cfg;
  Rng a(11), b(11);
  const BinaryMask placed = random_pad(random_scale(m, cfg, a), a);
  const BinaryMask built = build_random_mask({m}, cfg, b);
  EXPECT_EQ(built, placed);
}

TEST(BuildRandomMask, UnionIsBinaryEvenWithOverlaps) {
  const BinaryMask a = rect_mask(30, 30, 0, 0, 20, 20);
  const BinaryMask b = rect_mask(30, 30, 5, 5, 25, 25);
  AoMixConfig cfg;
  cfg.scale_min = cfg.scale_max = 0.7;  // big shapes, overlap very likely
  Rng rng(13);
  const BinaryMask built = build_random_mask({a, b}, cfg, rng);
  for (const auto v : built.to_dense()) EXPECT_LE(v, 1);
  EXPECT_THROW(build_random_mask({}, cfg, rng), ValidationError);
}

TEST(MaskSourceImage, OnlyIntersectionPixelsFilled) {
  const int h = 16, w = 16;
  const Image src = noise_image(h, w, 5);
  const BinaryMask thing = rect_mask(h, w, 4, 4, 10, 10);
  const BinaryMask random = rect_mask(h, w, 0, 0, 6, 16);
  AoMixConfig cfg;
  cfg.fill_value = {0, 0, 0};
  const Image out = mask_source_image(src, {thing}, random, cfg);
  const auto kill = mask_intersection(random, thing).to_dense();
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (kill[static_cast<std::size_t>(r) * w + c]) {
        EXPECT_EQ(out.at(r, c), (Rgb{0, 0, 0}));
      } else {
        EXPECT_EQ(out.at(r, c), src.at(r, c));
      }
    }
}

TEST(MaskSourceImage, DisjointMasksLeaveImageUntouched) {
  const Image src = noise_image(8, 8, 6);
  const BinaryMask thing = rect_mask(8, 8, 0, 0, 2, 2);
  const BinaryMask random = rect_mask(8, 8, 5, 5, 8, 8);
  const AoMixConfig cfg;
  EXPECT_EQ(mask_source_image(src, {thing}, random, cfg), src);
}

TEST(ClassMix, SingleClassTransplantsWholeImage) {
  const int h = 8, w = 8;
  const Image src = noise_image(h, w, 9);
  const Image tgt = noise_image(h, w, 10);
  const SemanticMap labels(h, w, 18, 0);  // uniform class 0
  const AoMixConfig cfg;
  Rng rng(1);
  const MixResult mix = class_mix(src, labels, tgt, cfg, rng);
  EXPECT_EQ(mix.mixed_image, src);
  EXPECT_EQ(static_cast<std::int64_t>(h) * w, mix.provenance.area());
  for (const auto v : mix.mixed_label.labels) EXPECT_EQ(v, 0);
}

TEST(ClassMix, HalfOfFourClassesSelected) {
  const int h = 8, w = 8;
  SemanticMap labels(h, w, 18, 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) labels.at(r, c) = static_cast<std::uint8_t>((r / 2) % 4);
  const Image src = noise_image(h, w, 11);
  const Image tgt = noise_image(h, w, 12);
  const AoMixConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const MixResult mix = class_mix(src, labels, tgt, cfg, rng);
    std::array<bool, 4> transplanted{};
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        if (mix.provenance.pixel(r, c)) transplanted[labels.at(r, c)] = true;
    int count = 0;
    for (const bool b : transplanted) count += b ? 1 : 0;
    EXPECT_EQ(count, 2);  // ceil(4/2)
  }
}

TEST(ClassMix, ProvenanceIsFunctionOfLabelsAndSelection) {
  const int h = 8, w = 8;
  SemanticMap labels(h, w, 18, 3);
  for (int c = 0; c < w; ++c) labels.at(0, c) = 7;
  const Image src = noise_image(h, w, 13);
  const Image tgt = noise_image(h, w, 14);
  const AoMixConfig cfg;
  Rng rng(21);
  const MixResult mix = class_mix(src, labels, tgt, cfg, rng);
  // Every pixel with the same label shares provenance.
  const bool row0 = mix.provenance.pixel(0, 0);
  const bool rest = mix.provenance.pixel(4, 4);
  for (int c = 0; c < w; ++c) EXPECT_EQ(mix.provenance.pixel(0, c), row0);
  for (int r = 1; r < h; ++r)
    for (int c = 0; c < w; ++c) EXPECT_EQ(mix.provenance.pixel(r, c), rest);
  // Exactly one of the two present classes is transplanted (ceil(2/2) = 1).
  EXPECT_NE(row0, rest);
  // No blending: each mixed pixel equals source or target.
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Rgb px = mix.mixed_image.at(r, c);
      EXPECT_TRUE(px == src.at(r, c) || px == tgt.at(r, c));
      if (mix.provenance.pixel(r, c)) {
        EXPECT_EQ(px, src.at(r, c));
        EXPECT_EQ(mix.mixed_label.at(r, c), labels.at(r, c));
      } else {
        EXPECT_EQ(px, tgt.at(r, c));
        EXPECT_EQ(mix.mixed_label.at(r, c), kIgnoreLabel);
      }
    }
}

TEST(RunAomix, SourceDiffersOnlyInsideKillRegion) {
  const int h = 48, w = 48;
  const Image src = noise_image(h, w, 31);
  const Image tgt = noise_image(h, w, 32);
  SemanticMap labels(h, w, 18, 0);
  const BinaryMask thing_a = rect_mask(h, w, 8, 8, 24, 20);
  const BinaryMask thing_b = rect_mask(h, w, 30, 28, 44, 44);
  for (const auto* m : {&thing_a, &thing_b}) {
    const auto dense = m->to_dense();
    for (std::size_t i = 0; i < dense.size(); ++i)
      if (dense[i]) labels.labels[i] = classes::kCar;
  }
  AoMixConfig cfg;
  cfg.seed = 77;

  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    Rng replay(seed);
    const MixResult mix =
        run_aomix(src, labels, {thing_a, thing_b}, {thing_a, thing_b}, tgt, cfg, rng);
    const BinaryMask random_mask = build_random_mask({thing_a, thing_b}, cfg, replay);
    const BinaryMask thing_region = mask_union_all(h, w, {thing_a, thing_b});
    const BinaryMask kill = mask_intersection(random_mask, thing_region);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        if (kill.pixel(r, c)) continue;
        ASSERT_EQ(mix.masked_source.at(r, c), src.at(r, c));
      }
  }
}

TEST(BuildRandomMask, DifferentSeedsDiverge) {
  // For a nondegenerate input the placements almost surely differ between
  // seeds; require most of 20 consecutive seed pairs to differ.
  const BinaryMask m = rect_mask(64, 64, 10, 10, 26, 22);
  const AoMixConfig cfg;
  int distinct = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed), b(seed + 1000);
    if (build_random_mask({m}, cfg, a) != build_random_mask({m}, cfg, b)) ++distinct;
  }
  EXPECT_GE(distinct, 18);
}

TEST(RunAomix, BitIdenticalUnderFixedSeed) {
  const int h = 32, w = 32;
  const Image src = noise_image(h, w, 41);
  const Image tgt = noise_image(h, w, 42);
  SemanticMap labels(h, w, 18, 0);
  const BinaryMask thing = rect_mask(h, w, 5, 5, 20, 18);
  {
    const auto dense = thing.to_dense();
    for (std::size_t i = 0; i < dense.size(); ++i)
      if (dense[i]) labels.labels[i] = classes::kCar;
  }
  const AoMixConfig cfg;
  Rng a(99), b(99);
  const MixResult ma = run_aomix(src, labels, {thing}, {thing}, tgt, cfg, a);
  const MixResult mb = run_aomix(src, labels, {thing}, {thing}, tgt, cfg, b);
  EXPECT_EQ(ma.masked_source, mb.masked_source);
  EXPECT_EQ(ma.mixed_image, mb.mixed_image);
  EXPECT_EQ(ma.mixed_label, mb.mixed_label);
  EXPECT_EQ(ma.provenance, mb.provenance);
}

}  // namespace
}  // namespace oass
