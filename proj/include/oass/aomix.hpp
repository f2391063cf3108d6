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
#include <cstdint>
#include <vector>

#include "oass/common.hpp"
#include "oass/core.hpp"
#include "oass/image.hpp"
#include "oass/rng.hpp"

namespace oass {

struct AoMixConfig {
  double scale_min = 0.1;        // random-scale range, relative to image height
  double scale_max = 0.8;
  Rgb fill_value = {0, 0, 0};    // written where the random mask hits thing regions
  std::uint64_t seed = 0;
  double class_fraction = 0.5;   // fraction of present classes to transplant

  void validate() const {
    detail::require(scale_min > 0.0 && scale_min <= scale_max, "require 0 < scale_min <= scale_max");
    detail::require(class_fraction > 0.0 && class_fraction <= 1.0,
                    "class_fraction must be in (0,1]");
  }
};

struct MixResult {
  Image masked_source;
  Image mixed_image;
  SemanticMap mixed_label;
  BinaryMask provenance;  // set where the mixed pixel came from the masked source
};

namespace detail {

struct MaskBBox {
  int r0 = 0, c0 = 0, r1 = 0, c1 = 0;  // half-open
  int height() const { return r1 - r0; }
  int width() const { return c1 - c0; }
};

inline MaskBBox tight_bbox(const std::vector<std::uint8_t>& dense, int h, int w) {
  MaskBBox box{h, w, 0, 0};
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (dense[static_cast<std::size_t>(r) * w + c]) {
        box.r0 = std::min(box.r0, r);
        box.c0 = std::min(box.c0, c);
        box.r1 = std::max(box.r1, r + 1);
        box.c1 = std::max(box.c1, c + 1);
      }
  return box;
}

}  // namespace detail

/// Rescales the mask's tight bounding-box content (nearest neighbour) so its
/// height becomes s * image_height for s drawn uniformly from the configured
/// range, preserving aspect ratio and clipping to the image bounds. The
/// scaled content is returned anchored at the top-left corner; placement is
/// the job of random_pad.
inline BinaryMask random_scale(const BinaryMask& m, const AoMixConfig& cfg, Rng& rng) {
  cfg.validate();
  detail::require(!m.empty(), "cannot scale an empty mask");
  const int h = m.height(), w = m.width();
  const auto dense = m.to_dense();
  const auto box = detail::tight_bbox(dense, h, w);

  const double s = rng.uniform(cfg.scale_min, cfg.scale_max);
  int new_h = static_cast<int>(std::lround(s * h));
  new_h = std::clamp(new_h, 1, h);
  const double factor = static_cast<double>(new_h) / box.height();
  int new_w = static_cast<int>(std::lround(factor * box.width()));
  new_w = std::clamp(new_w, 1, w);

  std::vector<std::uint8_t> out(static_cast<std::size_t>(h) * w, 0);
  for (int r = 0; r < new_h; ++r) {
    // nearest-neighbour source row/col at the output pixel centre
    const int sr = std::min(box.height() - 1,
                            static_cast<int>((r + 0.5) * box.height() / new_h));
    for (int c = 0; c < new_w; ++c) {
      const int sc = std::min(box.width() - 1,
                              static_cast<int>((c + 0.5) * box.width() / new_w));
      out[static_cast<std::size_t>(r) * w + c] =
          dense[static_cast<std::size_t>(box.r0 + sr) * w + (box.c0 + sc)];
    }
  }
  return BinaryMask::from_dense(out, h, w);
}

/// Moves the mask content to a uniformly random offset inside the image.
inline BinaryMask random_pad(const BinaryMask& m, Rng& rng) {
  const int h = m.height(), w = m.width();
  if (m.empty()) return m;  // nothing to place
  const auto dense = m.to_dense();
  const auto box = detail::tight_bbox(dense, h, w);
  detail::require(box.height() <= h && box.width() <= w, "mask content larger than image");

  const int off_r = static_cast<int>(rng.uniform_int(0, h - box.height()));
  const int off_c = static_cast<int>(rng.uniform_int(0, w - box.width()));
  std::vector<std::uint8_t> out(dense.size(), 0);
  for (int r = 0; r < box.height(); ++r)
    for (int c = 0; c < box.width(); ++c)
      out[static_cast<std::size_t>(off_r + r) * w + (off_c + c)] =
          dense[static_cast<std::size_t>(box.r0 + r) * w + (box.c0 + c)];
  return BinaryMask::from_dense(out, h, w);
}

/// Builds the random occluder mask: the indicator of the summed, scaled and
/// padded full-region masks of one sampled image.
inline BinaryMask build_random_mask(const std::vector<BinaryMask>& masks, const AoMixConfig& cfg,
                                    Rng& rng) {
  detail::require(!masks.empty(), "mask sequence must not be empty");
  const int h = masks[0].height(), w = masks[0].width();
  std::vector<BinaryMask> placed;
  placed.reserve(masks.size());
  for (const auto& m : masks) {
    detail::require(m.height() == h && m.width() == w, "mask dimension mismatch");
    placed.push_back(random_pad(random_scale(m, cfg, rng), rng));
  }
  return mask_union_all(h, w, placed);
}

/// Fills the source image with the configured value where the random mask
/// intersects the image's own thing region (the union of its full-region
/// masks); all other pixels stay untouched.
inline Image mask_source_image(const Image& source, const std::vector<BinaryMask>& source_amodal_masks,
                               const BinaryMask& random_mask, const AoMixConfig& cfg) {
  detail::require(random_mask.height() == source.height && random_mask.width() == source.width,
                  "random mask dimension mismatch");
  const BinaryMask thing_region =
      mask_union_all(source.height, source.width, source_amodal_masks);
  const BinaryMask kill = mask_intersection(random_mask, thing_region);
  Image out = source;
  const int h = source.height;
  for (const auto& iv : kill.intervals()) {
    for (std::int64_t idx = iv.begin; idx < iv.end; ++idx) {
      const int r = static_cast<int>(idx % h);
      const int c = static_cast<int>(idx / h);
      out.set(r, c, cfg.fill_value);
    }
  }
  return out;
}

/// Class-mix: transplants ceil(k * class_fraction) of the k classes present
/// in the source label map from the masked source onto the target image. The
/// mixed label keeps source labels on transplanted pixels and is ignore
/// elsewhere (the target carries no labels).
inline MixResult class_mix(const Image& masked_source, const SemanticMap& source_labels,
                           const Image& target, const AoMixConfig& cfg, Rng& rng) {
  cfg.validate();
  detail::require(masked_source.height == source_labels.height &&
                      masked_source.width == source_labels.width,
                  "masked source / label dimension mismatch");
  detail::require(masked_source.height == target.height && masked_source.width == target.width,
                  "source / target dimension mismatch");

  std::vector<int> present;
  {
    std::array<bool, 256> seen{};
    for (const auto v : source_labels.labels) seen[v] = true;
    for (int cls = 0; cls < source_labels.num_classes; ++cls)
      if (seen[static_cast<std::size_t>(cls)]) present.push_back(cls);
  }
  const std::size_t take = static_cast<std::size_t>(
      std::ceil(static_cast<double>(present.size()) * cfg.class_fraction));
  std::array<bool, 256> selected{};
  if (!present.empty()) {
    for (const auto i : rng.sample_without_replacement(present.size(), take))
      selected[static_cast<std::size_t>(present[i])] = true;
  }

  const int h = masked_source.height, w = masked_source.width;
  MixResult out;
  out.masked_source = masked_source;
  out.mixed_image = target;
  out.mixed_label = SemanticMap(h, w, source_labels.num_classes, kIgnoreLabel);
  std::vector<std::uint8_t> prov(static_cast<std::size_t>(h) * w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::uint8_t label = source_labels.at(r, c);
      if (label == kIgnoreLabel || !selected[label]) continue;
      out.mixed_image.set(r, c, masked_source.at(r, c));
      out.mixed_label.at(r, c) = label;
      prov[static_cast<std::size_t>(r) * w + c] = 1;
    }
  }
  out.provenance = BinaryMask::from_dense(prov, h, w);
  return out;
}

/// Full augmentation pipeline: random occluder mask from a sampled batch
/// image's full-region masks, source masking, then class-mix onto the target.
inline MixResult run_aomix(const Image& source, const SemanticMap& source_labels,
                           const std::vector<BinaryMask>& source_amodal_masks,
                           const std::vector<BinaryMask>& sampled_amodal_masks,
                           const Image& target, const AoMixConfig& cfg, Rng& rng) {
  const BinaryMask random_mask = build_random_mask(sampled_amodal_masks, cfg, rng);
  const Image masked = mask_source_image(source, source_amodal_masks, random_mask, cfg);
  return class_mix(masked, source_labels, target, cfg, rng);
}

}  // namespace oass
