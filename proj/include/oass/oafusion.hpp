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
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "oass/classes.hpp"
#include "oass/common.hpp"
#include "oass/core.hpp"

namespace oass {

/// Raw outputs of the three prediction branches for one image. Instances are
/// class-agnostic at this point; classes get assigned by the fusion votes.
struct BranchOutputs {
  SemanticMap semantic;
  std::vector<InstanceAnnotation> instances;         // visible-mask detections
  std::vector<InstanceAnnotation> amodal_instances;  // full-region detections
};

/// All five fused outputs for one image.
struct OassOutputs {
  SemanticMap semantic;
  std::vector<InstanceAnnotation> instances;
  std::vector<InstanceAnnotation> amodal_instances;
  PanopticMap panoptic;
  AmodalPanopticMap amodal_panoptic;
};

namespace detail {

inline std::optional<int> majority_thing_class(const BinaryMask& region,
                                               const SemanticMap& semantic,
                                               const ClassUniverse& universe) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(universe.num_classes()), 0);
  const int h = semantic.height;
  for (const auto& iv : region.intervals()) {
    for (std::int64_t idx = iv.begin; idx < iv.end; ++idx) {
      const int r = static_cast<int>(idx % h);
      const int c = static_cast<int>(idx / h);
      const std::uint8_t label = semantic.at(r, c);
      if (label == kIgnoreLabel) continue;
      detail::require(label < universe.num_classes(), "semantic label outside universe");
      if (universe.is_thing(label)) ++counts[label];
    }
  }
  int best = -1;
  std::int64_t best_count = 0;
  for (int cls = 0; cls < universe.num_classes(); ++cls) {
    if (counts[static_cast<std::size_t>(cls)] > best_count) {  // ties keep lowest id
      best = cls;
      best_count = counts[static_cast<std::size_t>(cls)];
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

/// 8-neighbourhood dilation ring: pixels adjacent to the mask but outside it.
inline BinaryMask dilation_ring(const BinaryMask& m) {
  const int h = m.height(), w = m.width();
  const auto dense = m.to_dense();
  std::vector<std::uint8_t> ring(dense.size(), 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (dense[static_cast<std::size_t>(r) * w + c]) continue;
      bool adjacent = false;
      for (int dr = -1; dr <= 1 && !adjacent; ++dr)
        for (int dc = -1; dc <= 1 && !adjacent; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          adjacent = dense[static_cast<std::size_t>(rr) * w + cc] != 0;
        }
      if (adjacent) ring[static_cast<std::size_t>(r) * w + c] = 1;
    }
  }
  return BinaryMask::from_dense(ring, h, w);
}

}  // namespace detail

/// Majority vote of thing-class semantic labels under the mask; ties break
/// toward the lowest class id. A mask covering no thing pixels falls back to
/// a vote over its 1-px dilation ring; if that also finds no thing pixels the
/// instance cannot be classified and nullopt is returned (caller drops it).
inline std::optional<int> vote_instance_class(const BinaryMask& mask, const SemanticMap& semantic,
                                              const ClassUniverse& universe = ClassUniverse::street18()) {
  detail::require(!mask.empty(), "cannot vote on an empty mask");
  detail::require(mask.height() == semantic.height && mask.width() == semantic.width,
                  "mask and semantic map dimension mismatch");
  if (auto cls = detail::majority_thing_class(mask, semantic, universe)) return cls;
  return detail::majority_thing_class(detail::dilation_ring(mask), semantic, universe);
}

/// Occlusion-aware vote for a full-region mask: only the part of the target
/// not overlapped by any other full-region mask votes, so an occluder's
/// labels cannot hijack the class. If the non-overlap region is empty or
/// contains no thing pixels, the vote falls back to the whole target mask.
inline std::optional<int> vote_amodal_class(const BinaryMask& target,
                                            const std::vector<BinaryMask>& others,
                                            const SemanticMap& semantic,
                                            const ClassUniverse& universe = ClassUniverse::street18()) {
  detail::require(!target.empty(), "cannot vote on an empty mask");
  detail::require(target.height() == semantic.height && target.width() == semantic.width,
                  "mask and semantic map dimension mismatch");
  const BinaryMask overlap = mask_union_all(target.height(), target.width(), others);
  const BinaryMask exclusive = mask_difference(target, overlap);
  if (!exclusive.empty()) {
    if (auto cls = detail::majority_thing_class(exclusive, semantic, universe)) return cls;
  }
  return vote_instance_class(target, semantic, universe);
}

namespace detail {

/// Canonical paste order: descending score, then mask/category hash, so any
/// permutation of the input yields the same fusion result.
inline std::vector<std::size_t> paste_order(const std::vector<InstanceAnnotation>& instances) {
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::uint64_t h = mask_hash(instances[i].visible);
    h = h * 1099511628211ull ^ mask_hash(instances[i].amodal);
    h = h * 1099511628211ull ^ static_cast<std::uint64_t>(instances[i].category);
    keyed[i] = {h, i};
  }
  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (instances[a].score != instances[b].score) return instances[a].score > instances[b].score;
    return keyed[a].first < keyed[b].first;
  });
  return order;
}

struct PastedCanvas {
  PanopticMap map;
  std::vector<std::size_t> kept;  // indices into the input list, paste order
  std::vector<std::uint32_t> kept_ids;
};

/// Pastes visible masks in canonical order, each claiming only not-yet-
/// claimed pixels; instances left without any pixel are dropped. Unclaimed
/// pixels fall back to stuff labels; thing-class and ignore pixels without an
/// instance become void.
inline PastedCanvas paste_instances(const SemanticMap& semantic,
                                    const std::vector<InstanceAnnotation>& instances,
                                    const ClassUniverse& universe) {
  semantic.validate();
  const int h = semantic.height, w = semantic.width;
  PastedCanvas out;
  out.map = PanopticMap(h, w);
  constexpr std::uint32_t kUnclaimed = 0xffffffffu;
  std::vector<std::uint32_t> canvas(static_cast<std::size_t>(h) * w, kUnclaimed);

  const auto order = paste_order(instances);
  std::vector<std::int64_t> claimed_area(instances.size(), 0);
  std::vector<std::vector<std::size_t>> claimed_pixels(instances.size());
  for (const std::size_t idx : order) {
    const auto& inst = instances[idx];
    detail::require(inst.visible.height() == h && inst.visible.width() == w,
                    "instance mask dimension mismatch");
    for (const auto& iv : inst.visible.intervals()) {
      for (std::int64_t lin = iv.begin; lin < iv.end; ++lin) {
        const std::size_t px = static_cast<std::size_t>(lin % h) * w + static_cast<std::size_t>(lin / h);
        if (canvas[px] != kUnclaimed) continue;
        canvas[px] = static_cast<std::uint32_t>(idx);
        claimed_pixels[idx].push_back(px);
        ++claimed_area[idx];
      }
    }
  }

  std::vector<int> next_instance(static_cast<std::size_t>(universe.num_classes()), 1);
  std::vector<std::uint32_t> final_id(instances.size(), kVoidId);
  for (const std::size_t idx : order) {
    if (claimed_area[idx] == 0) continue;  // fully covered, dropped
    const int cls = instances[idx].category;
    detail::require(cls >= 0 && cls < universe.num_classes(), "instance class outside universe");
    detail::require(universe.is_thing(cls), "instance carries a stuff class");
    const std::uint32_t id = encode_segment_id(cls, next_instance[static_cast<std::size_t>(cls)]++);
    final_id[idx] = id;
    out.map.segments.push_back({id, cls, true});
    out.kept.push_back(idx);
    out.kept_ids.push_back(id);
    for (const std::size_t px : claimed_pixels[idx]) out.map.ids[px] = id;
  }

  // Stuff fill for unclaimed pixels.
  std::vector<std::uint32_t> stuff_id(static_cast<std::size_t>(universe.num_classes()), kVoidId);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t px = static_cast<std::size_t>(r) * w + c;
      if (canvas[px] != kUnclaimed) continue;  // dropped instances own no pixels
      const std::uint8_t label = semantic.at(r, c);
      if (label == kIgnoreLabel || universe.is_thing(label)) continue;  // void
      if (stuff_id[label] == kVoidId) {
        stuff_id[label] = encode_segment_id(label, 1);
        out.map.segments.push_back({stuff_id[label], label, false});
      }
      out.map.ids[px] = stuff_id[label];
    }
  }
  return out;
}

}  // namespace detail

/// Fuses class-labeled instances with the semantic map into a panoptic map.
inline PanopticMap fuse_panoptic(const SemanticMap& semantic,
                                 const std::vector<InstanceAnnotation>& instances,
                                 const ClassUniverse& universe = ClassUniverse::street18()) {
  return detail::paste_instances(semantic, instances, universe).map;
}

/// As fuse_panoptic, but the surviving thing segments additionally carry
/// their full-region masks (which may overlap), in paste order.
inline AmodalPanopticMap fuse_amodal_panoptic(const SemanticMap& semantic,
                                              const std::vector<InstanceAnnotation>& instances,
                                              const ClassUniverse& universe = ClassUniverse::street18()) {
  auto canvas = detail::paste_instances(semantic, instances, universe);
  AmodalPanopticMap out;
  out.panoptic = std::move(canvas.map);
  for (std::size_t k = 0; k < canvas.kept.size(); ++k) {
    const auto& inst = instances[canvas.kept[k]];
    out.segments.push_back({canvas.kept_ids[k], inst.category, inst.score, inst.amodal});
  }
  return out;
}

/// Runs the full fusion: score filtering, the two class votes, and both
/// panoptic constructions, yielding all five outputs.
inline OassOutputs run_oafusion(const BranchOutputs& branches, double score_threshold = 0.95,
                                const ClassUniverse& universe = ClassUniverse::street18()) {
  detail::require(score_threshold >= 0.0 && score_threshold <= 1.0,
                  "score threshold must be in [0,1]");
  branches.semantic.validate();

  OassOutputs out;
  out.semantic = branches.semantic;

  for (const auto& inst : branches.instances) {
    if (inst.score < score_threshold) continue;
    detail::require(inst.visible.height() == branches.semantic.height &&
                        inst.visible.width() == branches.semantic.width,
                    "instance mask dimension mismatch");
    if (inst.visible.empty()) continue;
    const auto cls = vote_instance_class(inst.visible, branches.semantic, universe);
    if (!cls) continue;
    InstanceAnnotation labeled = inst;
    labeled.category = *cls;
    out.instances.push_back(std::move(labeled));
  }

  std::vector<InstanceAnnotation> amodal_kept;
  for (const auto& inst : branches.amodal_instances) {
    if (inst.score < score_threshold) continue;
    detail::require(inst.amodal.height() == branches.semantic.height &&
                        inst.amodal.width() == branches.semantic.width,
                    "amodal mask dimension mismatch");
    if (inst.amodal.empty()) continue;
    amodal_kept.push_back(inst);
  }
  for (std::size_t i = 0; i < amodal_kept.size(); ++i) {
    std::vector<BinaryMask> others;
    others.reserve(amodal_kept.size() - 1);
    for (std::size_t j = 0; j < amodal_kept.size(); ++j)
      if (j != i) others.push_back(amodal_kept[j].amodal);
    const auto cls = vote_amodal_class(amodal_kept[i].amodal, others, branches.semantic, universe);
    if (!cls) continue;
    InstanceAnnotation labeled = amodal_kept[i];
    labeled.category = *cls;
    out.amodal_instances.push_back(std::move(labeled));
  }

  out.panoptic = fuse_panoptic(out.semantic, out.instances, universe);
  out.amodal_panoptic = fuse_amodal_panoptic(out.semantic, out.amodal_instances, universe);
  return out;
}

}  // namespace oass
