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
#include <string>
#include <utility>
#include <vector>

#include "oass/common.hpp"

namespace oass {

inline constexpr std::uint8_t kIgnoreLabel = 255;
inline constexpr std::uint32_t kVoidId = 0;
inline constexpr int kInstancesPerClass = 1000;

/// Half-open interval [begin, end) of set pixels in column-major linear
/// order. Column-major linear index of pixel (row, col) is col*height + row.
struct PixelInterval {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  friend bool operator==(const PixelInterval&, const PixelInterval&) = default;
};

/// A single object region over an H x W grid, stored as run lengths in
/// column-major pixel order. Runs alternate between zero-counts and
/// one-counts, starting with a zero-count; canonical form forbids zero-length
/// runs anywhere except the leading zero-count.
class BinaryMask {
 public:
  BinaryMask() = default;

  BinaryMask(int height, int width, std::vector<std::uint32_t> runs)
      : height_(height), width_(width), runs_(std::move(runs)) {
    validate();
  }

  /// Encodes a row-major dense 0/1 grid.
  static BinaryMask from_dense(const std::vector<std::uint8_t>& grid, int height, int width) {
    detail::require(height > 0 && width > 0, "mask dimensions must be positive");
    detail::require(grid.size() == static_cast<std::size_t>(height) * static_cast<std::size_t>(width),
                    "dense grid size does not match dimensions");
    std::vector<std::uint32_t> runs;
    std::uint8_t current = 0;
    std::uint32_t count = 0;
    for (int c = 0; c < width; ++c) {
      for (int r = 0; r < height; ++r) {
        const std::uint8_t v = grid[static_cast<std::size_t>(r) * width + c] ? 1 : 0;
        if (v == current) {
          ++count;
        } else {
          runs.push_back(count);
          current = v;
          count = 1;
        }
      }
    }
    runs.push_back(count);
    return BinaryMask(height, width, std::move(runs));
  }

  /// Builds a mask of the given dimensions from sorted, disjoint, non-empty
  /// column-major pixel intervals.
  static BinaryMask from_intervals(int height, int width, const std::vector<PixelInterval>& intervals) {
    detail::require(height > 0 && width > 0, "mask dimensions must be positive");
    const std::int64_t total = static_cast<std::int64_t>(height) * width;
    std::vector<std::uint32_t> runs;
    std::int64_t cursor = 0;
    for (const auto& iv : intervals) {
      detail::require(iv.begin >= cursor && iv.begin < iv.end && iv.end <= total,
                      "intervals must be sorted, disjoint, non-empty, in range");
      if (runs.empty()) {
        runs.push_back(static_cast<std::uint32_t>(iv.begin));
      } else if (iv.begin == cursor) {
        // adjacent one-intervals merge
        runs.back() += static_cast<std::uint32_t>(iv.end - iv.begin);
        cursor = iv.end;
        continue;
      } else {
        runs.push_back(static_cast<std::uint32_t>(iv.begin - cursor));
      }
      runs.push_back(static_cast<std::uint32_t>(iv.end - iv.begin));
      cursor = iv.end;
    }
    if (cursor < total) {
      if (runs.empty()) runs.push_back(static_cast<std::uint32_t>(total));
      else runs.push_back(static_cast<std::uint32_t>(total - cursor));
    }
    if (runs.empty()) runs.push_back(static_cast<std::uint32_t>(total));
    return BinaryMask(height, width, std::move(runs));
  }

  /// Decodes to a row-major dense 0/1 grid.
  std::vector<std::uint8_t> to_dense() const {
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(height_) * width_, 0);
    for (const auto& iv : intervals()) {
      for (std::int64_t idx = iv.begin; idx < iv.end; ++idx) {
        const std::int64_t r = idx % height_;
        const std::int64_t c = idx / height_;
        grid[static_cast<std::size_t>(r) * width_ + c] = 1;
      }
    }
    return grid;
  }

  /// The set pixels as sorted disjoint column-major intervals.
  std::vector<PixelInterval> intervals() const {
    std::vector<PixelInterval> out;
    std::int64_t pos = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      const std::int64_t len = runs_[i];
      if (i % 2 == 1 && len > 0) out.push_back({pos, pos + len});
      pos += len;
    }
    return out;
  }

  int height() const { return height_; }
  int width() const { return width_; }
  const std::vector<std::uint32_t>& runs() const { return runs_; }

  std::int64_t area() const {
    std::int64_t total = 0;
    for (std::size_t i = 1; i < runs_.size(); i += 2) total += runs_[i];
    return total;
  }

  bool empty() const { return area() == 0; }

  bool pixel(int row, int col) const {
    detail::require(row >= 0 && row < height_ && col >= 0 && col < width_,
                    "pixel coordinates out of range");
    const std::int64_t idx = static_cast<std::int64_t>(col) * height_ + row;
    std::int64_t pos = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      pos += runs_[i];
      if (idx < pos) return i % 2 == 1;
    }
    return false;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  void validate() const {
    detail::require(height_ > 0 && width_ > 0, "mask dimensions must be positive");
    detail::require(!runs_.empty(), "run list must not be empty");
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      if (i > 0) detail::require(runs_[i] > 0, "interior run of length zero (non-canonical RLE)");
      sum += runs_[i];
    }
    detail::require(sum == static_cast<std::int64_t>(height_) * width_,
                    "run lengths must sum to height*width");
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint32_t> runs_;
};

inline void require_same_dims(const BinaryMask& a, const BinaryMask& b) {
  detail::require(a.height() == b.height() && a.width() == b.width(),
                  "mask dimension mismatch");
}

/// |a ∩ b| by walking the two run lists in lockstep.
inline std::int64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  const auto& ra = a.runs();
  const auto& rb = b.runs();
  std::size_t ia = 0, ib = 0;
  std::int64_t end_a = ra[0], end_b = rb[0];  // end of current run
  std::int64_t pos = 0, inter = 0;
  const std::int64_t total = static_cast<std::int64_t>(a.height()) * a.width();
  while (pos < total) {
    const std::int64_t step = std::min(end_a, end_b) - pos;
    if (ia % 2 == 1 && ib % 2 == 1) inter += step;
    pos += step;
    while (ia + 1 < ra.size() && pos >= end_a) end_a += ra[++ia];
    while (ib + 1 < rb.size() && pos >= end_b) end_b += rb[++ib];
    if (pos >= end_a && pos >= end_b) break;
  }
  return inter;
}

inline std::int64_t union_area(const BinaryMask& a, const BinaryMask& b) {
  return a.area() + b.area() - intersection_area(a, b);
}

/// Intersection over union; 0 when both masks are empty.
inline double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  const std::int64_t inter = intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// True iff every pixel of `inner` is set in `outer`.
inline bool mask_contains(const BinaryMask& outer, const BinaryMask& inner) {
  return intersection_area(outer, inner) == inner.area();
}

namespace detail {

inline std::vector<PixelInterval> merge_intervals(std::vector<PixelInterval> ivs) {
  std::sort(ivs.begin(), ivs.end(),
            [](const PixelInterval& x, const PixelInterval& y) { return x.begin < y.begin; });
  std::vector<PixelInterval> out;
  for (const auto& iv : ivs) {
    if (!out.empty() && iv.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, iv.end);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace detail

inline BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  auto ivs = a.intervals();
  const auto ivb = b.intervals();
  ivs.insert(ivs.end(), ivb.begin(), ivb.end());
  return BinaryMask::from_intervals(a.height(), a.width(), detail::merge_intervals(std::move(ivs)));
}

/// Union of many same-sized masks; empty list yields the all-zero mask.
inline BinaryMask mask_union_all(int height, int width, const std::vector<BinaryMask>& masks) {
  std::vector<PixelInterval> ivs;
  for (const auto& m : masks) {
    detail::require(m.height() == height && m.width() == width, "mask dimension mismatch");
    const auto mi = m.intervals();
    ivs.insert(ivs.end(), mi.begin(), mi.end());
  }
  return BinaryMask::from_intervals(height, width, detail::merge_intervals(std::move(ivs)));
}

inline BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  const auto ia = a.intervals();
  const auto ib = b.intervals();
  std::vector<PixelInterval> out;
  std::size_t i = 0, j = 0;
  while (i < ia.size() && j < ib.size()) {
    const std::int64_t lo = std::max(ia[i].begin, ib[j].begin);
    const std::int64_t hi = std::min(ia[i].end, ib[j].end);
    if (lo < hi) out.push_back({lo, hi});
    if (ia[i].end < ib[j].end) ++i;
    else ++j;
  }
  return BinaryMask::from_intervals(a.height(), a.width(), out);
}

/// Pixels of `a` not set in `b`.
inline BinaryMask mask_difference(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  const auto ia = a.intervals();
  const auto ib = b.intervals();
  std::vector<PixelInterval> out;
  std::size_t j = 0;
  for (const auto& iv : ia) {
    std::int64_t cur = iv.begin;
    while (j < ib.size() && ib[j].end <= cur) ++j;
    std::size_t k = j;
    while (cur < iv.end) {
      if (k >= ib.size() || ib[k].begin >= iv.end) {
        out.push_back({cur, iv.end});
        break;
      }
      if (ib[k].begin > cur) out.push_back({cur, ib[k].begin});
      cur = std::max(cur, ib[k].end);
      ++k;
    }
  }
  return BinaryMask::from_intervals(a.height(), a.width(), out);
}

/// FNV-1a over dimensions and run lengths; stable across platforms.
inline std::uint64_t mask_hash(const BinaryMask& m) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint64_t v) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(m.height()));
  mix(static_cast<std::uint64_t>(m.width()));
  for (const auto run : m.runs()) mix(run);
  return h;
}

/// H x W grid of class ids; 255 marks ignored pixels. Row-major storage.
struct SemanticMap {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<std::uint8_t> labels;

  SemanticMap() = default;
  SemanticMap(int h, int w, int classes, std::uint8_t fill = kIgnoreLabel)
      : height(h), width(w), num_classes(classes),
        labels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {
    detail::require(h > 0 && w > 0, "semantic map dimensions must be positive");
    detail::require(classes > 0 && classes < kIgnoreLabel, "num_classes must be in [1, 255)");
  }

  std::uint8_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }

  void validate() const {
    detail::require(height > 0 && width > 0, "semantic map dimensions must be positive");
    detail::require(labels.size() == static_cast<std::size_t>(height) * width,
                    "label buffer size mismatch");
    for (const auto v : labels) {
      detail::require(v == kIgnoreLabel || v < num_classes,
                      "label " + std::to_string(int(v)) + " outside [0, num_classes)");
    }
  }

  friend bool operator==(const SemanticMap&, const SemanticMap&) = default;
};

/// segment_id = class_id * 1000 + instance_index.
inline std::uint32_t encode_segment_id(int class_id, int instance_index) {
  detail::require(class_id >= 0, "class id must be non-negative");
  detail::require(instance_index >= 0 && instance_index < kInstancesPerClass,
                  "instance index must be in [0, 1000)");
  return static_cast<std::uint32_t>(class_id) * kInstancesPerClass +
         static_cast<std::uint32_t>(instance_index);
}

inline std::pair<int, int> decode_segment_id(std::uint32_t segment_id) {
  return {static_cast<int>(segment_id / kInstancesPerClass),
          static_cast<int>(segment_id % kInstancesPerClass)};
}

struct SegmentInfo {
  std::uint32_t id = 0;
  int class_id = 0;
  bool is_thing = false;
  friend bool operator==(const SegmentInfo&, const SegmentInfo&) = default;
};

/// H x W grid of segment ids (0 = void) plus the segment table. Row-major.
struct PanopticMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> ids;
  std::vector<SegmentInfo> segments;

  PanopticMap() = default;
  PanopticMap(int h, int w)
      : height(h), width(w), ids(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), kVoidId) {
    detail::require(h > 0 && w > 0, "panoptic map dimensions must be positive");
  }

  std::uint32_t at(int r, int c) const { return ids[static_cast<std::size_t>(r) * width + c]; }
  std::uint32_t& at(int r, int c) { return ids[static_cast<std::size_t>(r) * width + c]; }

  void validate() const {
    detail::require(height > 0 && width > 0, "panoptic map dimensions must be positive");
    detail::require(ids.size() == static_cast<std::size_t>(height) * width, "id buffer size mismatch");
    std::vector<std::uint32_t> table;
    for (const auto& seg : segments) {
      detail::require(seg.id != kVoidId, "segment id 0 is reserved for void");
      const auto [cls, idx] = decode_segment_id(seg.id);
      detail::require(cls == seg.class_id,
                      "segment id " + std::to_string(seg.id) + " inconsistent with class " +
                          std::to_string(seg.class_id));
      (void)idx;
      table.push_back(seg.id);
    }
    std::sort(table.begin(), table.end());
    detail::require(std::adjacent_find(table.begin(), table.end()) == table.end(),
                    "duplicate segment id in table");
    std::uint32_t run_id = 0;
    bool run_ok = false;
    bool first = true;
    for (const auto id : ids) {
      if (first || id != run_id) {
        first = false;
        run_id = id;
        run_ok = id == kVoidId || std::binary_search(table.begin(), table.end(), id);
      }
      detail::require(run_ok, "pixel id " + std::to_string(id) + " missing from segment table");
    }
  }

  friend bool operator==(const PanopticMap&, const PanopticMap&) = default;
};

/// One detected or annotated object. The visible mask covers only directly
/// observable pixels; the amodal mask covers the full object region and must
/// contain the visible mask.
struct InstanceAnnotation {
  int category = 0;
  double score = 1.0;
  BinaryMask visible;
  BinaryMask amodal;

  InstanceAnnotation() = default;
  InstanceAnnotation(int cat, double s, BinaryMask vis, BinaryMask amo)
      : category(cat), score(s), visible(std::move(vis)), amodal(std::move(amo)) {
    validate();
  }

  void validate() const {
    detail::require(score >= 0.0 && score <= 1.0, "score must be in [0,1]");
    require_same_dims(visible, amodal);
    detail::require(mask_contains(amodal, visible),
                    "visible mask must be contained in amodal mask");
  }
};

/// A segment of an amodal panoptic result: the id it holds in the pixel map
/// plus its full-region mask, which may overlap other segments' regions.
struct AmodalSegment {
  std::uint32_t id = 0;
  int class_id = 0;
  double score = 1.0;
  BinaryMask amodal;
};

/// Amodal panoptic output: a regular panoptic pixel map (built from visible
/// regions) plus the ordered list of thing segments with full-region masks.
struct AmodalPanopticMap {
  PanopticMap panoptic;
  std::vector<AmodalSegment> segments;
};

}  // namespace oass
