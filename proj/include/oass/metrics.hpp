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
#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "oass/classes.hpp"
#include "oass/common.hpp"
#include "oass/core.hpp"

namespace oass {

/// Per-class metric values plus their arithmetic mean. An empty per_class map
/// means no class qualified for evaluation; the mean is reported as 0 then.
struct ClassReport {
  std::map<int, double> per_class;
  double mean = 0.0;

  bool no_classes_evaluated() const { return per_class.empty(); }

  static ClassReport from_values(std::map<int, double> values) {
    ClassReport report;
    report.per_class = std::move(values);
    if (!report.per_class.empty()) {
      double sum = 0.0;
      for (const auto& [cls, v] : report.per_class) sum += v;
      report.mean = sum / static_cast<double>(report.per_class.size());
    }
    return report;
  }
};

enum class MaskSelector { kVisible, kAmodal };

inline const BinaryMask& select_mask(const InstanceAnnotation& a, MaskSelector sel) {
  return sel == MaskSelector::kVisible ? a.visible : a.amodal;
}

// ---------------------------------------------------------------------------
// Semantic IoU
// ---------------------------------------------------------------------------

/// Accumulates a gt-by-pred pixel confusion matrix across images. Pixels
/// whose gt label is the ignore value contribute nothing, so stray
/// predictions over ignored regions are neither intersection nor union.
class IouAccumulator {
 public:
  explicit IouAccumulator(int num_classes)
      : num_classes_(num_classes),
        confusion_(static_cast<std::size_t>(num_classes) * (num_classes + 1), 0) {
    detail::require(num_classes > 0, "num_classes must be positive");
  }

  void add(const SemanticMap& pred, const SemanticMap& gt) {
    detail::require(pred.height == gt.height && pred.width == gt.width,
                    "semantic map dimension mismatch");
    detail::require(pred.num_classes == num_classes_ && gt.num_classes == num_classes_,
                    "num_classes mismatch");
    const std::size_t n = gt.labels.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t g = gt.labels[i];
      if (g == kIgnoreLabel) continue;
      detail::require(g < num_classes_, "gt label outside [0, num_classes)");
      const std::uint8_t p = pred.labels[i];
      // A pred ignore pixel predicts nothing; bucket it past the last class.
      std::size_t pcol = num_classes_;
      if (p != kIgnoreLabel) {
        detail::require(p < num_classes_, "pred label outside [0, num_classes)");
        pcol = p;
      }
      ++confusion_[static_cast<std::size_t>(g) * (num_classes_ + 1) + pcol];
    }
  }

  void merge(const IouAccumulator& other) {
    detail::require(other.num_classes_ == num_classes_, "num_classes mismatch");
    for (std::size_t i = 0; i < confusion_.size(); ++i) confusion_[i] += other.confusion_[i];
  }

  ClassReport report() const {
    std::map<int, double> values;
    for (int c = 0; c < num_classes_; ++c) {
      const std::int64_t tp = confusion_[static_cast<std::size_t>(c) * (num_classes_ + 1) + c];
      std::int64_t fn = 0, fp = 0;
      for (int p = 0; p <= num_classes_; ++p)
        fn += confusion_[static_cast<std::size_t>(c) * (num_classes_ + 1) + p];
      fn -= tp;
      for (int g = 0; g < num_classes_; ++g)
        fp += confusion_[static_cast<std::size_t>(g) * (num_classes_ + 1) + c];
      fp -= tp;
      const std::int64_t denom = tp + fp + fn;
      if (denom > 0) values[c] = static_cast<double>(tp) / static_cast<double>(denom);
    }
    return ClassReport::from_values(std::move(values));
  }

 private:
  int num_classes_;
  std::vector<std::int64_t> confusion_;  // (num_classes+1) columns; last = "no prediction"
};

/// Per-class IoU between two label maps; mean over classes present in gt or
/// pred (at non-ignored gt pixels).
inline ClassReport semantic_iou(const SemanticMap& pred, const SemanticMap& gt) {
  IouAccumulator acc(gt.num_classes);
  acc.add(pred, gt);
  return acc.report();
}

// ---------------------------------------------------------------------------
// Segment matching
// ---------------------------------------------------------------------------

/// A class-labeled mask ready for matching.
struct EvalSegment {
  int class_id = 0;
  BinaryMask mask;
};

struct TpMatch {
  int pred_index = 0;
  int gt_index = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<TpMatch> matches;      // sorted by pred index
  std::vector<int> unmatched_preds;  // false positives
  std::vector<int> unmatched_gts;    // false negatives

  double iou_sum() const {
    double s = 0.0;
    for (const auto& m : matches) s += m.iou;
    return s;
  }
};

struct SegmentMatchOptions {
  /// When set, pred pixels falling on this region are excluded from IoU
  /// unions (standard treatment of unlabeled gt regions).
  const BinaryMask* gt_void = nullptr;
};

namespace detail {

struct IouCandidate {
  int pred = 0;
  int gt = 0;
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  double iou() const { return static_cast<double>(inter) / static_cast<double>(uni); }
  bool above_half() const { return 2 * inter > uni; }  // exact integer test
};

inline std::vector<IouCandidate> feasible_pairs(const std::vector<EvalSegment>& preds,
                                                const std::vector<EvalSegment>& gts,
                                                const SegmentMatchOptions& opts) {
  std::vector<IouCandidate> out;
  for (int i = 0; i < static_cast<int>(preds.size()); ++i) {
    std::int64_t void_overlap = 0;
    if (opts.gt_void != nullptr) void_overlap = intersection_area(preds[i].mask, *opts.gt_void);
    for (int j = 0; j < static_cast<int>(gts.size()); ++j) {
      if (preds[i].class_id != gts[j].class_id) continue;
      const std::int64_t inter = intersection_area(preds[i].mask, gts[j].mask);
      if (inter == 0) continue;
      const std::int64_t uni =
          preds[i].mask.area() + gts[j].mask.area() - inter - void_overlap;
      IouCandidate cand{i, j, inter, uni};
      if (uni > 0 && cand.above_half()) out.push_back(cand);
    }
  }
  return out;
}

inline MatchResult finish_match(const std::vector<EvalSegment>& preds,
                                const std::vector<EvalSegment>& gts,
                                std::vector<TpMatch> matches) {
  std::sort(matches.begin(), matches.end(),
            [](const TpMatch& a, const TpMatch& b) { return a.pred_index < b.pred_index; });
  std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
  for (const auto& m : matches) {
    pred_used[static_cast<std::size_t>(m.pred_index)] = true;
    gt_used[static_cast<std::size_t>(m.gt_index)] = true;
  }
  MatchResult result;
  result.matches = std::move(matches);
  for (int i = 0; i < static_cast<int>(preds.size()); ++i)
    if (!pred_used[static_cast<std::size_t>(i)]) result.unmatched_preds.push_back(i);
  for (int j = 0; j < static_cast<int>(gts.size()); ++j)
    if (!gt_used[static_cast<std::size_t>(j)]) result.unmatched_gts.push_back(j);
  return result;
}

}  // namespace detail

/// Greedy same-class matching at the strict IoU > 0.5 threshold. Candidate
/// pairs are taken in descending IoU order (ties: lower pred index, then
/// lower gt index), so the result is deterministic; for non-overlapping
/// segment sets the > 0.5 threshold already makes the matching unique.
inline MatchResult match_segments(const std::vector<EvalSegment>& preds,
                                  const std::vector<EvalSegment>& gts,
                                  const SegmentMatchOptions& opts = {}) {
  auto cands = detail::feasible_pairs(preds, gts, opts);
  std::sort(cands.begin(), cands.end(),
            [](const detail::IouCandidate& a, const detail::IouCandidate& b) {
              const double ia = a.iou(), ib = b.iou();
              if (ia != ib) return ia > ib;
              if (a.pred != b.pred) return a.pred < b.pred;
              return a.gt < b.gt;
            });
  std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
  std::vector<TpMatch> matches;
  for (const auto& c : cands) {
    if (pred_used[static_cast<std::size_t>(c.pred)] || gt_used[static_cast<std::size_t>(c.gt)])
      continue;
    pred_used[static_cast<std::size_t>(c.pred)] = true;
    gt_used[static_cast<std::size_t>(c.gt)] = true;
    matches.push_back({c.pred, c.gt, c.iou()});
  }
  return detail::finish_match(preds, gts, std::move(matches));
}

inline MatchResult match_segments(const std::vector<InstanceAnnotation>& preds,
                                  const std::vector<InstanceAnnotation>& gts,
                                  MaskSelector sel, const SegmentMatchOptions& opts = {}) {
  std::vector<EvalSegment> p, g;
  p.reserve(preds.size());
  g.reserve(gts.size());
  for (const auto& a : preds) p.push_back({a.category, select_mask(a, sel)});
  for (const auto& a : gts) g.push_back({a.category, select_mask(a, sel)});
  return match_segments(p, g, opts);
}

/// Exhaustive one-to-one matching maximizing the IoU sum over pairs with
/// IoU > 0.5. Limited to 10 segments per class per side. On ties the first
/// matching in enumeration order (preds ascending, each preferring lower gt
/// indices before staying unmatched) is kept.
inline MatchResult bruteforce_match_oracle(const std::vector<EvalSegment>& preds,
                                           const std::vector<EvalSegment>& gts,
                                           const SegmentMatchOptions& opts = {}) {
  std::map<int, std::pair<std::vector<int>, std::vector<int>>> by_class;
  for (int i = 0; i < static_cast<int>(preds.size()); ++i)
    by_class[preds[i].class_id].first.push_back(i);
  for (int j = 0; j < static_cast<int>(gts.size()); ++j)
    by_class[gts[j].class_id].second.push_back(j);
  for (const auto& [cls, lists] : by_class) {
    detail::require(lists.first.size() <= 10 && lists.second.size() <= 10,
                    "bruteforce oracle limited to 10 segments per class (class " +
                        std::to_string(cls) + ")");
  }

  const auto cands = detail::feasible_pairs(preds, gts, opts);
  // candidate IoUs per pred, gts ascending (feasible_pairs emits them so)
  std::vector<std::vector<const detail::IouCandidate*>> per_pred(preds.size());
  for (const auto& c : cands) per_pred[static_cast<std::size_t>(c.pred)].push_back(&c);

  // Suffix bound for pruning: the best IoU any pred >= i could contribute.
  std::vector<double> suffix_best(preds.size() + 1, 0.0);
  for (int i = static_cast<int>(preds.size()) - 1; i >= 0; --i) {
    double best = 0.0;
    for (const auto* c : per_pred[static_cast<std::size_t>(i)]) best = std::max(best, c->iou());
    suffix_best[static_cast<std::size_t>(i)] = suffix_best[static_cast<std::size_t>(i) + 1] + best;
  }

  std::vector<bool> gt_used(gts.size(), false);
  std::vector<TpMatch> current, best;
  double current_sum = 0.0, best_sum = -1.0;

  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (current_sum + suffix_best[i] <= best_sum) return;
    if (i == preds.size()) {
      if (current_sum > best_sum) {
        best_sum = current_sum;
        best = current;
      }
      return;
    }
    for (const auto* c : per_pred[i]) {
      if (gt_used[static_cast<std::size_t>(c->gt)]) continue;
      gt_used[static_cast<std::size_t>(c->gt)] = true;
      current.push_back({c->pred, c->gt, c->iou()});
      current_sum += c->iou();
      self(self, i + 1);
      current_sum -= c->iou();
      current.pop_back();
      gt_used[static_cast<std::size_t>(c->gt)] = false;
    }
    self(self, i + 1);  // leave pred i unmatched
  };
  rec(rec, 0);

  return detail::finish_match(preds, gts, std::move(best));
}

inline MatchResult bruteforce_match_oracle(const std::vector<InstanceAnnotation>& preds,
                                           const std::vector<InstanceAnnotation>& gts,
                                           MaskSelector sel,
                                           const SegmentMatchOptions& opts = {}) {
  std::vector<EvalSegment> p, g;
  for (const auto& a : preds) p.push_back({a.category, select_mask(a, sel)});
  for (const auto& a : gts) g.push_back({a.category, select_mask(a, sel)});
  return bruteforce_match_oracle(p, g, opts);
}

// ---------------------------------------------------------------------------
// Panoptic quality
// ---------------------------------------------------------------------------

struct PqStats {
  double iou_sum = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

using PqStatsMap = std::map<int, PqStats>;

namespace detail {

struct SegmentRecord {
  std::uint32_t id = 0;
  int class_id = 0;
  bool is_thing = false;
  std::int64_t area = 0;
  bool matched = false;
};

/// One pixel pass computing all (pred id, gt id) co-occurrence counts, from
/// which segment areas follow, then the unique > 0.5 matching per the
/// panoptic quality rule. `keep_class` restricts accumulation to classes
/// passing the predicate. The hash map's iteration order is never observed,
/// so results stay deterministic.
template <typename ClassFilter>
void accumulate_pq_filtered(const PanopticMap& pred, const PanopticMap& gt,
                            ClassFilter&& keep_class, PqStatsMap& stats) {
  detail::require(pred.height == gt.height && pred.width == gt.width,
                  "panoptic map dimension mismatch");
  std::map<std::uint32_t, SegmentRecord> pred_segs, gt_segs;
  for (const auto& s : pred.segments) pred_segs[s.id] = {s.id, s.class_id, s.is_thing, 0, false};
  for (const auto& s : gt.segments) gt_segs[s.id] = {s.id, s.class_id, s.is_thing, 0, false};

  std::unordered_map<std::uint64_t, std::int64_t> pair_area;
  const std::size_t n = pred.ids.size();
  const auto key_of = [](std::uint32_t p, std::uint32_t g) {
    return (static_cast<std::uint64_t>(p) << 32) | g;
  };
  {
    // consecutive pixels usually share the id pair; batch them
    std::uint64_t run_key = key_of(pred.ids[0], gt.ids[0]);
    std::int64_t run_len = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t key = key_of(pred.ids[i], gt.ids[i]);
      if (key == run_key) {
        ++run_len;
      } else {
        pair_area[run_key] += run_len;
        run_key = key;
        run_len = 1;
      }
    }
    pair_area[run_key] += run_len;
  }
  for (const auto& [key, count] : pair_area) {
    const auto p = static_cast<std::uint32_t>(key >> 32);
    const auto g = static_cast<std::uint32_t>(key & 0xffffffffu);
    if (p != kVoidId) pred_segs.at(p).area += count;
    if (g != kVoidId) gt_segs.at(g).area += count;
  }

  for (auto& [gid, grec] : gt_segs) {
    if (!keep_class(grec.class_id)) continue;
    for (auto& [pid, prec] : pred_segs) {
      if (prec.matched || prec.class_id != grec.class_id) continue;
      const auto it = pair_area.find(key_of(pid, gid));
      if (it == pair_area.end()) continue;
      const std::int64_t inter = it->second;
      std::int64_t void_overlap = 0;
      const auto vit = pair_area.find(key_of(pid, kVoidId));
      if (vit != pair_area.end()) void_overlap = vit->second;
      const std::int64_t uni = prec.area + grec.area - inter - void_overlap;
      if (uni <= 0 || 2 * inter <= uni) continue;
      grec.matched = true;
      prec.matched = true;
      auto& st = stats[grec.class_id];
      st.tp += 1;
      st.iou_sum += static_cast<double>(inter) / static_cast<double>(uni);
      break;  // the > 0.5 rule admits at most one partner
    }
  }
  for (const auto& [gid, grec] : gt_segs) {
    if (!keep_class(grec.class_id)) continue;
    if (!grec.matched) stats[grec.class_id].fn += 1;
  }
  for (const auto& [pid, prec] : pred_segs) {
    if (!keep_class(prec.class_id)) continue;
    if (!prec.matched) stats[prec.class_id].fp += 1;
  }
}

}  // namespace detail

inline void accumulate_pq(const PanopticMap& pred, const PanopticMap& gt, PqStatsMap& stats) {
  pred.validate();
  gt.validate();
  detail::accumulate_pq_filtered(pred, gt, [](int) { return true; }, stats);
}

inline ClassReport pq_report(const PqStatsMap& stats) {
  std::map<int, double> values;
  for (const auto& [cls, st] : stats) {
    const double denom =
        static_cast<double>(st.tp) + 0.5 * static_cast<double>(st.fp) + 0.5 * static_cast<double>(st.fn);
    if (denom > 0.0) values[cls] = st.iou_sum / denom;
  }
  return ClassReport::from_values(std::move(values));
}

/// Panoptic quality per class:
///   PQ = sum of matched IoUs / (|TP| + |FP|/2 + |FN|/2),
/// with TP pairs defined by same-class IoU > 0.5. Pred pixels on gt void are
/// excluded from IoU unions. Mean over classes with at least one segment.
inline ClassReport panoptic_quality(const PanopticMap& pred, const PanopticMap& gt) {
  PqStatsMap stats;
  accumulate_pq(pred, gt, stats);
  return pq_report(stats);
}

inline BinaryMask void_mask_of(const PanopticMap& pm) {
  std::vector<std::uint8_t> grid(pm.ids.size(), 0);
  for (std::size_t i = 0; i < pm.ids.size(); ++i) grid[i] = pm.ids[i] == kVoidId ? 1 : 0;
  return BinaryMask::from_dense(grid, pm.height, pm.width);
}

/// Amodal panoptic quality: stuff classes exactly as PQ on the pixel maps;
/// thing classes matched on full-region (amodal) masks, which may overlap,
/// with IoU computed independently per pair. Gt void is excluded from unions
/// in both parts.
inline void accumulate_apq(const AmodalPanopticMap& pred, const AmodalPanopticMap& gt,
                           const ClassUniverse& universe, PqStatsMap& stats) {
  pred.panoptic.validate();
  gt.panoptic.validate();
  detail::accumulate_pq_filtered(
      pred.panoptic, gt.panoptic,
      [&universe](int cls) { return !universe.is_thing(cls); }, stats);

  const BinaryMask gt_void = void_mask_of(gt.panoptic);
  SegmentMatchOptions opts;
  opts.gt_void = &gt_void;

  std::vector<EvalSegment> p, g;
  for (const auto& s : pred.segments) {
    detail::require(universe.is_thing(s.class_id), "amodal segment with stuff class");
    p.push_back({s.class_id, s.amodal});
  }
  for (const auto& s : gt.segments) {
    detail::require(universe.is_thing(s.class_id), "amodal segment with stuff class");
    g.push_back({s.class_id, s.amodal});
  }
  const MatchResult m = match_segments(p, g, opts);
  for (const auto& tp : m.matches) {
    auto& st = stats[p[static_cast<std::size_t>(tp.pred_index)].class_id];
    st.tp += 1;
    st.iou_sum += tp.iou;
  }
  for (const int i : m.unmatched_preds) stats[p[static_cast<std::size_t>(i)].class_id].fp += 1;
  for (const int j : m.unmatched_gts) stats[g[static_cast<std::size_t>(j)].class_id].fn += 1;
}

inline ClassReport amodal_panoptic_quality(const AmodalPanopticMap& pred,
                                           const AmodalPanopticMap& gt,
                                           const ClassUniverse& universe) {
  PqStatsMap stats;
  accumulate_apq(pred, gt, universe, stats);
  return pq_report(stats);
}

// ---------------------------------------------------------------------------
// Average precision
// ---------------------------------------------------------------------------

inline constexpr std::array<double, 10> kApIouThresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                                            0.75, 0.80, 0.85, 0.90, 0.95};

struct ApDetection {
  double score = 0.0;
  std::int64_t image_index = 0;
  std::int64_t det_index = 0;
  std::uint16_t tp_bits = 0;  // bit t set: true positive at kApIouThresholds[t]
};

struct ApClassStats {
  std::vector<ApDetection> detections;
  std::int64_t gt_count = 0;
};

using ApStatsMap = std::map<int, ApClassStats>;

/// Matches one image's detections against its ground truth at all ten
/// thresholds and appends the flagged detections to the accumulator.
/// Detections are processed in descending score order (ties by input index);
/// each takes the unmatched gt of highest IoU above the threshold.
inline void accumulate_ap(const std::vector<InstanceAnnotation>& dets,
                          const std::vector<InstanceAnnotation>& gts, MaskSelector sel,
                          ApStatsMap& stats, std::int64_t image_index = 0) {
  std::map<int, std::vector<int>> dets_by_class, gts_by_class;
  for (int i = 0; i < static_cast<int>(dets.size()); ++i)
    dets_by_class[dets[static_cast<std::size_t>(i)].category].push_back(i);
  for (int j = 0; j < static_cast<int>(gts.size()); ++j)
    gts_by_class[gts[static_cast<std::size_t>(j)].category].push_back(j);

  for (auto& [cls, gt_idx] : gts_by_class) stats[cls].gt_count += static_cast<std::int64_t>(gt_idx.size());

  for (auto& [cls, det_idx] : dets_by_class) {
    std::stable_sort(det_idx.begin(), det_idx.end(), [&dets](int a, int b) {
      return dets[static_cast<std::size_t>(a)].score > dets[static_cast<std::size_t>(b)].score;
    });
    const auto git = gts_by_class.find(cls);
    const std::vector<int> empty;
    const std::vector<int>& gt_idx = git == gts_by_class.end() ? empty : git->second;

    // IoU matrix, dets-in-score-order by gts.
    std::vector<std::vector<double>> iou(det_idx.size(), std::vector<double>(gt_idx.size(), 0.0));
    for (std::size_t a = 0; a < det_idx.size(); ++a)
      for (std::size_t b = 0; b < gt_idx.size(); ++b)
        iou[a][b] = mask_iou(select_mask(dets[static_cast<std::size_t>(det_idx[a])], sel),
                             select_mask(gts[static_cast<std::size_t>(gt_idx[b])], sel));

    std::vector<ApDetection> records(det_idx.size());
    for (std::size_t a = 0; a < det_idx.size(); ++a) {
      records[a].score = dets[static_cast<std::size_t>(det_idx[a])].score;
      records[a].image_index = image_index;
      records[a].det_index = static_cast<std::int64_t>(a);
    }
    for (std::size_t t = 0; t < kApIouThresholds.size(); ++t) {
      const double thr = kApIouThresholds[t];
      std::vector<bool> gt_used(gt_idx.size(), false);
      for (std::size_t a = 0; a < det_idx.size(); ++a) {
        int best_gt = -1;
        double best_iou = 0.0;
        for (std::size_t b = 0; b < gt_idx.size(); ++b) {
          if (gt_used[b] || iou[a][b] < thr) continue;
          if (best_gt < 0 || iou[a][b] > best_iou) {
            best_gt = static_cast<int>(b);
            best_iou = iou[a][b];
          }
        }
        if (best_gt >= 0) {
          gt_used[static_cast<std::size_t>(best_gt)] = true;
          records[a].tp_bits |= static_cast<std::uint16_t>(1u << t);
        }
      }
    }
    auto& dst = stats[cls].detections;
    dst.insert(dst.end(), records.begin(), records.end());
  }
}

namespace detail {

/// 101-point interpolated average precision from TP flags of detections
/// already sorted in descending score order.
inline double ap_from_flags(const std::vector<bool>& tp_flags, std::int64_t gt_count) {
  if (gt_count <= 0) return 0.0;
  std::vector<double> precision, recall;
  std::int64_t cum_tp = 0, cum_fp = 0;
  for (const bool tp : tp_flags) {
    tp ? ++cum_tp : ++cum_fp;
    precision.push_back(static_cast<double>(cum_tp) / static_cast<double>(cum_tp + cum_fp));
    recall.push_back(static_cast<double>(cum_tp) / static_cast<double>(gt_count));
  }
  // Precision envelope: best precision achievable at recall >= r.
  for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
    precision[static_cast<std::size_t>(i)] =
        std::max(precision[static_cast<std::size_t>(i)], precision[static_cast<std::size_t>(i) + 1]);
  double total = 0.0;
  std::size_t k = 0;
  for (int ri = 0; ri <= 100; ++ri) {
    const double r = static_cast<double>(ri) / 100.0;
    while (k < recall.size() && recall[k] < r) ++k;
    if (k < recall.size()) total += precision[k];
  }
  return total / 101.0;
}

}  // namespace detail

/// Average precision per class: the mean over the ten IoU thresholds of the
/// 101-point interpolated AP. Classes require at least one gt instance to be
/// reported; classes with gt but no detections contribute 0.
inline ClassReport ap_report(const ApStatsMap& stats) {
  std::map<int, double> values;
  for (const auto& [cls, st] : stats) {
    if (st.gt_count <= 0) continue;
    std::vector<ApDetection> dets = st.detections;
    std::sort(dets.begin(), dets.end(), [](const ApDetection& a, const ApDetection& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.image_index != b.image_index) return a.image_index < b.image_index;
      return a.det_index < b.det_index;
    });
    double sum = 0.0;
    for (std::size_t t = 0; t < kApIouThresholds.size(); ++t) {
      std::vector<bool> flags(dets.size());
      for (std::size_t i = 0; i < dets.size(); ++i)
        flags[i] = (dets[i].tp_bits >> t) & 1u;
      sum += detail::ap_from_flags(flags, st.gt_count);
    }
    values[cls] = sum / static_cast<double>(kApIouThresholds.size());
  }
  return ClassReport::from_values(std::move(values));
}

/// Single-collection convenience (one image, or pre-pooled lists).
inline ClassReport average_precision(const std::vector<InstanceAnnotation>& dets,
                                     const std::vector<InstanceAnnotation>& gts,
                                     MaskSelector sel) {
  ApStatsMap stats;
  accumulate_ap(dets, gts, sel, stats);
  return ap_report(stats);
}

// ---------------------------------------------------------------------------
// Dataset-wide evaluation
// ---------------------------------------------------------------------------

/// The five per-image outputs evaluated by this benchmark.
struct OassBundle {
  SemanticMap semantic;
  std::vector<InstanceAnnotation> instances;
  std::vector<InstanceAnnotation> amodal_instances;
  PanopticMap panoptic;
  AmodalPanopticMap amodal_panoptic;
};

struct OassReport {
  ClassReport iou, ap, aap, pq, apq;
  double miou = 0.0, map = 0.0, maap = 0.0, mpq = 0.0, mapq = 0.0;
};

namespace detail {

struct PerImageStats {
  IouAccumulator confusion{1};
  PqStatsMap pq, apq;
  ApStatsMap ap, aap;
};

inline PerImageStats evaluate_one(const OassBundle& pred, const OassBundle& gt,
                                  const ClassUniverse& universe, std::int64_t image_index) {
  PerImageStats out;
  out.confusion = IouAccumulator(gt.semantic.num_classes);
  out.confusion.add(pred.semantic, gt.semantic);
  accumulate_pq(pred.panoptic, gt.panoptic, out.pq);
  accumulate_apq(pred.amodal_panoptic, gt.amodal_panoptic, universe, out.apq);
  accumulate_ap(pred.instances, gt.instances, MaskSelector::kVisible, out.ap, image_index);
  accumulate_ap(pred.amodal_instances, gt.amodal_instances, MaskSelector::kAmodal, out.aap,
                image_index);
  return out;
}

inline void merge_pq(PqStatsMap& into, const PqStatsMap& from) {
  for (const auto& [cls, st] : from) {
    auto& dst = into[cls];
    dst.iou_sum += st.iou_sum;
    dst.tp += st.tp;
    dst.fp += st.fp;
    dst.fn += st.fn;
  }
}

inline void merge_ap(ApStatsMap& into, const ApStatsMap& from) {
  for (const auto& [cls, st] : from) {
    auto& dst = into[cls];
    dst.gt_count += st.gt_count;
    dst.detections.insert(dst.detections.end(), st.detections.begin(), st.detections.end());
  }
}

}  // namespace detail

/// Evaluates all five metrics dataset-wide. Prediction and gt image sets must
/// contain exactly the same identifiers. Images may be processed by several
/// threads; accumulation happens in identifier order afterwards, so reports
/// are bit-identical for any thread count.
inline OassReport evaluate_oass(const std::map<std::string, OassBundle>& preds,
                                const std::map<std::string, OassBundle>& gts,
                                const ClassUniverse& universe = ClassUniverse::street18(),
                                int threads = 1) {
  for (const auto& [id, bundle] : gts)
    detail::require(preds.count(id) > 0, "missing prediction for image '" + id + "'");
  for (const auto& [id, bundle] : preds)
    detail::require(gts.count(id) > 0, "missing ground truth for image '" + id + "'");
  detail::require(threads >= 1, "thread count must be >= 1");

  std::vector<const OassBundle*> pred_list, gt_list;
  for (const auto& [id, bundle] : gts) {
    gt_list.push_back(&bundle);
    pred_list.push_back(&preds.at(id));
  }
  const std::size_t n = gt_list.size();
  std::vector<std::optional<detail::PerImageStats>> partials(n);

  auto worker_body = [&](std::atomic<std::size_t>& cursor, std::exception_ptr& err,
                         std::mutex& err_mu) {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      try {
        partials[i] = detail::evaluate_one(*pred_list[i], *gt_list[i], universe,
                                           static_cast<std::int64_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };

  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      partials[i] = detail::evaluate_one(*pred_list[i], *gt_list[i], universe,
                                         static_cast<std::int64_t>(i));
  } else {
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    const int count = std::min<int>(threads, static_cast<int>(n));
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t)
      pool.emplace_back([&] { worker_body(cursor, err, err_mu); });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }

  const int num_classes = n == 0 ? universe.num_classes() : gt_list[0]->semantic.num_classes;
  IouAccumulator confusion(num_classes);
  PqStatsMap pq_stats, apq_stats;
  ApStatsMap ap_stats, aap_stats;
  for (std::size_t i = 0; i < n; ++i) {
    confusion.merge(partials[i]->confusion);
    detail::merge_pq(pq_stats, partials[i]->pq);
    detail::merge_pq(apq_stats, partials[i]->apq);
    detail::merge_ap(ap_stats, partials[i]->ap);
    detail::merge_ap(aap_stats, partials[i]->aap);
  }

  OassReport report;
  report.iou = confusion.report();
  report.pq = pq_report(pq_stats);
  report.apq = pq_report(apq_stats);
  report.ap = ap_report(ap_stats);
  report.aap = ap_report(aap_stats);
  report.miou = report.iou.mean;
  report.map = report.ap.mean;
  report.maap = report.aap.mean;
  report.mpq = report.pq.mean;
  report.mapq = report.apq.mean;
  return report;
}

}  // namespace oass
