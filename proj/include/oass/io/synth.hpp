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
#include <map>
#include <string>
#include <vector>

#include "oass/classes.hpp"
#include "oass/common.hpp"
#include "oass/core.hpp"
#include "oass/metrics.hpp"
#include "oass/rng.hpp"

namespace oass::io {

/// Controls the synthetic scene generator. Scenes are rectangles and
/// ellipses (things) stacked over horizontal stuff bands, with controlled
/// occlusion; the perturbed copy translates and erodes masks, drops objects,
/// adds spurious detections and flips semantic pixels.
struct SynthSpec {
  int height = 64;
  int width = 64;
  int min_objects = 1;
  int max_objects = 4;
  double occlusion_prob = 0.5;
  double perturbation = 0.0;  // 0 = prediction equals ground truth
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(height > 0 && width > 0, "dims must be positive");
    detail::require(min_objects >= 0 && min_objects <= max_objects, "object range invalid");
    detail::require(occlusion_prob >= 0.0 && occlusion_prob <= 1.0,
                    "occlusion probability must be in [0,1]");
    detail::require(perturbation >= 0.0 && perturbation <= 1.0,
                    "perturbation must be in [0,1]");
  }
};

/// Expected metric values computed by the generator's own brute-force
/// evaluator (dense pixel loops and exhaustive matching, no code shared with
/// the metrics implementations).
struct SynthCertificate {
  double miou = 0.0, map = 0.0, maap = 0.0, mpq = 0.0, mapq = 0.0;
  std::map<int, double> iou, ap, aap, pq, apq;
};

struct SynthScene {
  OassBundle gt;
  OassBundle pred;
  SynthCertificate certificate;
};

namespace detail_synth {

using Dense = std::vector<std::uint8_t>;

struct SceneObject {
  int class_id = 0;
  Dense amodal;   // full region
  Dense visible;  // amodal minus everything in front
};

inline std::int64_t dense_area(const Dense& m) {
  std::int64_t n = 0;
  for (const auto v : m) n += v;
  return n;
}

inline std::int64_t dense_inter(const Dense& a, const Dense& b) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] & b[i];
  return n;
}

inline double dense_iou(const Dense& a, const Dense& b) {
  const std::int64_t inter = dense_inter(a, b);
  const std::int64_t uni = dense_area(a) + dense_area(b) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline Dense rasterize(int h, int w, bool ellipse, int r0, int c0, int oh, int ow) {
  Dense out(static_cast<std::size_t>(h) * w, 0);
  const double cy = r0 + (oh - 1) / 2.0, cx = c0 + (ow - 1) / 2.0;
  const double ry = oh / 2.0, rx = ow / 2.0;
  for (int r = std::max(0, r0); r < std::min(h, r0 + oh); ++r) {
    for (int c = std::max(0, c0); c < std::min(w, c0 + ow); ++c) {
      if (ellipse) {
        const double dy = (r - cy) / ry, dx = (c - cx) / rx;
        if (dy * dy + dx * dx > 1.0) continue;
      }
      out[static_cast<std::size_t>(r) * w + c] = 1;
    }
  }
  return out;
}

inline Dense translate(const Dense& m, int h, int w, int dr, int dc) {
  Dense out(m.size(), 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!m[static_cast<std::size_t>(r) * w + c]) continue;
      const int rr = r + dr, cc = c + dc;
      if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
      out[static_cast<std::size_t>(rr) * w + cc] = 1;
    }
  }
  return out;
}

inline Dense erode(const Dense& m, int h, int w) {
  Dense out(m.size(), 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!m[static_cast<std::size_t>(r) * w + c]) continue;
      bool keep = true;
      for (const auto& [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= h || cc < 0 || cc >= w ||
            !m[static_cast<std::size_t>(rr) * w + cc]) {
          keep = false;
          break;
        }
      }
      if (keep) out[static_cast<std::size_t>(r) * w + c] = 1;
    }
  }
  return out;
}

/// Exclusive region of object i: its full mask minus every other full mask.
inline std::int64_t exclusive_area(const std::vector<SceneObject>& objs, std::size_t i) {
  std::int64_t n = 0;
  for (std::size_t px = 0; px < objs[i].amodal.size(); ++px) {
    if (!objs[i].amodal[px]) continue;
    bool covered = false;
    for (std::size_t j = 0; j < objs.size() && !covered; ++j)
      covered = j != i && objs[j].amodal[px] != 0;
    if (!covered) ++n;
  }
  return n;
}

/// The generator keeps scenes inside the regime where the > 0.5 matching is
/// unique: full-region masks of the same class never overlap beyond 0.3 IoU,
/// and every object keeps an exclusive region of at least 10% of its area
/// (which also pins the majority votes during identity fusion).
inline bool constraints_hold(const std::vector<SceneObject>& objs) {
  for (std::size_t i = 0; i < objs.size(); ++i) {
    for (std::size_t j = i + 1; j < objs.size(); ++j) {
      if (objs[i].class_id != objs[j].class_id) continue;
      if (dense_iou(objs[i].amodal, objs[j].amodal) > 0.3) return false;
    }
  }
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::int64_t area = dense_area(objs[i].amodal);
    if (exclusive_area(objs, i) < std::max<std::int64_t>(1, area / 10)) return false;
  }
  return true;
}

// --- independent certificate evaluation (dense, exhaustive) ---------------

struct CertSegment {
  int class_id = 0;
  Dense mask;
};

/// Exhaustive maximum-IoU-sum matching over pairs with IoU > 0.5 (computed
/// on integers; `void_mask` pixels are excluded from unions when given).
/// Returns per-class TP IoU sums and TP/FP/FN counts.
struct CertPqStats {
  double iou_sum = 0.0;
  std::int64_t tp = 0, fp = 0, fn = 0;
};

inline void cert_match(const std::vector<CertSegment>& preds, const std::vector<CertSegment>& gts,
                       const Dense* void_mask, std::map<int, CertPqStats>& stats) {
  std::map<int, std::pair<std::vector<int>, std::vector<int>>> by_class;
  for (int i = 0; i < static_cast<int>(preds.size()); ++i)
    by_class[preds[static_cast<std::size_t>(i)].class_id].first.push_back(i);
  for (int j = 0; j < static_cast<int>(gts.size()); ++j)
    by_class[gts[static_cast<std::size_t>(j)].class_id].second.push_back(j);

  for (const auto& [cls, lists] : by_class) {
    const auto& [pi, gi] = lists;
    // feasible pair IoUs
    std::vector<std::vector<double>> iou(pi.size(), std::vector<double>(gi.size(), 0.0));
    for (std::size_t a = 0; a < pi.size(); ++a) {
      const auto& pm = preds[static_cast<std::size_t>(pi[a])].mask;
      std::int64_t void_overlap = 0;
      if (void_mask) void_overlap = dense_inter(pm, *void_mask);
      for (std::size_t b = 0; b < gi.size(); ++b) {
        const auto& gm = gts[static_cast<std::size_t>(gi[b])].mask;
        const std::int64_t inter = dense_inter(pm, gm);
        const std::int64_t uni = dense_area(pm) + dense_area(gm) - inter - void_overlap;
        if (uni > 0 && 2 * inter > uni)
          iou[a][b] = static_cast<double>(inter) / static_cast<double>(uni);
      }
    }
    // exhaustive search for the IoU-sum-maximal one-to-one matching
    std::vector<bool> used(gi.size(), false);
    double best = -1.0;
    std::int64_t best_count = 0;
    auto rec = [&](auto&& self, std::size_t a, double sum, std::int64_t count) -> void {
      if (a == pi.size()) {
        if (sum > best) {
          best = sum;
          best_count = count;
        }
        return;
      }
      for (std::size_t b = 0; b < gi.size(); ++b) {
        if (used[b] || iou[a][b] <= 0.0) continue;
        used[b] = true;
        self(self, a + 1, sum + iou[a][b], count + 1);
        used[b] = false;
      }
      self(self, a + 1, sum, count);
    };
    rec(rec, 0, 0.0, 0);

    auto& st = stats[cls];
    st.iou_sum += std::max(best, 0.0);
    st.tp += best_count;
    st.fp += static_cast<std::int64_t>(pi.size()) - best_count;
    st.fn += static_cast<std::int64_t>(gi.size()) - best_count;
  }
}

inline std::map<int, double> cert_pq_values(const std::map<int, CertPqStats>& stats) {
  std::map<int, double> out;
  for (const auto& [cls, st] : stats) {
    const double denom = static_cast<double>(st.tp) + 0.5 * static_cast<double>(st.fp) +
                         0.5 * static_cast<double>(st.fn);
    if (denom > 0.0) out[cls] = st.iou_sum / denom;
  }
  return out;
}

inline double mean_of(const std::map<int, double>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [cls, v] : values) s += v;
  return s / static_cast<double>(values.size());
}

inline std::vector<CertSegment> segments_of_map(const PanopticMap& pm, bool things, bool stuff) {
  std::map<std::uint32_t, Dense> masks;
  for (const auto& seg : pm.segments) {
    const bool is_thing = seg.is_thing;
    if ((is_thing && !things) || (!is_thing && !stuff)) continue;
    masks[seg.id] = Dense(pm.ids.size(), 0);
  }
  for (std::size_t i = 0; i < pm.ids.size(); ++i) {
    const auto it = masks.find(pm.ids[i]);
    if (it != masks.end()) it->second[i] = 1;
  }
  std::vector<CertSegment> out;
  for (const auto& seg : pm.segments) {
    const auto it = masks.find(seg.id);
    if (it != masks.end()) out.push_back({seg.class_id, it->second});
  }
  return out;
}

inline Dense void_of(const PanopticMap& pm) {
  Dense out(pm.ids.size(), 0);
  for (std::size_t i = 0; i < pm.ids.size(); ++i) out[i] = pm.ids[i] == kVoidId ? 1 : 0;
  return out;
}

/// Independent per-class IoU over label maps.
inline std::map<int, double> cert_semantic_iou(const SemanticMap& pred, const SemanticMap& gt) {
  std::map<int, std::array<std::int64_t, 3>> counts;  // class -> tp, fp, fn
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const std::uint8_t g = gt.labels[i];
    if (g == kIgnoreLabel) continue;
    const std::uint8_t p = pred.labels[i];
    if (p == g) {
      counts[g][0] += 1;
    } else {
      if (p != kIgnoreLabel) counts[p][1] += 1;
      counts[g][2] += 1;
    }
  }
  std::map<int, double> out;
  for (const auto& [cls, tfn] : counts) {
    const std::int64_t denom = tfn[0] + tfn[1] + tfn[2];
    if (denom > 0) out[cls] = static_cast<double>(tfn[0]) / static_cast<double>(denom);
  }
  return out;
}

/// Independent single-image average precision (ten thresholds, 101-point).
inline std::map<int, double> cert_average_precision(const std::vector<InstanceAnnotation>& dets,
                                                    const std::vector<InstanceAnnotation>& gts,
                                                    bool amodal) {
  std::map<int, std::vector<int>> dets_by_class, gts_by_class;
  for (int i = 0; i < static_cast<int>(dets.size()); ++i)
    dets_by_class[dets[static_cast<std::size_t>(i)].category].push_back(i);
  for (int j = 0; j < static_cast<int>(gts.size()); ++j)
    gts_by_class[gts[static_cast<std::size_t>(j)].category].push_back(j);

  std::map<int, double> out;
  for (const auto& [cls, gidx] : gts_by_class) {
    auto dit = dets_by_class.find(cls);
    std::vector<int> didx = dit == dets_by_class.end() ? std::vector<int>{} : dit->second;
    std::stable_sort(didx.begin(), didx.end(), [&dets](int a, int b) {
      return dets[static_cast<std::size_t>(a)].score > dets[static_cast<std::size_t>(b)].score;
    });
    std::vector<Dense> dmasks, gmasks;
    for (const int i : didx)
      dmasks.push_back((amodal ? dets[static_cast<std::size_t>(i)].amodal
                               : dets[static_cast<std::size_t>(i)].visible)
                           .to_dense());
    for (const int j : gidx)
      gmasks.push_back((amodal ? gts[static_cast<std::size_t>(j)].amodal
                               : gts[static_cast<std::size_t>(j)].visible)
                           .to_dense());

    double threshold_sum = 0.0;
    for (int t = 0; t < 10; ++t) {
      const double thr = 0.5 + 0.05 * t;
      std::vector<bool> used(gmasks.size(), false);
      std::vector<bool> tp(dmasks.size(), false);
      for (std::size_t a = 0; a < dmasks.size(); ++a) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t b = 0; b < gmasks.size(); ++b) {
          if (used[b]) continue;
          const double iou = dense_iou(dmasks[a], gmasks[b]);
          if (iou >= thr && (best < 0 || iou > best_iou)) {
            best = static_cast<int>(b);
            best_iou = iou;
          }
        }
        if (best >= 0) {
          used[static_cast<std::size_t>(best)] = true;
          tp[a] = true;
        }
      }
      // 101-point interpolated area under precision-recall
      std::vector<double> precision, recall;
      std::int64_t ctp = 0, cfp = 0;
      for (std::size_t a = 0; a < dmasks.size(); ++a) {
        tp[a] ? ++ctp : ++cfp;
        precision.push_back(static_cast<double>(ctp) / static_cast<double>(ctp + cfp));
        recall.push_back(static_cast<double>(ctp) / static_cast<double>(gidx.size()));
      }
      for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
        precision[static_cast<std::size_t>(i)] =
            std::max(precision[static_cast<std::size_t>(i)], precision[static_cast<std::size_t>(i) + 1]);
      double area = 0.0;
      std::size_t k = 0;
      for (int ri = 0; ri <= 100; ++ri) {
        const double r = static_cast<double>(ri) / 100.0;
        while (k < recall.size() && recall[k] < r) ++k;
        if (k < recall.size()) area += precision[k];
      }
      threshold_sum += area / 101.0;
    }
    out[cls] = threshold_sum / 10.0;
  }
  return out;
}

inline SynthCertificate make_certificate(const OassBundle& pred, const OassBundle& gt) {
  SynthCertificate cert;
  cert.iou = cert_semantic_iou(pred.semantic, gt.semantic);
  cert.ap = cert_average_precision(pred.instances, gt.instances, false);
  cert.aap = cert_average_precision(pred.amodal_instances, gt.amodal_instances, true);

  {
    std::map<int, CertPqStats> stats;
    const Dense gt_void = void_of(gt.panoptic);
    cert_match(segments_of_map(pred.panoptic, true, true),
               segments_of_map(gt.panoptic, true, true), &gt_void, stats);
    cert.pq = cert_pq_values(stats);
  }
  {
    std::map<int, CertPqStats> stats;
    const Dense gt_void = void_of(gt.amodal_panoptic.panoptic);
    cert_match(segments_of_map(pred.amodal_panoptic.panoptic, false, true),
               segments_of_map(gt.amodal_panoptic.panoptic, false, true), &gt_void, stats);
    std::vector<CertSegment> pred_things, gt_things;
    for (const auto& s : pred.amodal_panoptic.segments)
      pred_things.push_back({s.class_id, s.amodal.to_dense()});
    for (const auto& s : gt.amodal_panoptic.segments)
      gt_things.push_back({s.class_id, s.amodal.to_dense()});
    cert_match(pred_things, gt_things, &gt_void, stats);
    cert.apq = cert_pq_values(stats);
  }
  cert.miou = mean_of(cert.iou);
  cert.map = mean_of(cert.ap);
  cert.maap = mean_of(cert.aap);
  cert.mpq = mean_of(cert.pq);
  cert.mapq = mean_of(cert.apq);
  return cert;
}

inline BinaryMask to_mask(const Dense& d, int h, int w) { return BinaryMask::from_dense(d, h, w); }

/// Builds a panoptic map by claiming pixels front to back over a semantic
/// base; `order` lists objects back to front.
struct PaintedObject {
  int class_id = 0;
  double score = 1.0;
  Dense visible;  // as predicted/annotated, before depth resolution
  Dense amodal;
};

struct PaintResult {
  PanopticMap map;
  std::vector<AmodalSegment> segments;  // objects that kept at least one pixel
};

inline PaintResult paint_panoptic(const SemanticMap& semantic,
                                  const std::vector<PaintedObject>& back_to_front,
                                  const ClassUniverse& universe) {
  const int h = semantic.height, w = semantic.width;
  PaintResult out;
  out.map = PanopticMap(h, w);
  std::vector<int> owner(static_cast<std::size_t>(h) * w, -1);
  for (int i = static_cast<int>(back_to_front.size()) - 1; i >= 0; --i) {
    const auto& obj = back_to_front[static_cast<std::size_t>(i)];
    for (std::size_t px = 0; px < obj.visible.size(); ++px)
      if (obj.visible[px] && owner[px] < 0) owner[px] = i;
  }
  std::map<int, int> next_index;
  std::vector<std::uint32_t> ids(back_to_front.size(), kVoidId);
  for (std::size_t i = 0; i < back_to_front.size(); ++i) {
    std::int64_t area = 0;
    for (std::size_t px = 0; px < owner.size(); ++px)
      if (owner[px] == static_cast<int>(i)) ++area;
    if (area == 0) continue;
    const int cls = back_to_front[i].class_id;
    int& counter = next_index[cls];
    ++counter;
    ids[i] = encode_segment_id(cls, counter);
    out.map.segments.push_back({ids[i], cls, true});
    out.segments.push_back(
        {ids[i], cls, back_to_front[i].score, to_mask(back_to_front[i].amodal, h, w)});
  }
  std::map<int, std::uint32_t> stuff_ids;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t px = static_cast<std::size_t>(r) * w + c;
      if (owner[px] >= 0 && ids[static_cast<std::size_t>(owner[px])] != kVoidId) {
        out.map.ids[px] = ids[static_cast<std::size_t>(owner[px])];
        continue;
      }
      const std::uint8_t label = semantic.labels[px];
      if (label == kIgnoreLabel || universe.is_thing(label)) continue;  // void
      auto it = stuff_ids.find(label);
      if (it == stuff_ids.end()) {
        const std::uint32_t id = encode_segment_id(label, 1);
        stuff_ids[label] = id;
        out.map.segments.push_back({id, label, false});
        it = stuff_ids.find(label);
      }
      out.map.ids[px] = it->second;
    }
  }
  return out;
}

}  // namespace detail_synth

/// Generates one synthetic scene: a ground-truth bundle, a perturbed
/// prediction bundle, and a certificate of brute-force expected metrics.
/// Fully deterministic in the seed.
inline SynthScene synth_scene(const SynthSpec& spec,
                              const ClassUniverse& universe = ClassUniverse::street18()) {
  spec.validate();
  using namespace detail_synth;
  Rng rng(spec.seed);
  const int h = spec.height, w = spec.width;
  const std::size_t npix = static_cast<std::size_t>(h) * w;

  // Stuff bands.
  SemanticMap gt_semantic(h, w, universe.num_classes());
  {
    const int bands = static_cast<int>(rng.uniform_int(2, 4));
    std::vector<int> cuts{0, h};
    for (int b = 1; b < bands; ++b) cuts.push_back(static_cast<int>(rng.uniform_int(1, h - 1)));
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
      const auto cls = static_cast<std::uint8_t>(rng.uniform_int(0, 10));
      for (int r = cuts[b]; r < cuts[b + 1]; ++r)
        for (int c = 0; c < w; ++c) gt_semantic.at(r, c) = cls;
    }
  }

  // Things with bounded-retry placement under the matching-regime
  // constraints; later objects sit in front of earlier ones.
  std::vector<SceneObject> objects;
  {
    const int target = static_cast<int>(rng.uniform_int(spec.min_objects, spec.max_objects));
    int attempts = 0;
    const int max_attempts = 60 * std::max(1, target);
    while (static_cast<int>(objects.size()) < target && attempts < max_attempts) {
      ++attempts;
      SceneObject obj;
      obj.class_id = static_cast<int>(rng.uniform_int(11, 17));
      const bool ellipse = rng.bernoulli(0.5);
      const int oh = static_cast<int>(rng.uniform_int(std::max(3, h / 8), std::max(4, h / 3)));
      const int ow = static_cast<int>(rng.uniform_int(std::max(3, w / 12), std::max(4, w / 4)));
      int r0, c0;
      const bool want_occlusion = !objects.empty() && rng.bernoulli(spec.occlusion_prob);
      const SceneObject* prev = nullptr;
      if (want_occlusion) {
        // place near an existing object; the overlap is verified below
        prev = &objects[rng.index(objects.size())];
        std::int64_t sum_r = 0, sum_c = 0, n = 0;
        for (int r = 0; r < h; ++r)
          for (int c = 0; c < w; ++c)
            if (prev->amodal[static_cast<std::size_t>(r) * w + c]) {
              sum_r += r;
              sum_c += c;
              ++n;
            }
        const int cr = static_cast<int>(sum_r / std::max<std::int64_t>(1, n));
        const int cc = static_cast<int>(sum_c / std::max<std::int64_t>(1, n));
        r0 = cr + static_cast<int>(rng.uniform_int(-oh / 2, oh / 2)) - oh / 2;
        c0 = cc + static_cast<int>(rng.uniform_int(-ow, ow)) - ow / 2;
      } else {
        r0 = static_cast<int>(rng.uniform_int(-oh / 4, h - 1));
        c0 = static_cast<int>(rng.uniform_int(-ow / 4, w - 1));
      }
      obj.amodal = rasterize(h, w, ellipse, r0, c0, oh, ow);
      if (dense_area(obj.amodal) < 8) continue;
      if (want_occlusion && dense_inter(obj.amodal, prev->amodal) == 0) continue;
      objects.push_back(std::move(obj));
      if (!constraints_hold(objects)) objects.pop_back();
    }
    if (static_cast<int>(objects.size()) < spec.min_objects)
      throw Error("infeasible placement after bounded retries (seed " +
                  std::to_string(spec.seed) + ")");
  }

  // Depth resolution: visible = amodal minus everything in front.
  for (std::size_t i = 0; i < objects.size(); ++i) {
    objects[i].visible = objects[i].amodal;
    for (std::size_t j = i + 1; j < objects.size(); ++j)
      for (std::size_t px = 0; px < npix; ++px)
        if (objects[j].amodal[px]) objects[i].visible[px] = 0;
  }

  // Optional unlabeled region carved out of stuff-only pixels.
  if (rng.bernoulli(0.3)) {
    const int vh = static_cast<int>(rng.uniform_int(2, std::max(3, h / 6)));
    const int vw = static_cast<int>(rng.uniform_int(2, std::max(3, w / 6)));
    const int r0 = static_cast<int>(rng.uniform_int(0, h - vh));
    const int c0 = static_cast<int>(rng.uniform_int(0, w - vw));
    for (int r = r0; r < r0 + vh; ++r)
      for (int c = c0; c < c0 + vw; ++c) {
        const std::size_t px = static_cast<std::size_t>(r) * w + c;
        bool on_thing = false;
        for (const auto& obj : objects)
          if (obj.amodal[px]) on_thing = true;
        if (!on_thing) gt_semantic.labels[px] = kIgnoreLabel;
      }
  }

  // Paint visible thing pixels into the semantic map.
  for (const auto& obj : objects)
    for (std::size_t px = 0; px < npix; ++px)
      if (obj.visible[px]) gt_semantic.labels[px] = static_cast<std::uint8_t>(obj.class_id);

  SynthScene scene;
  scene.gt.semantic = gt_semantic;
  std::vector<PaintedObject> gt_painted;
  for (const auto& obj : objects) {
    scene.gt.instances.emplace_back(obj.class_id, 1.0, to_mask(obj.visible, h, w),
                                    to_mask(obj.amodal, h, w));
    gt_painted.push_back({obj.class_id, 1.0, obj.visible, obj.amodal});
  }
  scene.gt.amodal_instances = scene.gt.instances;
  {
    const auto painted = paint_panoptic(gt_semantic, gt_painted, universe);
    scene.gt.panoptic = painted.map;
    scene.gt.amodal_panoptic.panoptic = painted.map;
    scene.gt.amodal_panoptic.segments = painted.segments;
  }

  // Perturbed prediction.
  if (spec.perturbation == 0.0) {
    scene.pred = scene.gt;
  } else {
    const double p = spec.perturbation;
    SemanticMap pred_semantic = gt_semantic;
    for (std::size_t px = 0; px < npix; ++px) {
      if (pred_semantic.labels[px] == kIgnoreLabel) continue;
      if (rng.bernoulli(p * 0.05))
        pred_semantic.labels[px] =
            static_cast<std::uint8_t>(rng.uniform_int(0, universe.num_classes() - 1));
    }

    std::vector<PaintedObject> pred_objects;  // back-to-front
    // spurious detections sit at the very back so they only claim leftovers
    const int fp_count = rng.bernoulli(std::min(0.5, p * 0.4)) ? 1 : 0;
    for (int f = 0; f < fp_count; ++f) {
      for (int attempt = 0; attempt < 10; ++attempt) {
        const int oh = static_cast<int>(rng.uniform_int(3, std::max(4, h / 8)));
        const int ow = static_cast<int>(rng.uniform_int(3, std::max(4, w / 8)));
        const int r0 = static_cast<int>(rng.uniform_int(0, h - oh));
        const int c0 = static_cast<int>(rng.uniform_int(0, w - ow));
        const int cls = static_cast<int>(rng.uniform_int(11, 17));
        const Dense m = rasterize(h, w, false, r0, c0, oh, ow);
        bool clashes = false;
        for (const auto& obj : objects)
          if (obj.class_id == cls && dense_iou(m, obj.amodal) > 0.25) clashes = true;
        if (clashes) continue;
        pred_objects.push_back({cls, rng.uniform(0.55, 0.95), m, m});
        break;
      }
    }
    const int max_shift = std::max(1, static_cast<int>(std::lround(p * 4)));
    for (const auto& obj : objects) {
      if (rng.bernoulli(p * 0.15)) continue;  // dropped: false negative
      const int dr = static_cast<int>(rng.uniform_int(-max_shift, max_shift));
      const int dc = static_cast<int>(rng.uniform_int(-max_shift, max_shift));
      Dense vis = translate(obj.visible, h, w, dr, dc);
      Dense amo = translate(obj.amodal, h, w, dr, dc);
      if (rng.bernoulli(0.5)) {
        const Dense vis2 = erode(vis, h, w), amo2 = erode(amo, h, w);
        if (dense_area(vis2) > 0 && dense_area(amo2) > 0) {
          vis = vis2;
          amo = amo2;
        }
      }
      if (dense_area(vis) == 0 || dense_area(amo) == 0) continue;
      pred_objects.push_back({obj.class_id, rng.uniform(0.75, 1.0), vis, amo});
    }

    scene.pred.semantic = pred_semantic;
    for (const auto& obj : pred_objects) {
      // translation and erosion both preserve visible-in-amodal containment
      scene.pred.instances.emplace_back(obj.class_id, obj.score, to_mask(obj.visible, h, w),
                                        to_mask(obj.amodal, h, w));
    }
    scene.pred.amodal_instances = scene.pred.instances;
    const auto painted = paint_panoptic(pred_semantic, pred_objects, universe);
    scene.pred.panoptic = painted.map;
    scene.pred.amodal_panoptic.panoptic = painted.map;
    scene.pred.amodal_panoptic.segments = painted.segments;
  }

  scene.certificate = detail_synth::make_certificate(scene.pred, scene.gt);
  return scene;
}

}  // namespace oass::io
