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

namespace oass {

/// Per-pixel class probabilities, (row, col, channel) order. Values are
/// stored as float32 to match the on-disk format; reductions run in double.
struct ProbTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;

  ProbTensor() = default;
  ProbTensor(int h, int w, int c)
      : height(h), width(w), channels(c),
        values(static_cast<std::size_t>(h) * w * c, 0.0f) {
    detail::require(h > 0 && w > 0 && c > 0, "probability tensor dims must be positive");
  }

  float at(int r, int col, int ch) const {
    return values[(static_cast<std::size_t>(r) * width + col) * channels + ch];
  }
  float& at(int r, int col, int ch) {
    return values[(static_cast<std::size_t>(r) * width + col) * channels + ch];
  }

  /// Checks non-negativity and per-pixel normalization.
  void validate(double eps = 1e-6) const {
    detail::require(height > 0 && width > 0 && channels > 0,
                    "probability tensor dims must be positive");
    detail::require(values.size() == static_cast<std::size_t>(height) * width * channels,
                    "probability buffer size mismatch");
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        double sum = 0.0;
        for (int ch = 0; ch < channels; ++ch) {
          const float v = at(r, c, ch);
          detail::require(v >= 0.0f, "probabilities must be non-negative");
          sum += v;
        }
        detail::require(std::abs(sum - 1.0) <= eps,
                        "per-pixel probabilities must sum to 1");
      }
    }
  }
};

struct SelfTrainConfig {
  double tau = 0.968;      // confidence threshold for the pseudo-label weight
  double eta = 0.999;      // teacher EMA decay
  int ignore_above = 11;   // rows ignored at the top of a crop
  int ignore_below = 88;   // rows ignored at the bottom of a crop

  void validate() const {
    detail::require(tau > 0.0 && tau < 1.0, "tau must be in (0,1)");
    detail::require(eta > 0.0 && eta < 1.0, "eta must be in (0,1)");
    detail::require(ignore_above >= 0 && ignore_below >= 0, "margins must be non-negative");
  }
};

/// Per-pixel argmax of the teacher probabilities; ties break toward the
/// lowest class index.
inline SemanticMap pseudo_label(const ProbTensor& teacher_probs) {
  teacher_probs.validate();
  detail::require(teacher_probs.channels < kIgnoreLabel,
                  "channel count must stay below the ignore label");
  SemanticMap out(teacher_probs.height, teacher_probs.width, teacher_probs.channels);
  for (int r = 0; r < teacher_probs.height; ++r) {
    for (int c = 0; c < teacher_probs.width; ++c) {
      int best = 0;
      float best_p = teacher_probs.at(r, c, 0);
      for (int ch = 1; ch < teacher_probs.channels; ++ch) {
        const float p = teacher_probs.at(r, c, ch);
        if (p > best_p) {
          best = ch;
          best_p = p;
        }
      }
      out.at(r, c) = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

/// Fraction of pixels whose maximum teacher probability strictly exceeds tau.
inline double confidence_weight(const ProbTensor& teacher_probs, double tau) {
  teacher_probs.validate();
  detail::require(tau > 0.0 && tau < 1.0, "tau must be in (0,1)");
  std::int64_t confident = 0;
  for (int r = 0; r < teacher_probs.height; ++r) {
    for (int c = 0; c < teacher_probs.width; ++c) {
      float best = 0.0f;
      for (int ch = 0; ch < teacher_probs.channels; ++ch)
        best = std::max(best, teacher_probs.at(r, c, ch));
      if (static_cast<double>(best) > tau) ++confident;
    }
  }
  return static_cast<double>(confident) /
         (static_cast<double>(teacher_probs.height) * teacher_probs.width);
}

/// Rows near the crop border whose pseudo-labels are discarded: `above` rows
/// at the top and `below` rows at the bottom.
inline BinaryMask margin_ignore_mask(int height, int width, int above, int below) {
  detail::require(height > 0 && width > 0, "mask dimensions must be positive");
  detail::require(above >= 0 && below >= 0, "margins must be non-negative");
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(height) * width, 0);
  for (int r = 0; r < height; ++r) {
    if (r < above || r >= height - below) {
      for (int c = 0; c < width; ++c) grid[static_cast<std::size_t>(r) * width + c] = 1;
    }
  }
  return BinaryMask::from_dense(grid, height, width);
}

/// Confidence-weighted pseudo-label cross-entropy: omega times the mean of
/// -log p_student at the pseudo class over pixels that are neither in the
/// ignore mask nor labeled with the ignore value. Everything ignored: 0.
inline double target_loss(const ProbTensor& student_probs, const SemanticMap& pseudo,
                          double omega, const BinaryMask* ignore_mask = nullptr) {
  student_probs.validate();
  detail::require(student_probs.height == pseudo.height && student_probs.width == pseudo.width,
                  "student/pseudo dimension mismatch");
  detail::require(omega >= 0.0 && omega <= 1.0, "omega must be in [0,1]");
  if (ignore_mask != nullptr)
    detail::require(ignore_mask->height() == pseudo.height && ignore_mask->width() == pseudo.width,
                    "ignore mask dimension mismatch");
  std::vector<std::uint8_t> ignored;
  if (ignore_mask != nullptr) ignored = ignore_mask->to_dense();

  double sum = 0.0;
  std::int64_t count = 0;
  for (int r = 0; r < pseudo.height; ++r) {
    for (int c = 0; c < pseudo.width; ++c) {
      if (!ignored.empty() && ignored[static_cast<std::size_t>(r) * pseudo.width + c]) continue;
      const std::uint8_t label = pseudo.at(r, c);
      if (label == kIgnoreLabel) continue;
      detail::require(label < student_probs.channels, "pseudo label outside channel range");
      const double p = std::max(static_cast<double>(student_probs.at(r, c, label)), 1e-300);
      sum += -std::log(p);
      ++count;
    }
  }
  if (count == 0) return 0.0;
  return omega * (sum / static_cast<double>(count));
}

/// In-place EMA: teacher <- eta * teacher + (1 - eta) * student, elementwise.
inline void ema_update(std::vector<double>& teacher_params,
                       const std::vector<double>& student_params, double eta) {
  detail::require(teacher_params.size() == student_params.size(),
                  "parameter vector length mismatch");
  detail::require(eta > 0.0 && eta < 1.0, "eta must be in (0,1)");
  for (std::size_t i = 0; i < teacher_params.size(); ++i)
    teacher_params[i] = eta * teacher_params[i] + (1.0 - eta) * student_params[i];
}

}  // namespace oass
