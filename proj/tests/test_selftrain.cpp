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

#include "oass/selftrain.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "oass/rng.hpp"

namespace oass {
namespace {

ProbTensor single_row(const std::vector<std::vector<float>>& pixels) {
  const int w = static_cast<int>(pixels.size());
  const int c = static_cast<int>(pixels[0].size());
  ProbTensor t(1, w, c);
  for (int col = 0; col < w; ++col)
    for (int ch = 0; ch < c; ++ch) t.at(0, col, ch) = pixels[static_cast<std::size_t>(col)][static_cast<std::size_t>(ch)];
  return t;
}

TEST(PseudoLabel, ArgmaxAndTieBreak) {
  const ProbTensor t = single_row({{0.2f, 0.5f, 0.3f},   // class 1
                                   {1.f / 3, 1.f / 3, 1.f / 3},  // tie -> class 0
                                   {0.0f, 0.0f, 1.0f}});  // one-hot -> class 2
  const SemanticMap m = pseudo_label(t);
  EXPECT_EQ(m.at(0, 0), 1);
  EXPECT_EQ(m.at(0, 1), 0);
  EXPECT_EQ(m.at(0, 2), 2);
}

TEST(PseudoLabel, InvariantUnderMonotoneRescale) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ProbTensor t(3, 3, 4);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        std::array<double, 4> raw{};
        for (auto& v : raw) {
          v = rng.uniform(0.01, 1.0);
          sum += v;
        }
        for (int ch = 0; ch < 4; ++ch) t.at(r, c, ch) = static_cast<float>(raw[static_cast<std::size_t>(ch)] / sum);
      }
    const SemanticMap base = pseudo_label(t);
    // Monotone per-pixel rescale: mix each distribution with uniform, which
    // preserves the argmax ordering.
    ProbTensor scaled = t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        for (int ch = 0; ch < 4; ++ch)
          scaled.at(r, c, ch) = 0.5f * t.at(r, c, ch) + 0.5f * 0.25f;
    EXPECT_EQ(pseudo_label(scaled), base);
  }
}

TEST(ConfidenceWeight, FourPixelFixture) {
  // Max probs 0.99, 0.97, 0.5, 0.2 with tau = 0.968: exactly two exceed
  // (five channels so that 0.2 can be the per-pixel maximum).
  ProbTensor probs(1, 4, 5);
  auto set_pixel = [&probs](int col, float maxp) {
    const float rest = (1.0f - maxp) / 4.0f;
    for (int ch = 1; ch < 5; ++ch) probs.at(0, col, ch) = rest;
    probs.at(0, col, 0) = maxp;
  };
  set_pixel(0, 0.99f);
  set_pixel(1, 0.97f);
  set_pixel(2, 0.5f);
  set_pixel(3, 0.2f);
  EXPECT_DOUBLE_EQ(confidence_weight(probs, 0.968), 0.5);
}

TEST(ConfidenceWeight, AllConfidentAndUniform) {
  ProbTensor onehot(2, 2, 3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) onehot.at(r, c, 1) = 1.0f;
  EXPECT_DOUBLE_EQ(confidence_weight(onehot, 0.968), 1.0);

  ProbTensor uniform(2, 2, 19);
  for (auto& v : uniform.values) v = 1.0f / 19.0f;
  EXPECT_DOUBLE_EQ(confidence_weight(uniform, 0.968), 0.0);
}

TEST(ConfidenceWeight, NonIncreasingInTau) {
  Rng rng(9);
  ProbTensor t(4, 4, 3);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double sum = 0.0;
      std::array<double, 3> raw{};
      for (auto& v : raw) {
        v = rng.uniform(0.01, 1.0);
        sum += v;
      }
      for (int ch = 0; ch < 3; ++ch) t.at(r, c, ch) = static_cast<float>(raw[static_cast<std::size_t>(ch)] / sum);
    }
  double prev = 1.0;
  for (double tau = 0.1; tau < 1.0; tau += 0.1) {
    const double w = confidence_weight(t, tau);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, prev);
    prev = w;
  }
}

TEST(TargetLoss, PerfectStudentIsZero) {
  ProbTensor student(2, 2, 3);
  SemanticMap pseudo(2, 2, 3, 1);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) student.at(r, c, 1) = 1.0f;
  EXPECT_DOUBLE_EQ(target_loss(student, pseudo, 1.0), 0.0);
}

TEST(TargetLoss, SinglePixelHalfProbabilityIsLn2) {
  ProbTensor student(1, 1, 2);
  student.at(0, 0, 0) = 0.5f;
  student.at(0, 0, 1) = 0.5f;
  SemanticMap pseudo(1, 1, 2, 0);
  EXPECT_NEAR(target_loss(student, pseudo, 1.0), std::log(2.0), 1e-12);
}

TEST(TargetLoss, ZeroOmegaZeroLoss) {
  ProbTensor student(2, 2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      student.at(r, c, 0) = 0.25f;
      student.at(r, c, 1) = 0.75f;
    }
  const SemanticMap pseudo(2, 2, 2, 0);
  EXPECT_DOUBLE_EQ(target_loss(student, pseudo, 0.0), 0.0);
}

TEST(TargetLoss, IgnoredPixelsExcluded) {
  ProbTensor student(4, 1, 2);
  for (int r = 0; r < 4; ++r) {
    student.at(r, 0, 0) = r == 0 ? 0.5f : 1.0f;
    student.at(r, 0, 1) = r == 0 ? 0.5f : 0.0f;
  }
  SemanticMap pseudo(4, 1, 2, 0);
  pseudo.at(3, 0) = kIgnoreLabel;
  // Margin mask drops row 0 (the lossy pixel): only perfect rows remain.
  const BinaryMask margins = margin_ignore_mask(4, 1, 1, 0);
  EXPECT_DOUBLE_EQ(target_loss(student, pseudo, 1.0, &margins), 0.0);
  // Without the margin the mean over rows {0,1,2} is ln(2)/3.
  EXPECT_NEAR(target_loss(student, pseudo, 1.0), std::log(2.0) / 3.0, 1e-12);

  // Everything ignored: defined as 0.
  const BinaryMask all = margin_ignore_mask(4, 1, 4, 0);
  SemanticMap all_ignore(4, 1, 2, kIgnoreLabel);
  EXPECT_DOUBLE_EQ(target_loss(student, all_ignore, 1.0, &all), 0.0);
}

TEST(MarginIgnoreMask, ElevenAboveEightyEightBelow) {
  const BinaryMask m = margin_ignore_mask(376, 376, 11, 88);
  EXPECT_EQ(m.area(), static_cast<std::int64_t>(11 + 88) * 376);
  EXPECT_TRUE(m.pixel(0, 0));
  EXPECT_TRUE(m.pixel(10, 100));
  EXPECT_FALSE(m.pixel(11, 100));
  EXPECT_FALSE(m.pixel(376 - 89, 100));
  EXPECT_TRUE(m.pixel(376 - 88, 100));
}

TEST(SelfTrainConfig, DefaultsAndValidation) {
  const SelfTrainConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.tau, 0.968);
  EXPECT_DOUBLE_EQ(cfg.eta, 0.999);
  EXPECT_EQ(cfg.ignore_above, 11);
  EXPECT_EQ(cfg.ignore_below, 88);
  EXPECT_NO_THROW(cfg.validate());
  SelfTrainConfig bad = cfg;
  bad.tau = 1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(EmaUpdate, SingleStepArithmetic) {
  std::vector<double> teacher{0.0};
  const std::vector<double> student{1.0};
  ema_update(teacher, student, 0.999);
  EXPECT_NEAR(teacher[0], 0.001, 1e-15);
}

TEST(EmaUpdate, FixedPointAndLengthMismatch) {
  std::vector<double> teacher{0.5, -2.0};
  ema_update(teacher, teacher, 0.999);
  EXPECT_DOUBLE_EQ(teacher[0], 0.5);
  EXPECT_DOUBLE_EQ(teacher[1], -2.0);
  const std::vector<double> student{1.0};
  EXPECT_THROW(ema_update(teacher, student, 0.999), ValidationError);
}

TEST(EmaUpdate, GeometricGapContraction) {
  // After k steps with a constant student, the gap scales by eta^k.
  const double eta = 0.999;
  std::vector<double> teacher{0.0};
  const std::vector<double> student{1.0};
  const double initial_gap = student[0] - teacher[0];
  for (int k = 0; k < 100; ++k) ema_update(teacher, student, eta);
  const double expected_gap = std::pow(eta, 100) * initial_gap;
  EXPECT_NEAR(student[0] - teacher[0], expected_gap, 1e-12);
}

}  // namespace
}  // namespace oass
