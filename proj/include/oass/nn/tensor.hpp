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

#include <cstddef>
#include <numeric>
#include <vector>

#include "oass/common.hpp"

namespace oass::nn {

/// Dense n-dimensional double array, row-major.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (const auto d : shape) {
      detail::require(d > 0, "tensor dimensions must be positive");
      n *= d;
    }
    data.assign(n, 0.0);
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  // rank-3 accessors (H x W x C)
  double at3(std::size_t h, std::size_t w, std::size_t c) const {
    return data[(h * shape[1] + w) * shape[2] + c];
  }
  double& at3(std::size_t h, std::size_t w, std::size_t c) {
    return data[(h * shape[1] + w) * shape[2] + c];
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Row-major matrix used inside the blocks.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }

  friend bool operator==(const Mat&, const Mat&) = default;
};

inline Mat matmul(const Mat& a, const Mat& b) {
  detail::require(a.cols == b.rows, "matmul shape mismatch");
  Mat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

inline void add_inplace(Mat& a, const Mat& b) {
  detail::require(a.rows == b.rows && a.cols == b.cols, "matrix shape mismatch");
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

/// Views an H x W x C tensor as a (H*W) x C token matrix.
inline Mat tokens_of(const Tensor& x) {
  detail::require(x.rank() == 3, "expected a rank-3 tensor");
  Mat out(x.shape[0] * x.shape[1], x.shape[2]);
  out.v = x.data;
  return out;
}

inline Tensor tensor_of(const Mat& tokens, std::size_t h, std::size_t w) {
  detail::require(tokens.rows == h * w, "token count does not match spatial dims");
  Tensor out({h, w, tokens.cols});
  out.data = tokens.v;
  return out;
}

}  // namespace oass::nn
