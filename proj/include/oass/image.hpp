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

#include <array>
#include <cstdint>
#include <vector>

#include "oass/common.hpp"

namespace oass {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB image, row-major, interleaved channels.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int h, int w, Rgb fill = {0, 0, 0})
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3) {
    detail::require(h > 0 && w > 0, "image dimensions must be positive");
    for (std::size_t i = 0; i < data.size(); i += 3) {
      data[i] = fill[0];
      data[i + 1] = fill[1];
      data[i + 2] = fill[2];
    }
  }

  Rgb at(int r, int c) const {
    const std::size_t base = (static_cast<std::size_t>(r) * width + c) * 3;
    return {data[base], data[base + 1], data[base + 2]};
  }

  void set(int r, int c, Rgb px) {
    const std::size_t base = (static_cast<std::size_t>(r) * width + c) * 3;
    data[base] = px[0];
    data[base + 1] = px[1];
    data[base + 2] = px[2];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace oass
