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

#include <string>

#include "oass/classes.hpp"
#include "oass/common.hpp"
#include "oass/core.hpp"
#include "oass/image.hpp"

namespace oass::io {

/// Class colors per the universe palette; ignore pixels render black.
inline Image render_semantic(const SemanticMap& map,
                             const ClassUniverse& universe = ClassUniverse::street18()) {
  Image out(map.height, map.width);
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const std::uint8_t label = map.at(r, c);
      if (label == kIgnoreLabel) continue;  // black
      detail::require(label < universe.num_classes(),
                      "class " + std::to_string(int(label)) + " outside the palette");
      out.set(r, c, universe.info(label).color);
    }
  }
  return out;
}

/// Class colors with per-segment boundary darkening; void renders black.
inline Image render_panoptic(const PanopticMap& map,
                             const ClassUniverse& universe = ClassUniverse::street18()) {
  map.validate();
  Image out(map.height, map.width);
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const std::uint32_t id = map.at(r, c);
      if (id == kVoidId) continue;
      const int cls = decode_segment_id(id).first;
      detail::require(cls < universe.num_classes(),
                      "class " + std::to_string(cls) + " outside the palette");
      Rgb color = universe.info(cls).color;
      bool boundary = false;
      for (const auto& [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= map.height || cc < 0 || cc >= map.width) continue;
        if (map.at(rr, cc) != id) boundary = true;
      }
      if (boundary)
        for (auto& ch : color) ch = static_cast<std::uint8_t>(ch / 2);
      out.set(r, c, color);
    }
  }
  return out;
}

}  // namespace oass::io
