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

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oass/common.hpp"
#include "oass/core.hpp"

namespace oass::io {

namespace detail_json {

inline nlohmann::ordered_json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

inline void save_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::vector<std::uint32_t> runs_from_json(const nlohmann::ordered_json& j) {
  std::vector<std::uint32_t> runs;
  for (const auto& v : j) {
    const std::int64_t n = v.get<std::int64_t>();
    if (n < 0) throw IoError("negative run length in mask");
    runs.push_back(static_cast<std::uint32_t>(n));
  }
  return runs;
}

}  // namespace detail_json

/// Schema:
///   {"height": H, "width": W,
///    "instances": [{"category": c, "score": s,
///                   "visible": [runs...], "amodal": [runs...]}, ...]}
/// Runs are column-major RLE counts starting with the zero-count.
inline std::vector<InstanceAnnotation> load_instances(const std::string& path, int* height = nullptr,
                                                      int* width = nullptr) {
  const auto j = detail_json::load_json_file(path);
  try {
    const int h = j.at("height").get<int>();
    const int w = j.at("width").get<int>();
    if (height) *height = h;
    if (width) *width = w;
    std::vector<InstanceAnnotation> out;
    std::size_t index = 0;
    for (const auto& inst : j.at("instances")) {
      try {
        out.emplace_back(inst.at("category").get<int>(), inst.at("score").get<double>(),
                         BinaryMask(h, w, detail_json::runs_from_json(inst.at("visible"))),
                         BinaryMask(h, w, detail_json::runs_from_json(inst.at("amodal"))));
      } catch (const ValidationError& e) {
        throw IoError("'" + path + "': instance " + std::to_string(index) + ": " + e.what());
      }
      ++index;
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

inline void save_instances(const std::string& path, const std::vector<InstanceAnnotation>& instances,
                           int height, int width) {
  nlohmann::ordered_json j;
  j["height"] = height;
  j["width"] = width;
  j["instances"] = nlohmann::ordered_json::array();
  for (const auto& inst : instances) {
    detail::require(inst.visible.height() == height && inst.visible.width() == width,
                    "instance mask dimension mismatch");
    nlohmann::ordered_json e;
    e["category"] = inst.category;
    e["score"] = inst.score;
    e["visible"] = inst.visible.runs();
    e["amodal"] = inst.amodal.runs();
    j["instances"].push_back(std::move(e));
  }
  detail_json::save_json_file(path, j);
}

/// Schema:
///   {"height": H, "width": W,
///    "segments": [{"id": i, "category": c, "score": s, "amodal": [runs...]}]}
/// The pixel map itself lives in the companion panoptic PNG.
inline std::vector<AmodalSegment> load_amodal_segments(const std::string& path) {
  const auto j = detail_json::load_json_file(path);
  try {
    const int h = j.at("height").get<int>();
    const int w = j.at("width").get<int>();
    std::vector<AmodalSegment> out;
    for (const auto& seg : j.at("segments")) {
      AmodalSegment s;
      s.id = seg.at("id").get<std::uint32_t>();
      s.class_id = seg.at("category").get<int>();
      s.score = seg.at("score").get<double>();
      s.amodal = BinaryMask(h, w, detail_json::runs_from_json(seg.at("amodal")));
      out.push_back(std::move(s));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  } catch (const ValidationError& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

inline void save_amodal_segments(const std::string& path, const std::vector<AmodalSegment>& segments,
                                 int height, int width) {
  nlohmann::ordered_json j;
  j["height"] = height;
  j["width"] = width;
  j["segments"] = nlohmann::ordered_json::array();
  for (const auto& seg : segments) {
    detail::require(seg.amodal.height() == height && seg.amodal.width() == width,
                    "segment mask dimension mismatch");
    nlohmann::ordered_json e;
    e["id"] = seg.id;
    e["category"] = seg.class_id;
    e["score"] = seg.score;
    e["amodal"] = seg.amodal.runs();
    j["segments"].push_back(std::move(e));
  }
  detail_json::save_json_file(path, j);
}

}  // namespace oass::io
