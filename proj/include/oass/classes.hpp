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
#include <string>
#include <vector>

#include "oass/common.hpp"

namespace oass {

struct ClassInfo {
  std::string name;
  bool is_thing = false;
  std::array<std::uint8_t, 3> color{0, 0, 0};
};

/// The set of semantic classes a dataset is evaluated against. Stuff classes
/// come first by convention but any id order is accepted.
class ClassUniverse {
 public:
  ClassUniverse() = default;
  explicit ClassUniverse(std::vector<ClassInfo> classes) : classes_(std::move(classes)) {}

  int num_classes() const { return static_cast<int>(classes_.size()); }

  bool is_thing(int class_id) const {
    detail::require(class_id >= 0 && class_id < num_classes(),
                    "class id " + std::to_string(class_id) + " outside universe");
    return classes_[static_cast<std::size_t>(class_id)].is_thing;
  }

  const ClassInfo& info(int class_id) const {
    detail::require(class_id >= 0 && class_id < num_classes(),
                    "class id " + std::to_string(class_id) + " outside universe");
    return classes_[static_cast<std::size_t>(class_id)];
  }

  const std::string& name(int class_id) const { return info(class_id).name; }

  const std::vector<ClassInfo>& classes() const { return classes_; }

  /// The 18-class street-scene universe this toolkit evaluates by default:
  /// 11 stuff classes followed by 7 thing classes.
  static const ClassUniverse& street18() {
    static const ClassUniverse universe{{
        {"road", false, {128, 64, 128}},
        {"sidewalk", false, {244, 35, 232}},
        {"building", false, {70, 70, 70}},
        {"wall", false, {102, 102, 156}},
        {"fence", false, {190, 153, 153}},
        {"pole", false, {153, 153, 153}},
        {"traffic-light", false, {250, 170, 30}},
        {"traffic-sign", false, {220, 220, 0}},
        {"vegetation", false, {107, 142, 35}},
        {"terrain", false, {152, 251, 152}},
        {"sky", false, {70, 130, 180}},
        {"pedestrians", true, {220, 20, 60}},
        {"cyclists", true, {255, 0, 0}},
        {"car", true, {0, 0, 142}},
        {"truck", true, {0, 0, 70}},
        {"other-vehicles", true, {0, 60, 100}},
        {"van", true, {0, 80, 100}},
        {"two-wheeler", true, {0, 0, 230}},
    }};
    return universe;
  }

 private:
  std::vector<ClassInfo> classes_;
};

namespace classes {
// Ids inside ClassUniverse::street18(), for readable fixtures.
inline constexpr int kRoad = 0;
inline constexpr int kSidewalk = 1;
inline constexpr int kBuilding = 2;
inline constexpr int kWall = 3;
inline constexpr int kFence = 4;
inline constexpr int kPole = 5;
inline constexpr int kTrafficLight = 6;
inline constexpr int kTrafficSign = 7;
inline constexpr int kVegetation = 8;
inline constexpr int kTerrain = 9;
inline constexpr int kSky = 10;
inline constexpr int kPedestrians = 11;
inline constexpr int kCyclists = 12;
inline constexpr int kCar = 13;
inline constexpr int kTruck = 14;
inline constexpr int kOtherVehicles = 15;
inline constexpr int kVan = 16;
inline constexpr int kTwoWheeler = 17;
}  // namespace classes

}  // namespace oass
