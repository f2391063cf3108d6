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

#include <iomanip>
#include <ostream>
#include <set>
#include <string>

#include <json.hpp>

#include "oass/classes.hpp"
#include "oass/metrics.hpp"

namespace oass::io {

namespace detail_report {

inline std::string class_key(int cls, const ClassUniverse& universe) {
  if (cls >= 0 && cls < universe.num_classes()) return universe.name(cls);
  return "class_" + std::to_string(cls);
}

inline nlohmann::ordered_json per_class_json(const ClassReport& report,
                                             const ClassUniverse& universe) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [cls, v] : report.per_class) j[class_key(cls, universe)] = v;
  return j;
}

}  // namespace detail_report

inline nlohmann::ordered_json report_to_json(const OassReport& report,
                                             const ClassUniverse& universe =
                                                 ClassUniverse::street18()) {
  nlohmann::ordered_json j;
  j["miou"] = report.miou;
  j["map"] = report.map;
  j["maap"] = report.maap;
  j["mpq"] = report.mpq;
  j["mapq"] = report.mapq;
  j["per_class"]["iou"] = detail_report::per_class_json(report.iou, universe);
  j["per_class"]["ap"] = detail_report::per_class_json(report.ap, universe);
  j["per_class"]["aap"] = detail_report::per_class_json(report.aap, universe);
  j["per_class"]["pq"] = detail_report::per_class_json(report.pq, universe);
  j["per_class"]["apq"] = detail_report::per_class_json(report.apq, universe);
  return j;
}

/// Fixed four-decimal table, one row per class plus the means.
inline void print_report_table(std::ostream& os, const OassReport& report,
                               const ClassUniverse& universe = ClassUniverse::street18()) {
  std::set<int> all_classes;
  for (const auto* rep : {&report.iou, &report.ap, &report.aap, &report.pq, &report.apq})
    for (const auto& [cls, v] : rep->per_class) all_classes.insert(cls);

  const auto old_flags = os.flags();
  os << std::left << std::setw(16) << "class" << std::right;
  for (const auto* name : {"iou", "ap", "aap", "pq", "apq"}) os << std::setw(9) << name;
  os << '\n';
  auto cell = [&os](const ClassReport& rep, int cls) {
    const auto it = rep.per_class.find(cls);
    if (it == rep.per_class.end()) {
      os << std::setw(9) << "-";
    } else {
      os << std::setw(9) << std::fixed << std::setprecision(4) << it->second;
    }
  };
  for (const int cls : all_classes) {
    os << std::left << std::setw(16) << detail_report::class_key(cls, universe) << std::right;
    for (const auto* rep : {&report.iou, &report.ap, &report.aap, &report.pq, &report.apq})
      cell(*rep, cls);
    os << '\n';
  }
  os << std::left << std::setw(16) << "mean" << std::right;
  for (const double v : {report.miou, report.map, report.maap, report.mpq, report.mapq})
    os << std::setw(9) << std::fixed << std::setprecision(4) << v;
  os << '\n';
  if (report.iou.no_classes_evaluated()) os << "note: no classes evaluated for iou\n";
  os.flags(old_flags);
}

}  // namespace oass::io
