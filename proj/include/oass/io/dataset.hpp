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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oass/common.hpp"
#include "oass/io/instance_json.hpp"
#include "oass/io/png_io.hpp"
#include "oass/metrics.hpp"
#include "oass/oafusion.hpp"

namespace oass::io {

/// Per-image files of a dataset directory. The required trio is semantic
/// PNG, instances JSON, and panoptic PNG; the image PNG and the dedicated
/// amodal files are optional (ground-truth sets reuse the instances JSON for
/// the amodal views).
struct DatasetEntry {
  std::string id;
  std::filesystem::path image;             // <id>_image.png (optional)
  std::filesystem::path semantic;          // <id>_semantic.png
  std::filesystem::path instances;         // <id>_instances.json
  std::filesystem::path panoptic;          // <id>_panoptic.png
  std::filesystem::path amodal_instances;  // <id>_amodal_instances.json (optional)
  std::filesystem::path amodal_panoptic;   // <id>_amodal_panoptic.json (optional)
};

struct DatasetLayout {
  std::filesystem::path root;
  std::vector<DatasetEntry> entries;  // sorted by id

  /// Indexes a directory by the `<id>_semantic.png` pattern.
  static DatasetLayout scan(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root))
      throw IoError("dataset root '" + root.string() + "' is not a directory");
    DatasetLayout layout;
    layout.root = root;
    const std::string suffix = "_semantic.png";
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      if (name.size() > suffix.size() && name.ends_with(suffix))
        ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) {
      DatasetEntry e;
      e.id = id;
      e.semantic = root / (id + "_semantic.png");
      auto optional = [&root, &id](const std::string& tail) {
        const auto p = root / (id + tail);
        return std::filesystem::exists(p) ? p : std::filesystem::path{};
      };
      e.image = optional("_image.png");
      e.instances = optional("_instances.json");
      e.panoptic = optional("_panoptic.png");
      e.amodal_instances = optional("_amodal_instances.json");
      e.amodal_panoptic = optional("_amodal_panoptic.json");
      layout.entries.push_back(std::move(e));
    }
    return layout;
  }
};

/// Loads the five-output bundle for one entry. Missing dedicated amodal
/// files degrade to the instances JSON (whose entries carry both masks), and
/// a missing amodal-panoptic JSON derives the segment list from the amodal
/// instances.
inline OassBundle load_bundle(const DatasetEntry& entry, int num_classes = 18,
                              const ClassUniverse& universe = ClassUniverse::street18()) {
  detail::require(!entry.semantic.empty(), "entry '" + entry.id + "' lacks a semantic PNG");
  if (entry.instances.empty())
    throw IoError("entry '" + entry.id + "' lacks an instances JSON");
  if (entry.panoptic.empty())
    throw IoError("entry '" + entry.id + "' lacks a panoptic PNG");

  OassBundle bundle;
  bundle.semantic = load_semantic(entry.semantic.string(), num_classes);
  bundle.instances = load_instances(entry.instances.string());
  bundle.amodal_instances = entry.amodal_instances.empty()
                                ? bundle.instances
                                : load_instances(entry.amodal_instances.string());
  bundle.panoptic = load_panoptic(entry.panoptic.string(), universe);
  bundle.amodal_panoptic.panoptic = bundle.panoptic;
  if (!entry.amodal_panoptic.empty()) {
    bundle.amodal_panoptic.segments = load_amodal_segments(entry.amodal_panoptic.string());
  } else {
    std::map<int, int> next_index;
    for (const auto& inst : bundle.amodal_instances) {
      if (!universe.is_thing(inst.category)) continue;
      int& counter = next_index[inst.category];
      ++counter;
      bundle.amodal_panoptic.segments.push_back(
          {encode_segment_id(inst.category, counter), inst.category, inst.score, inst.amodal});
    }
  }
  return bundle;
}

inline std::map<std::string, OassBundle> load_dataset(const std::filesystem::path& root,
                                                      int num_classes = 18,
                                                      const ClassUniverse& universe =
                                                          ClassUniverse::street18()) {
  const DatasetLayout layout = DatasetLayout::scan(root);
  std::map<std::string, OassBundle> out;
  for (const auto& entry : layout.entries) out[entry.id] = load_bundle(entry, num_classes, universe);
  return out;
}

/// Writes a full bundle under `root/<id>_*`, including the dedicated amodal
/// files.
inline void save_bundle(const std::filesystem::path& root, const std::string& id,
                        const OassBundle& bundle) {
  std::filesystem::create_directories(root);
  const int h = bundle.semantic.height, w = bundle.semantic.width;
  save_semantic((root / (id + "_semantic.png")).string(), bundle.semantic);
  save_instances((root / (id + "_instances.json")).string(), bundle.instances, h, w);
  save_instances((root / (id + "_amodal_instances.json")).string(), bundle.amodal_instances, h, w);
  save_panoptic((root / (id + "_panoptic.png")).string(), bundle.panoptic);
  save_amodal_segments((root / (id + "_amodal_panoptic.json")).string(),
                       bundle.amodal_panoptic.segments, h, w);
}

inline OassBundle bundle_of(const OassOutputs& outputs) {
  OassBundle b;
  b.semantic = outputs.semantic;
  b.instances = outputs.instances;
  b.amodal_instances = outputs.amodal_instances;
  b.panoptic = outputs.panoptic;
  b.amodal_panoptic = outputs.amodal_panoptic;
  return b;
}

}  // namespace oass::io
