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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oass/io/dataset.hpp"
#include "oass/io/instance_json.hpp"
#include "oass/io/png_io.hpp"
#include "oass/io/probs.hpp"
#include "oass/io/render.hpp"
#include "oass/io/report_json.hpp"
#include "oass/rng.hpp"

namespace oass::io {
namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("oass_io_test_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
};

using PngIo = TempDir;
using InstanceJson = TempDir;
using ProbsIo = TempDir;
using Dataset = TempDir;

TEST_F(PngIo, SemanticRoundTripBitExact) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    SemanticMap map(static_cast<int>(rng.uniform_int(1, 40)),
                    static_cast<int>(rng.uniform_int(1, 40)), 19);
    for (auto& v : map.labels)
      v = rng.bernoulli(0.1) ? kIgnoreLabel : static_cast<std::uint8_t>(rng.uniform_int(0, 18));
    save_semantic(path("sem.png"), map);
    const SemanticMap loaded = load_semantic(path("sem.png"), 19);
    EXPECT_EQ(loaded, map);
  }
}

TEST_F(PngIo, AllIgnoreFile) {
  SemanticMap map(4, 6, 19, kIgnoreLabel);
  save_semantic(path("ig.png"), map);
  const SemanticMap loaded = load_semantic(path("ig.png"));
  for (const auto v : loaded.labels) EXPECT_EQ(v, kIgnoreLabel);
}

TEST_F(PngIo, SemanticRejectsWrongFormat) {
  // RGB file is not a valid semantic map.
  Image img(4, 4, {10, 20, 30});
  save_image(path("rgb.png"), img);
  EXPECT_THROW(load_semantic(path("rgb.png")), IoError);
  // out-of-range label for a smaller universe
  SemanticMap map(2, 2, 19, 18);
  save_semantic(path("c18.png"), map);
  EXPECT_THROW(load_semantic(path("c18.png"), 18), IoError);
  EXPECT_NO_THROW(load_semantic(path("c18.png"), 19));
  // not a png at all
  std::ofstream(path("junk.png")) << "not a png";
  EXPECT_THROW(load_semantic(path("junk.png")), IoError);
}

TEST_F(PngIo, PanopticRoundTripAndCodec) {
  PanopticMap pm(3, 5);
  pm.segments.push_back({encode_segment_id(13, 7), 13, true});
  pm.segments.push_back({encode_segment_id(0, 1), 0, false});
  pm.at(0, 0) = 13007;
  pm.at(2, 4) = 13007;
  pm.at(1, 1) = 1;
  save_panoptic(path("pan.png"), pm);
  const PanopticMap loaded = load_panoptic(path("pan.png"));
  EXPECT_EQ(loaded.ids, pm.ids);
  ASSERT_EQ(loaded.segments.size(), 2u);
  EXPECT_EQ(loaded.segments[1].id, 13007u);
  EXPECT_EQ(loaded.segments[1].class_id, 13);
  EXPECT_TRUE(loaded.segments[1].is_thing);
  EXPECT_FALSE(loaded.segments[0].is_thing);
}

TEST_F(PngIo, PanopticVoidOnlyAndMaxId) {
  PanopticMap pm(2, 2);
  save_panoptic(path("void.png"), pm);
  const PanopticMap loaded = load_panoptic(path("void.png"));
  EXPECT_TRUE(loaded.segments.empty());

  PanopticMap big(1, 1);
  big.segments.push_back({encode_segment_id(17, 999), 17, true});
  big.at(0, 0) = 17999;  // largest id in the default universe, fits 16 bits
  save_panoptic(path("max.png"), big);
  EXPECT_EQ(load_panoptic(path("max.png")).at(0, 0), 17999u);
}

TEST_F(PngIo, ImageRoundTrip) {
  Rng rng(7);
  Image img(9, 13);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  save_image(path("img.png"), img);
  EXPECT_EQ(load_image(path("img.png")), img);
}

TEST_F(InstanceJson, RoundTripPreservesEverything) {
  std::vector<std::uint8_t> vis(6 * 6, 0), amo(6 * 6, 0);
  for (int i = 0; i < 6; ++i) amo[static_cast<std::size_t>(i) * 6 + 2] = 1;
  vis[2 * 6 + 2] = 1;
  std::vector<InstanceAnnotation> insts{
      InstanceAnnotation(13, 0.75, BinaryMask::from_dense(vis, 6, 6),
                         BinaryMask::from_dense(amo, 6, 6)),
  };
  save_instances(path("inst.json"), insts, 6, 6);
  int h = 0, w = 0;
  const auto loaded = load_instances(path("inst.json"), &h, &w);
  EXPECT_EQ(h, 6);
  EXPECT_EQ(w, 6);
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].category, 13);
  EXPECT_DOUBLE_EQ(loaded[0].score, 0.75);
  EXPECT_EQ(loaded[0].visible, insts[0].visible);
  EXPECT_EQ(loaded[0].amodal, insts[0].amodal);
}

TEST_F(InstanceJson, EmptyListRoundTrip) {
  save_instances(path("empty.json"), {}, 4, 4);
  EXPECT_TRUE(load_instances(path("empty.json")).empty());
}

TEST_F(InstanceJson, ContainmentViolationNamesIndex) {
  std::ofstream(path("bad.json")) << R"({"height":2,"width":2,"instances":[
    {"category":13,"score":0.9,"visible":[0,4],"amodal":[0,4]},
    {"category":13,"score":0.9,"visible":[0,4],"amodal":[0,1,3]}
  ]})";
  try {
    load_instances(path("bad.json"));
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("instance 1"), std::string::npos);
  }
}

TEST_F(InstanceJson, AmodalSegmentsRoundTrip) {
  std::vector<std::uint8_t> m(4 * 4, 1);
  std::vector<AmodalSegment> segs{
      {encode_segment_id(11, 1), 11, 0.9, BinaryMask::from_dense(m, 4, 4)}};
  save_amodal_segments(path("ap.json"), segs, 4, 4);
  const auto loaded = load_amodal_segments(path("ap.json"));
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].id, segs[0].id);
  EXPECT_EQ(loaded[0].class_id, 11);
  EXPECT_DOUBLE_EQ(loaded[0].score, 0.9);
  EXPECT_EQ(loaded[0].amodal, segs[0].amodal);
}

TEST_F(ProbsIo, RoundTripBitExact) {
  Rng rng(11);
  ProbTensor t(3, 4, 5);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) {
      double sum = 0.0;
      std::array<double, 5> raw{};
      for (auto& v : raw) {
        v = rng.uniform(0.01, 1.0);
        sum += v;
      }
      for (int ch = 0; ch < 5; ++ch)
        t.at(r, c, ch) = static_cast<float>(raw[static_cast<std::size_t>(ch)] / sum);
    }
  save_probs(path("p.bin"), t);
  const ProbTensor loaded = load_probs(path("p.bin"));
  EXPECT_EQ(loaded.height, 3);
  EXPECT_EQ(loaded.width, 4);
  EXPECT_EQ(loaded.channels, 5);
  EXPECT_EQ(loaded.values, t.values);
}

TEST_F(ProbsIo, MinimalFileLoads) {
  ProbTensor t(1, 1, 2);
  t.at(0, 0, 0) = 0.5f;
  t.at(0, 0, 1) = 0.5f;
  save_probs(path("mini.bin"), t);
  EXPECT_NO_THROW(load_probs(path("mini.bin")));
}

TEST_F(ProbsIo, DistinctErrorsForBadMagicTruncationAndNormalization) {
  ProbTensor t(1, 1, 2);
  t.at(0, 0, 0) = 0.5f;
  t.at(0, 0, 1) = 0.5f;
  save_probs(path("ok.bin"), t);

  // bad magic
  {
    auto bytes = detail_raw::read_file(path("ok.bin"));
    bytes[0] = 'X';
    detail_raw::write_file(path("magic.bin"), bytes);
    try {
      load_probs(path("magic.bin"));
      FAIL();
    } catch (const IoError& e) {
      EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
    }
  }
  // truncated payload
  {
    auto bytes = detail_raw::read_file(path("ok.bin"));
    bytes.pop_back();
    detail_raw::write_file(path("trunc.bin"), bytes);
    try {
      load_probs(path("trunc.bin"));
      FAIL();
    } catch (const IoError& e) {
      EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    }
  }
  // non-normalized
  {
    ProbTensor bad(1, 1, 2);
    bad.values = {0.7f, 0.7f};
    std::vector<std::uint8_t> bytes;
    bytes.insert(bytes.end(), kProbMagic, kProbMagic + 8);
    detail_raw::to_le<std::uint32_t>(1, bytes);
    detail_raw::to_le<std::uint32_t>(1, bytes);
    detail_raw::to_le<std::uint32_t>(2, bytes);
    detail_raw::to_le<float>(0.7f, bytes);
    detail_raw::to_le<float>(0.7f, bytes);
    detail_raw::write_file(path("norm.bin"), bytes);
    try {
      load_probs(path("norm.bin"));
      FAIL();
    } catch (const IoError& e) {
      EXPECT_NE(std::string(e.what()).find("normalized"), std::string::npos);
    }
  }
}

TEST_F(ProbsIo, TensorRoundTrip) {
  nn::Tensor t({2, 3});
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = 0.5 * static_cast<double>(i) - 1.25;
  save_tensor(path("t.bin"), t);
  const nn::Tensor loaded = load_tensor(path("t.bin"));
  EXPECT_EQ(loaded.shape, t.shape);
  EXPECT_EQ(loaded.data, t.data);
  EXPECT_THROW(load_tensor(path("nonexistent.bin")), IoError);
}

TEST(RenderColormap, PaletteValues) {
  SemanticMap sm(1, 3, 18);
  sm.at(0, 0) = classes::kRoad;
  sm.at(0, 1) = classes::kPedestrians;
  sm.at(0, 2) = kIgnoreLabel;
  const Image img = render_semantic(sm);
  EXPECT_EQ(img.at(0, 0), (Rgb{128, 64, 128}));
  EXPECT_EQ(img.at(0, 1), (Rgb{220, 20, 60}));
  EXPECT_EQ(img.at(0, 2), (Rgb{0, 0, 0}));
}

TEST(RenderColormap, ClassOutsidePaletteThrows) {
  SemanticMap sm(1, 1, 30, 25);
  EXPECT_THROW(render_semantic(sm), ValidationError);
}

TEST(RenderColormap, PanopticBoundariesDarkened) {
  PanopticMap pm(3, 3);
  const std::uint32_t id = encode_segment_id(classes::kCar, 1);
  pm.segments.push_back({id, classes::kCar, true});
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) pm.at(r, c) = id;
  const Image img = render_panoptic(pm);
  // interior pixel keeps the full color, corner pixel is a boundary only if
  // a neighbour differs; a full-frame segment has no boundary at all
  EXPECT_EQ(img.at(1, 1), (Rgb{0, 0, 142}));
  EXPECT_EQ(img.at(0, 0), (Rgb{0, 0, 142}));
  // carve a void pixel: neighbours become boundaries
  pm.at(0, 1) = kVoidId;
  const Image img2 = render_panoptic(pm);
  EXPECT_EQ(img2.at(0, 0), (Rgb{0, 0, 71}));
  EXPECT_EQ(img2.at(0, 1), (Rgb{0, 0, 0}));
}

TEST_F(Dataset, ScanLoadSaveCycle) {
  OassBundle bundle;
  const int h = 8, w = 8;
  bundle.semantic = SemanticMap(h, w, 18, classes::kRoad);
  std::vector<std::uint8_t> m(static_cast<std::size_t>(h) * w, 0);
  for (int r = 2; r < 5; ++r)
    for (int c = 2; c < 6; ++c) {
      m[static_cast<std::size_t>(r) * w + c] = 1;
      bundle.semantic.at(r, c) = classes::kCar;
    }
  const BinaryMask mask = BinaryMask::from_dense(m, h, w);
  bundle.instances.emplace_back(classes::kCar, 1.0, mask, mask);
  bundle.amodal_instances = bundle.instances;
  bundle.panoptic = PanopticMap(h, w);
  const std::uint32_t car_id = encode_segment_id(classes::kCar, 1);
  const std::uint32_t road_id = encode_segment_id(classes::kRoad, 1);
  bundle.panoptic.segments.push_back({car_id, classes::kCar, true});
  bundle.panoptic.segments.push_back({road_id, classes::kRoad, false});
  for (std::size_t i = 0; i < bundle.panoptic.ids.size(); ++i)
    bundle.panoptic.ids[i] = m[i] ? car_id : road_id;
  bundle.amodal_panoptic.panoptic = bundle.panoptic;
  bundle.amodal_panoptic.segments.push_back({car_id, classes::kCar, 1.0, mask});

  save_bundle(dir_, "scene0", bundle);
  const auto layout = DatasetLayout::scan(dir_);
  ASSERT_EQ(layout.entries.size(), 1u);
  EXPECT_EQ(layout.entries[0].id, "scene0");
  EXPECT_FALSE(layout.entries[0].amodal_instances.empty());

  const OassBundle loaded = load_bundle(layout.entries[0]);
  EXPECT_EQ(loaded.semantic, bundle.semantic);
  EXPECT_EQ(loaded.panoptic.ids, bundle.panoptic.ids);
  auto sorted_segments = bundle.panoptic.segments;
  std::sort(sorted_segments.begin(), sorted_segments.end(),
            [](const SegmentInfo& a, const SegmentInfo& b) { return a.id < b.id; });
  EXPECT_EQ(loaded.panoptic.segments, sorted_segments);  // loader sorts the table
  ASSERT_EQ(loaded.instances.size(), 1u);
  ASSERT_EQ(loaded.amodal_panoptic.segments.size(), 1u);
  EXPECT_EQ(loaded.amodal_panoptic.segments[0].amodal, mask);

  // Ground-truth style layout: no dedicated amodal files.
  std::filesystem::remove(dir_ / "scene0_amodal_instances.json");
  std::filesystem::remove(dir_ / "scene0_amodal_panoptic.json");
  const auto layout2 = DatasetLayout::scan(dir_);
  const OassBundle degraded = load_bundle(layout2.entries[0]);
  ASSERT_EQ(degraded.amodal_instances.size(), 1u);
  ASSERT_EQ(degraded.amodal_panoptic.segments.size(), 1u);
  EXPECT_EQ(degraded.amodal_panoptic.segments[0].amodal, mask);
}

TEST(ClassUniverse, Street18HasElevenStuffSevenThings) {
  const auto& u = ClassUniverse::street18();
  ASSERT_EQ(u.num_classes(), 18);
  int stuff = 0, things = 0;
  for (int c = 0; c < u.num_classes(); ++c) (u.is_thing(c) ? things : stuff)++;
  EXPECT_EQ(stuff, 11);
  EXPECT_EQ(things, 7);
  EXPECT_EQ(u.name(0), "road");
  EXPECT_EQ(u.name(11), "pedestrians");
  EXPECT_EQ(u.name(13), "car");
}

TEST(ReportJson, FixedKeySchema) {
  OassReport rep;
  rep.iou = ClassReport::from_values({{0, 0.5}, {13, 1.0}});
  rep.miou = rep.iou.mean;
  const auto j = report_to_json(rep);
  for (const auto* key : {"miou", "map", "maap", "mpq", "mapq", "per_class"})
    EXPECT_TRUE(j.contains(key)) << key;
  for (const auto* metric : {"iou", "ap", "aap", "pq", "apq"})
    EXPECT_TRUE(j.at("per_class").contains(metric)) << metric;
  EXPECT_DOUBLE_EQ(j.at("per_class").at("iou").at("road").get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j.at("per_class").at("iou").at("car").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j.at("miou").get<double>(), 0.75);
}

TEST_F(Dataset, MissingRequiredFileThrows) {
  SemanticMap sm(2, 2, 18, 0);
  save_semantic((dir_ / "x_semantic.png").string(), sm);
  const auto layout = DatasetLayout::scan(dir_);
  ASSERT_EQ(layout.entries.size(), 1u);
  EXPECT_THROW(load_bundle(layout.entries[0]), IoError);
}

}  // namespace
}  // namespace oass::io
